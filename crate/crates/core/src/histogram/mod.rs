//! Joint-pattern histograms.
//!
//! A [`PatternHistogram`] counts, for every joint output pattern of the `n`
//! combined algorithms, how many labelled pixels were foreground and how
//! many were background. Bit `j` of a pattern is the output of algorithm `j`
//! in canonical order. Every metric of a pixelwise combiner is a function of
//! these counts, so pixels are read once.

mod cache;

use std::collections::HashMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::{BinaryMask, Corpus, CorpusError, GtMask, Label, VideoRef};

pub use cache::{read_cache, read_cache_file, write_cache, write_cache_file, CacheError, CACHE_MAGIC, CACHE_VERSION};

/// Patterns are stored as `u32`.
pub const MAX_ALGORITHMS: usize = 32;
const DENSE_BUILD_LIMIT: usize = 16;
pub const DENSE_LIMIT: usize = 20;

fn frame_prefix(frame: &Option<usize>) -> String {
    frame.map(|f| format!("frame {f}: ")).unwrap_or_default()
}

#[derive(Debug, Error)]
pub enum HistogramError {
    #[error("{0} algorithms exceed the supported maximum of 32")]
    TooManyAlgorithms(usize),
    #[error("{}{what} has {found} entries, expected {expected}", frame_prefix(.frame))]
    LengthMismatch {
        frame: Option<usize>,
        what: String,
        expected: usize,
        found: usize,
    },
    #[error("frame {frame}: algorithm {algorithm} is {found:?}, ground truth is {expected:?}")]
    DimensionMismatch {
        frame: usize,
        algorithm: usize,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("pattern {pattern:#x} does not fit in {n} bits")]
    PatternOutOfRange { pattern: u64, n: usize },
    #[error("subset index {index} out of range for {n} algorithms")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("subset index {0} appears twice")]
    DuplicateIndex(usize),
    #[error("histograms have different arity ({0} vs {1})")]
    ArityMismatch(usize, usize),
    #[error("dense form needs n <= {DENSE_LIMIT}, histogram has n = {0}")]
    TooWideForDense(usize),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PatternCount {
    pub pattern: u32,
    pub fg: u64,
    pub bg: u64,
}

/// Sparse, immutable counts sorted by pattern; `(0, 0)` entries are absent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternHistogram {
    n: usize,
    entries: Vec<PatternCount>,
    total_fg: u64,
    total_bg: u64,
}

fn check_arity(n: usize) -> Result<(), HistogramError> {
    if n > MAX_ALGORITHMS {
        return Err(HistogramError::TooManyAlgorithms(n));
    }
    Ok(())
}

fn pattern_limit(n: usize) -> u64 {
    1u64 << n
}

impl PatternHistogram {
    pub fn empty(n: usize) -> Self {
        assert!(n <= MAX_ALGORITHMS);
        Self {
            n,
            entries: Vec::new(),
            total_fg: 0,
            total_bg: 0,
        }
    }

    /// Sums `(pattern, fg, bg)` triples; repeated patterns accumulate.
    pub fn from_counts<I>(n: usize, counts: I) -> Result<Self, HistogramError>
    where
        I: IntoIterator<Item = (u32, u64, u64)>,
    {
        check_arity(n)?;
        let mut map: HashMap<u32, (u64, u64)> = HashMap::new();
        for (pattern, fg, bg) in counts {
            if u64::from(pattern) >= pattern_limit(n) {
                return Err(HistogramError::PatternOutOfRange {
                    pattern: pattern.into(),
                    n,
                });
            }
            let e = map.entry(pattern).or_default();
            e.0 += fg;
            e.1 += bg;
        }
        Ok(Self::from_map(n, map))
    }

    fn from_map(n: usize, map: HashMap<u32, (u64, u64)>) -> Self {
        let mut entries: Vec<PatternCount> = map
            .into_iter()
            .filter(|(_, (fg, bg))| fg + bg > 0)
            .map(|(pattern, (fg, bg))| PatternCount { pattern, fg, bg })
            .collect();
        entries.sort_unstable_by_key(|e| e.pattern);
        Self::from_sorted(n, entries)
    }

    fn from_sorted(n: usize, entries: Vec<PatternCount>) -> Self {
        let total_fg = entries.iter().map(|e| e.fg).sum();
        let total_bg = entries.iter().map(|e| e.bg).sum();
        Self {
            n,
            entries,
            total_fg,
            total_bg,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[PatternCount] {
        &self.entries
    }

    pub fn total_fg(&self) -> u64 {
        self.total_fg
    }

    pub fn total_bg(&self) -> u64 {
        self.total_bg
    }

    /// Number of labelled (non-IGNORE) pixels.
    pub fn total(&self) -> u64 {
        self.total_fg + self.total_bg
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `(fg, bg)` for `pattern`, zero when unseen.
    pub fn get(&self, pattern: u32) -> (u64, u64) {
        match self.entries.binary_search_by_key(&pattern, |e| e.pattern) {
            Ok(i) => (self.entries[i].fg, self.entries[i].bg),
            Err(_) => (0, 0),
        }
    }

    pub fn to_dense(&self) -> Result<DenseHistogram, HistogramError> {
        if self.n > DENSE_LIMIT {
            return Err(HistogramError::TooWideForDense(self.n));
        }
        let size = 1usize << self.n;
        let mut fg = vec![0; size];
        let mut bg = vec![0; size];
        for e in &self.entries {
            fg[e.pattern as usize] = e.fg;
            bg[e.pattern as usize] = e.bg;
        }
        Ok(DenseHistogram {
            n: self.n,
            fg,
            bg,
            total_fg: self.total_fg,
            total_bg: self.total_bg,
        })
    }
}

/// Dense counts indexed by pattern, for small `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenseHistogram {
    pub n: usize,
    pub fg: Vec<u64>,
    pub bg: Vec<u64>,
    pub total_fg: u64,
    pub total_bg: u64,
}

enum Store {
    Dense(Vec<[u64; 2]>),
    Sparse(HashMap<u32, [u64; 2]>),
}

/// Accumulates pixels frame by frame.
pub struct HistogramBuilder {
    n: usize,
    store: Store,
}

impl HistogramBuilder {
    pub fn new(n: usize) -> Result<Self, HistogramError> {
        check_arity(n)?;
        let store = if n <= DENSE_BUILD_LIMIT {
            Store::Dense(vec![[0; 2]; 1 << n])
        } else {
            Store::Sparse(HashMap::new())
        };
        Ok(Self { n, store })
    }

    #[inline]
    pub fn add(&mut self, pattern: u32, fg: bool) {
        let slot = fg as usize ^ 1;
        match &mut self.store {
            Store::Dense(d) => d[pattern as usize][slot] += 1,
            Store::Sparse(m) => m.entry(pattern).or_default()[slot] += 1,
        }
    }

    /// Adds one aligned frame: a ground truth and one mask per algorithm.
    pub fn add_frame(&mut self, frame: usize, gt: &GtMask, masks: &[&BinaryMask]) -> Result<(), HistogramError> {
        if masks.len() != self.n {
            return Err(HistogramError::LengthMismatch {
                frame: Some(frame),
                what: "mask list".into(),
                expected: self.n,
                found: masks.len(),
            });
        }
        if gt.labels.len() != gt.width * gt.height {
            return Err(HistogramError::LengthMismatch {
                frame: Some(frame),
                what: "ground-truth label list".into(),
                expected: gt.width * gt.height,
                found: gt.labels.len(),
            });
        }
        for (algorithm, m) in masks.iter().enumerate() {
            if (m.width(), m.height()) != (gt.width, gt.height) {
                return Err(HistogramError::DimensionMismatch {
                    frame,
                    algorithm,
                    expected: (gt.width, gt.height),
                    found: (m.width(), m.height()),
                });
            }
        }
        let words: Vec<&[u64]> = masks.iter().map(|m| m.words()).collect();
        for (chunk, labels) in gt.labels.chunks(64).enumerate() {
            for (bit, &label) in labels.iter().enumerate() {
                if label == Label::Ignore {
                    continue;
                }
                let mut pattern = 0u32;
                for (j, w) in words.iter().enumerate() {
                    pattern |= (((w[chunk] >> bit) & 1) as u32) << j;
                }
                self.add(pattern, label == Label::Fg);
            }
        }
        Ok(())
    }

    pub fn merge_from(&mut self, other: HistogramBuilder) {
        match (&mut self.store, other.store) {
            (Store::Dense(a), Store::Dense(b)) => {
                for (x, y) in a.iter_mut().zip(b) {
                    x[0] += y[0];
                    x[1] += y[1];
                }
            }
            (Store::Sparse(a), Store::Sparse(b)) => {
                for (k, v) in b {
                    let e = a.entry(k).or_default();
                    e[0] += v[0];
                    e[1] += v[1];
                }
            }
            _ => unreachable!("builders of equal arity share a store kind"),
        }
    }

    pub fn finish(self) -> PatternHistogram {
        let entries = match self.store {
            Store::Dense(d) => d
                .into_iter()
                .enumerate()
                .filter(|(_, c)| c[0] + c[1] > 0)
                .map(|(p, c)| PatternCount {
                    pattern: p as u32,
                    fg: c[0],
                    bg: c[1],
                })
                .collect(),
            Store::Sparse(m) => {
                let mut v: Vec<PatternCount> = m
                    .into_iter()
                    .filter(|(_, c)| c[0] + c[1] > 0)
                    .map(|(pattern, c)| PatternCount {
                        pattern,
                        fg: c[0],
                        bg: c[1],
                    })
                    .collect();
                v.sort_unstable_by_key(|e| e.pattern);
                v
            }
        };
        PatternHistogram::from_sorted(self.n, entries)
    }
}

/// Counts joint patterns over aligned frames; `algo_frames[j][f]` is frame `f`
/// of algorithm `j`. Frames are processed in parallel.
pub fn build_histogram(
    gt_frames: &[GtMask],
    algo_frames: &[Vec<BinaryMask>],
) -> Result<PatternHistogram, HistogramError> {
    let n = algo_frames.len();
    check_arity(n)?;
    for (j, stream) in algo_frames.iter().enumerate() {
        if stream.len() != gt_frames.len() {
            return Err(HistogramError::LengthMismatch {
                frame: None,
                what: format!("frame sequence of algorithm {j}"),
                expected: gt_frames.len(),
                found: stream.len(),
            });
        }
    }
    let builder = (0..gt_frames.len())
        .into_par_iter()
        .map(|f| {
            let mut b = HistogramBuilder::new(n)?;
            let masks: Vec<&BinaryMask> = algo_frames.iter().map(|s| &s[f]).collect();
            b.add_frame(f, &gt_frames[f], &masks)?;
            Ok::<_, HistogramError>(b)
        })
        .try_reduce(
            || HistogramBuilder::new(n).expect("arity checked"),
            |mut a, b| {
                a.merge_from(b);
                Ok(a)
            },
        )?;
    Ok(builder.finish())
}

/// Reads every frame of `video` from disk and counts its joint patterns.
pub fn histogram_for_video(corpus: &Corpus, video: &VideoRef) -> Result<PatternHistogram, HistogramError> {
    let n = corpus.algorithms().len();
    check_arity(n)?;
    let builder = (1..=video.frame_count)
        .into_par_iter()
        .map(|f| {
            let gt = corpus.read_groundtruth(video, f)?;
            let masks = (0..n)
                .map(|j| corpus.read_mask(video, j, f))
                .collect::<Result<Vec<_>, _>>()?;
            let refs: Vec<&BinaryMask> = masks.iter().collect();
            let mut b = HistogramBuilder::new(n)?;
            b.add_frame(f, &gt, &refs)?;
            Ok::<_, HistogramError>(b)
        })
        .try_reduce(
            || HistogramBuilder::new(n).expect("arity checked"),
            |mut a, b| {
                a.merge_from(b);
                Ok(a)
            },
        )?;
    Ok(builder.finish())
}

fn validate_subset(n: usize, subset: &[usize]) -> Result<(), HistogramError> {
    let mut seen = 0u64;
    for &i in subset {
        if i >= n {
            return Err(HistogramError::IndexOutOfRange { index: i, n });
        }
        if seen >> i & 1 == 1 {
            return Err(HistogramError::DuplicateIndex(i));
        }
        seen |= 1 << i;
    }
    Ok(())
}

/// Bit `i` of the result is bit `subset[i]` of `pattern`.
#[inline]
pub fn extract_bits(pattern: u32, subset: &[usize]) -> u32 {
    subset
        .iter()
        .enumerate()
        .fold(0, |acc, (i, &src)| acc | (((pattern >> src) & 1) << i))
}

/// Marginalizes onto the algorithms in `subset`; new bit `i` is old bit
/// `subset[i]`.
pub fn project(hist: &PatternHistogram, subset: &[usize]) -> Result<PatternHistogram, HistogramError> {
    validate_subset(hist.n, subset)?;
    let k = subset.len();
    if k <= DENSE_BUILD_LIMIT {
        let mut dense = vec![[0u64; 2]; 1 << k];
        for e in &hist.entries {
            let p = extract_bits(e.pattern, subset) as usize;
            dense[p][0] += e.fg;
            dense[p][1] += e.bg;
        }
        let entries = dense
            .into_iter()
            .enumerate()
            .filter(|(_, c)| c[0] + c[1] > 0)
            .map(|(p, c)| PatternCount {
                pattern: p as u32,
                fg: c[0],
                bg: c[1],
            })
            .collect();
        Ok(PatternHistogram::from_sorted(k, entries))
    } else {
        let mut map: HashMap<u32, (u64, u64)> = HashMap::new();
        for e in &hist.entries {
            let c = map.entry(extract_bits(e.pattern, subset)).or_default();
            c.0 += e.fg;
            c.1 += e.bg;
        }
        Ok(PatternHistogram::from_map(k, map))
    }
}

/// Projection straight into dense `(fg, bg)` arrays of length `2^|subset|`.
pub fn project_dense(hist: &PatternHistogram, subset: &[usize]) -> Result<DenseHistogram, HistogramError> {
    validate_subset(hist.n, subset)?;
    let k = subset.len();
    if k > DENSE_LIMIT {
        return Err(HistogramError::TooWideForDense(k));
    }
    let mut fg = vec![0u64; 1 << k];
    let mut bg = vec![0u64; 1 << k];
    for e in &hist.entries {
        let p = extract_bits(e.pattern, subset) as usize;
        fg[p] += e.fg;
        bg[p] += e.bg;
    }
    Ok(DenseHistogram {
        n: k,
        fg,
        bg,
        total_fg: hist.total_fg,
        total_bg: hist.total_bg,
    })
}

/// Entrywise sum.
pub fn merge(a: &PatternHistogram, b: &PatternHistogram) -> Result<PatternHistogram, HistogramError> {
    if a.n != b.n {
        return Err(HistogramError::ArityMismatch(a.n, b.n));
    }
    let mut out = Vec::with_capacity(a.entries.len().max(b.entries.len()));
    let (mut i, mut j) = (0, 0);
    while i < a.entries.len() || j < b.entries.len() {
        let next = match (a.entries.get(i), b.entries.get(j)) {
            (Some(x), Some(y)) if x.pattern == y.pattern => {
                i += 1;
                j += 1;
                PatternCount {
                    pattern: x.pattern,
                    fg: x.fg + y.fg,
                    bg: x.bg + y.bg,
                }
            }
            (Some(x), Some(y)) if x.pattern < y.pattern => {
                i += 1;
                *x
            }
            (Some(_), Some(y)) | (None, Some(y)) => {
                j += 1;
                *y
            }
            (Some(x), None) => {
                i += 1;
                *x
            }
            (None, None) => unreachable!(),
        };
        out.push(next);
    }
    Ok(PatternHistogram::from_sorted(a.n, out))
}

/// Sum of many histograms of arity `n`.
pub fn merge_all<'a, I>(n: usize, hists: I) -> Result<PatternHistogram, HistogramError>
where
    I: IntoIterator<Item = &'a PatternHistogram>,
{
    hists
        .into_iter()
        .try_fold(PatternHistogram::empty(n), |acc, h| merge(&acc, h))
}
