//! Confusion counts, rates and category-weighted summaries.
//!
//! Weighting: every category weighs the same and, inside a category, every
//! video weighs the same. A per-video indicator whose denominator is zero is
//! skipped in its category mean; a category with no defined value for an
//! indicator is skipped in the overall mean for that indicator.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::combine::{Combiner, TruthTable};
use crate::corpus::{Corpus, VideoKey};
use crate::histogram::{merge_all, project, HistogramError, PatternHistogram};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("combiner reads {combiner} algorithms, histogram has {histogram}")]
    ArityMismatch { combiner: usize, histogram: usize },
    #[error("corpus has no videos")]
    EmptyCorpus,
    #[error("no histogram for video {0}")]
    MissingVideo(VideoKey),
    #[error("histogram for {0} does not belong to the corpus")]
    UnknownVideo(VideoKey),
    #[error("no learning-set video in the corpus")]
    NoLearningSet,
    #[error(transparent)]
    Histogram(#[from] HistogramError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

/// Expected confusion counts of a stochastic combiner.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ExpectedConfusion {
    pub tp: f64,
    pub fp: f64,
    pub tn: f64,
    #[serde(rename = "fn")]
    pub fn_: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Confusion {
    Exact(ConfusionCounts),
    Expected(ExpectedConfusion),
}

impl Confusion {
    pub fn rates(&self) -> Rates {
        match self {
            Confusion::Exact(c) => rates(c),
            Confusion::Expected(e) => Rates::from_parts(e.tp, e.fp, e.tn, e.fn_),
        }
    }

    pub fn as_expected(&self) -> ExpectedConfusion {
        match *self {
            Confusion::Exact(c) => ExpectedConfusion {
                tp: c.tp as f64,
                fp: c.fp as f64,
                tn: c.tn as f64,
                fn_: c.fn_ as f64,
            },
            Confusion::Expected(e) => e,
        }
    }
}

/// Each rate is `None` when its denominator is zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
    pub ppv: Option<f64>,
    #[serde(rename = "for")]
    pub for_: Option<f64>,
    pub f1: Option<f64>,
    pub er: Option<f64>,
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den != 0.0).then(|| num / den)
}

/// `2 tp / (2 tp + fp + fn)` from integer counts.
#[inline]
pub fn f1_score(tp: u64, fp: u64, fn_: u64) -> Option<f64> {
    let den = 2 * tp + fp + fn_;
    (den != 0).then(|| (2 * tp) as f64 / den as f64)
}

impl Rates {
    pub fn from_parts(tp: f64, fp: f64, tn: f64, fn_: f64) -> Self {
        Self {
            tpr: ratio(tp, tp + fn_),
            fpr: ratio(fp, fp + tn),
            ppv: ratio(tp, tp + fp),
            for_: ratio(fn_, fn_ + tn),
            f1: ratio(2.0 * tp, 2.0 * tp + fp + fn_),
            er: ratio(fp + fn_, tp + fp + tn + fn_),
        }
    }
}

pub fn rates(c: &ConfusionCounts) -> Rates {
    let mut r = Rates::from_parts(c.tp as f64, c.fp as f64, c.tn as f64, c.fn_ as f64);
    // integer route so the F1 agrees bit for bit with the search sweep
    r.f1 = f1_score(c.tp, c.fp, c.fn_);
    r
}

/// Exact counts of a deterministic combiner.
pub fn confusion_exact(hist: &PatternHistogram, truth: &TruthTable) -> Result<ConfusionCounts, MetricsError> {
    if truth.n() != hist.n() {
        return Err(MetricsError::ArityMismatch {
            combiner: truth.n(),
            histogram: hist.n(),
        });
    }
    let (mut tp, mut fp) = (0u64, 0u64);
    for e in hist.entries() {
        if truth.get(e.pattern) {
            tp += e.fg;
            fp += e.bg;
        }
    }
    Ok(ConfusionCounts {
        tp,
        fp,
        fn_: hist.total_fg() - tp,
        tn: hist.total_bg() - fp,
    })
}

/// Exact counts for deterministic and scored combiners, expected counts for
/// stochastic ones.
pub fn confusion(hist: &PatternHistogram, combiner: &Combiner) -> Result<Confusion, MetricsError> {
    if combiner.arity() != hist.n() {
        return Err(MetricsError::ArityMismatch {
            combiner: combiner.arity(),
            histogram: hist.n(),
        });
    }
    match combiner {
        Combiner::Stochastic(s) => {
            let (mut tp, mut fp) = (0.0, 0.0);
            for e in hist.entries() {
                let q = s.q()[e.pattern as usize];
                tp += q * e.fg as f64;
                fp += q * e.bg as f64;
            }
            Ok(Confusion::Expected(ExpectedConfusion {
                tp,
                fp,
                fn_: hist.total_fg() as f64 - tp,
                tn: hist.total_bg() as f64 - fp,
            }))
        }
        other => {
            let truth = other.truth_table().expect("deterministic combiner");
            Ok(Confusion::Exact(confusion_exact(hist, &truth)?))
        }
    }
}

/// Category structure of an ordered list of videos.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    names: Vec<String>,
    ranges: Vec<Range<usize>>,
}

impl Layout {
    pub fn from_corpus(corpus: &Corpus) -> Self {
        let mut names = Vec::new();
        let mut ranges = Vec::new();
        let mut start = 0;
        for c in corpus.categories() {
            names.push(c.name.clone());
            ranges.push(start..start + c.videos.len());
            start += c.videos.len();
        }
        Self { names, ranges }
    }

    pub fn categories(&self) -> &[String] {
        &self.names
    }

    pub fn ranges(&self) -> &[Range<usize>] {
        &self.ranges
    }

    pub fn video_count(&self) -> usize {
        self.ranges.last().map_or(0, |r| r.end)
    }

    /// Mean over categories of the mean over videos, skipping `None`.
    #[inline]
    pub fn mean(&self, value: impl Fn(usize) -> Option<f64>) -> Option<f64> {
        let (mut sum, mut count) = (0.0, 0usize);
        for range in &self.ranges {
            if let Some(m) = range_mean(range.clone(), &value) {
                sum += m;
                count += 1;
            }
        }
        (count > 0).then(|| sum / count as f64)
    }

    /// Per-category means and the overall mean, same arithmetic as [`Self::mean`].
    pub fn category_means(&self, value: impl Fn(usize) -> Option<f64>) -> (Option<f64>, Vec<Option<f64>>) {
        let per: Vec<Option<f64>> = self.ranges.iter().map(|r| range_mean(r.clone(), &value)).collect();
        (self.mean(value), per)
    }
}

#[inline]
fn range_mean(range: Range<usize>, value: &impl Fn(usize) -> Option<f64>) -> Option<f64> {
    let (mut sum, mut count) = (0.0, 0usize);
    for i in range {
        if let Some(v) = value(i) {
            sum += v;
            count += 1;
        }
    }
    (count > 0).then(|| sum / count as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryPerf {
    pub name: String,
    pub rates: Rates,
}

/// Category-weighted indicators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedPerf {
    pub tpr_bar: Option<f64>,
    pub fpr_bar: Option<f64>,
    pub ppv_bar: Option<f64>,
    pub for_bar: Option<f64>,
    pub f1_bar: Option<f64>,
    pub er_bar: Option<f64>,
    pub per_category: Vec<CategoryPerf>,
}

impl WeightedPerf {
    /// `(FPR, TPR)` point; undefined coordinates read as 0.
    pub fn roc_point(&self) -> (f64, f64) {
        (self.fpr_bar.unwrap_or(0.0), self.tpr_bar.unwrap_or(0.0))
    }
}

pub fn aggregate_indexed(layout: &Layout, per_video: &[Rates]) -> Result<WeightedPerf, MetricsError> {
    if layout.video_count() == 0 {
        return Err(MetricsError::EmptyCorpus);
    }
    assert_eq!(per_video.len(), layout.video_count(), "one rate set per video");
    let pick = |f: fn(&Rates) -> Option<f64>| layout.category_means(|i| f(&per_video[i]));
    let (tpr_bar, tpr) = pick(|r| r.tpr);
    let (fpr_bar, fpr) = pick(|r| r.fpr);
    let (ppv_bar, ppv) = pick(|r| r.ppv);
    let (for_bar, for_) = pick(|r| r.for_);
    let (f1_bar, f1) = pick(|r| r.f1);
    let (er_bar, er) = pick(|r| r.er);
    let per_category = layout
        .categories()
        .iter()
        .enumerate()
        .map(|(c, name)| CategoryPerf {
            name: name.clone(),
            rates: Rates {
                tpr: tpr[c],
                fpr: fpr[c],
                ppv: ppv[c],
                for_: for_[c],
                f1: f1[c],
                er: er[c],
            },
        })
        .collect();
    Ok(WeightedPerf {
        tpr_bar,
        fpr_bar,
        ppv_bar,
        for_bar,
        f1_bar,
        er_bar,
        per_category,
    })
}

/// Weighted summary of per-video rates; every corpus video must be present.
pub fn aggregate(per_video: &BTreeMap<VideoKey, Rates>, corpus: &Corpus) -> Result<WeightedPerf, MetricsError> {
    let layout = Layout::from_corpus(corpus);
    if layout.video_count() == 0 {
        return Err(MetricsError::EmptyCorpus);
    }
    let ordered = corpus
        .videos()
        .map(|v| {
            per_video
                .get(&v.key)
                .copied()
                .ok_or_else(|| MetricsError::MissingVideo(v.key.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    aggregate_indexed(&layout, &ordered)
}

/// Per-video histograms in corpus order, with the corpus layout.
#[derive(Debug, Clone)]
pub struct HistogramSet {
    n: usize,
    keys: Vec<VideoKey>,
    learning: Vec<bool>,
    hists: Vec<PatternHistogram>,
    layout: Layout,
}

impl HistogramSet {
    pub fn new(mut hists: BTreeMap<VideoKey, PatternHistogram>, corpus: &Corpus) -> Result<Self, MetricsError> {
        let layout = Layout::from_corpus(corpus);
        if layout.video_count() == 0 {
            return Err(MetricsError::EmptyCorpus);
        }
        let mut keys = Vec::new();
        let mut learning = Vec::new();
        let mut ordered = Vec::new();
        for v in corpus.videos() {
            let h = hists
                .remove(&v.key)
                .ok_or_else(|| MetricsError::MissingVideo(v.key.clone()))?;
            keys.push(v.key.clone());
            learning.push(v.learning_member);
            ordered.push(h);
        }
        if let Some(k) = hists.into_keys().next() {
            return Err(MetricsError::UnknownVideo(k));
        }
        let n = ordered[0].n();
        if let Some(h) = ordered.iter().find(|h| h.n() != n) {
            return Err(HistogramError::ArityMismatch(n, h.n()).into());
        }
        Ok(Self {
            n,
            keys,
            learning,
            hists: ordered,
            layout,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.hists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hists.is_empty()
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn keys(&self) -> &[VideoKey] {
        &self.keys
    }

    pub fn histograms(&self) -> &[PatternHistogram] {
        &self.hists
    }

    pub fn is_learning(&self, i: usize) -> bool {
        self.learning[i]
    }

    /// Pixel-pooled histogram of the learning-set videos.
    pub fn learning_histogram(&self) -> Result<PatternHistogram, MetricsError> {
        if !self.learning.iter().any(|&l| l) {
            return Err(MetricsError::NoLearningSet);
        }
        let ls = self
            .hists
            .iter()
            .zip(&self.learning)
            .filter(|(_, &l)| l)
            .map(|(h, _)| h);
        Ok(merge_all(self.n, ls)?)
    }

    /// Every histogram projected onto `subset`.
    pub fn project(&self, subset: &[usize]) -> Result<HistogramSet, MetricsError> {
        let hists = self
            .hists
            .iter()
            .map(|h| project(h, subset))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            n: subset.len(),
            keys: self.keys.clone(),
            learning: self.learning.clone(),
            hists,
            layout: self.layout.clone(),
        })
    }

    pub fn confusions(&self, combiner: &Combiner) -> Result<Vec<Confusion>, MetricsError> {
        self.hists.iter().map(|h| confusion(h, combiner)).collect()
    }

    pub fn evaluate(&self, combiner: &Combiner) -> Result<WeightedPerf, MetricsError> {
        let rates: Vec<Rates> = self.confusions(combiner)?.iter().map(Confusion::rates).collect();
        aggregate_indexed(&self.layout, &rates)
    }

    pub fn evaluate_truth(&self, truth: &TruthTable) -> Result<WeightedPerf, MetricsError> {
        let rates = self
            .hists
            .iter()
            .map(|h| confusion_exact(h, truth).map(|c| rates(&c)))
            .collect::<Result<Vec<_>, _>>()?;
        aggregate_indexed(&self.layout, &rates)
    }
}

/// Weighted performance of `combiner` on a corpus.
pub fn evaluate(
    combiner: &Combiner,
    corpus_hists: &BTreeMap<VideoKey, PatternHistogram>,
    corpus: &Corpus,
) -> Result<WeightedPerf, MetricsError> {
    HistogramSet::new(corpus_hists.clone(), corpus)?.evaluate(combiner)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn rate_cells(r: &Rates) -> String {
    [r.tpr, r.fpr, r.ppv, r.for_, r.f1, r.er].map(fmt_opt).join(",")
}

/// CSV with one row per video, one summary row per category (`video = *`)
/// and an overall row (`category = *`).
pub fn write_report(
    w: &mut impl Write,
    set: &HistogramSet,
    confusions: &[Confusion],
    perf: &WeightedPerf,
) -> io::Result<()> {
    writeln!(w, "category,video,tp,fp,tn,fn,tpr,fpr,ppv,for,f1,er")?;
    for (i, key) in set.keys().iter().enumerate() {
        let c = &confusions[i];
        let counts = match c {
            Confusion::Exact(c) => format!("{},{},{},{}", c.tp, c.fp, c.tn, c.fn_),
            Confusion::Expected(e) => format!("{},{},{},{}", e.tp, e.fp, e.tn, e.fn_),
        };
        writeln!(
            w,
            "{},{},{},{}",
            key.category,
            key.video,
            counts,
            rate_cells(&c.rates())
        )?;
    }
    for cat in &perf.per_category {
        writeln!(w, "{},*,,,,,{}", cat.name, rate_cells(&cat.rates))?;
    }
    let overall = Rates {
        tpr: perf.tpr_bar,
        fpr: perf.fpr_bar,
        ppv: perf.ppv_bar,
        for_: perf.for_bar,
        f1: perf.f1_bar,
        er: perf.er_bar,
    };
    writeln!(w, "*,*,,,,,{}", rate_cells(&overall))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combine::StochasticTable;
    use crate::corpus::{Category, LabelMap, VideoRef};

    pub(crate) fn corpus_of(shape: &[(&str, &[&str])]) -> Corpus {
        let categories = shape
            .iter()
            .map(|(c, videos)| Category {
                name: c.to_string(),
                videos: videos
                    .iter()
                    .map(|v| VideoRef {
                        key: VideoKey::new(*c, *v),
                        frame_count: 1,
                        width: 1,
                        height: 1,
                        learning_member: false,
                    })
                    .collect(),
            })
            .collect();
        Corpus::from_parts("/nonexistent", vec!["a".into()], categories, LabelMap::default())
    }

    fn f1_only(f1: Option<f64>) -> Rates {
        Rates { f1, ..Rates::default() }
    }

    #[test]
    fn identity_combiner_counts() {
        let h = PatternHistogram::from_counts(1, [(1, 8, 1), (0, 2, 6)]).unwrap();
        let c = confusion_exact(&h, &TruthTable::single(1, 0).unwrap()).unwrap();
        assert_eq!(
            c,
            ConfusionCounts {
                tp: 8,
                fp: 1,
                fn_: 2,
                tn: 6
            }
        );
        let bg = confusion_exact(&h, &TruthTable::always_bg(1)).unwrap();
        assert_eq!(
            bg,
            ConfusionCounts {
                tp: 0,
                fp: 0,
                fn_: 10,
                tn: 7
            }
        );
    }

    #[test]
    fn stochastic_half_halves_tp() {
        let h = PatternHistogram::from_counts(2, [(0, 3, 5), (1, 4, 1), (3, 7, 0)]).unwrap();
        let half = Combiner::from(StochasticTable::new(2, vec![0.5; 4]).unwrap());
        match confusion(&h, &half).unwrap() {
            Confusion::Expected(e) => assert_eq!(e.tp, 7.0),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            confusion(&h, &TruthTable::always_bg(3).into()),
            Err(MetricsError::ArityMismatch { .. })
        ));
    }

    #[test]
    fn rate_arithmetic() {
        let r = rates(&ConfusionCounts {
            tp: 2,
            fp: 1,
            fn_: 1,
            tn: 6,
        });
        assert_eq!(r.tpr, Some(2.0 / 3.0));
        assert_eq!(r.fpr, Some(1.0 / 7.0));
        assert_eq!(r.f1, Some(2.0 / 3.0));
        assert_eq!(r.er, Some(0.2));
        let r = rates(&ConfusionCounts {
            tp: 0,
            fp: 0,
            fn_: 0,
            tn: 10,
        });
        assert_eq!((r.tpr, r.fpr, r.f1), (None, Some(0.0), None));
        let r = rates(&ConfusionCounts {
            tp: 5,
            fp: 0,
            fn_: 0,
            tn: 0,
        });
        assert_eq!((r.tpr, r.ppv, r.f1, r.fpr), (Some(1.0), Some(1.0), Some(1.0), None));
    }

    #[test]
    fn aggregate_hand_example() {
        let corpus = corpus_of(&[("A", &["a1", "a2"]), ("B", &["b1"])]);
        let per: BTreeMap<VideoKey, Rates> = [
            (VideoKey::new("A", "a1"), f1_only(Some(0.6))),
            (VideoKey::new("A", "a2"), f1_only(Some(0.8))),
            (VideoKey::new("B", "b1"), f1_only(Some(1.0))),
        ]
        .into_iter()
        .collect();
        let perf = aggregate(&per, &corpus).unwrap();
        assert!((perf.f1_bar.unwrap() - 0.85).abs() < 1e-15);
        assert!((perf.per_category[0].rates.f1.unwrap() - 0.7).abs() < 1e-15);
        let mut missing = per.clone();
        missing.remove(&VideoKey::new("B", "b1"));
        assert!(matches!(
            aggregate(&missing, &corpus),
            Err(MetricsError::MissingVideo(_))
        ));
    }

    #[test]
    fn aggregate_single_video_is_identity() {
        let corpus = corpus_of(&[("A", &["a1"])]);
        let r = rates(&ConfusionCounts {
            tp: 3,
            fp: 2,
            fn_: 1,
            tn: 9,
        });
        let perf = aggregate(&[(VideoKey::new("A", "a1"), r)].into_iter().collect(), &corpus).unwrap();
        assert_eq!((perf.tpr_bar, perf.fpr_bar, perf.f1_bar), (r.tpr, r.fpr, r.f1));
    }

    #[test]
    fn aggregate_skips_undefined() {
        let corpus = corpus_of(&[("A", &["a1", "a2"]), ("B", &["b1"])]);
        let with_tpr = |t| Rates {
            tpr: t,
            ..Rates::default()
        };
        let per: BTreeMap<VideoKey, Rates> = [
            (VideoKey::new("A", "a1"), with_tpr(None)),
            (VideoKey::new("A", "a2"), with_tpr(Some(0.4))),
            (VideoKey::new("B", "b1"), with_tpr(None)),
        ]
        .into_iter()
        .collect();
        let perf = aggregate(&per, &corpus).unwrap();
        assert_eq!(perf.per_category[0].rates.tpr, Some(0.4));
        assert_eq!(perf.per_category[1].rates.tpr, None);
        assert_eq!(perf.tpr_bar, Some(0.4));
        assert_eq!(perf.f1_bar, None);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let corpus = Corpus::from_parts("/x", vec![], vec![], LabelMap::default());
        assert!(matches!(
            aggregate(&BTreeMap::new(), &corpus),
            Err(MetricsError::EmptyCorpus)
        ));
    }

    #[test]
    fn trivial_combiners_hit_the_corners() {
        let corpus = corpus_of(&[("A", &["a1", "a2"]), ("B", &["b1"])]);
        let hists: BTreeMap<VideoKey, PatternHistogram> = [
            (
                VideoKey::new("A", "a1"),
                PatternHistogram::from_counts(2, [(0, 3, 5), (3, 1, 1)]).unwrap(),
            ),
            (
                VideoKey::new("A", "a2"),
                PatternHistogram::from_counts(2, [(1, 2, 9)]).unwrap(),
            ),
            (
                VideoKey::new("B", "b1"),
                PatternHistogram::from_counts(2, [(2, 4, 4)]).unwrap(),
            ),
        ]
        .into_iter()
        .collect();
        let fg = evaluate(&TruthTable::always_fg(2).into(), &hists, &corpus).unwrap();
        assert_eq!(fg.roc_point(), (1.0, 1.0));
        let bg = evaluate(&TruthTable::always_bg(2).into(), &hists, &corpus).unwrap();
        assert_eq!(bg.roc_point(), (0.0, 0.0));
    }

    #[test]
    fn report_rows() {
        let corpus = corpus_of(&[("A", &["a1"])]);
        let hists: BTreeMap<VideoKey, PatternHistogram> = [(
            VideoKey::new("A", "a1"),
            PatternHistogram::from_counts(1, [(1, 8, 1), (0, 2, 6)]).unwrap(),
        )]
        .into_iter()
        .collect();
        let set = HistogramSet::new(hists, &corpus).unwrap();
        let c: Combiner = TruthTable::single(1, 0).unwrap().into();
        let conf = set.confusions(&c).unwrap();
        let perf = set.evaluate(&c).unwrap();
        let mut buf = Vec::new();
        write_report(&mut buf, &set, &conf, &perf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("A,a1,8,1,6,2,0.8,"));
        assert!(lines[3].starts_with("*,*,,,,,0.8,"));
    }
}
