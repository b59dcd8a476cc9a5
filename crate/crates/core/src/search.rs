//! Exhaustive search over algorithm selections.
//!
//! For one selection, every video histogram is projected onto the selected
//! bits once. Patterns are then visited by decreasing score; adding a group
//! of equal-score patterns to the FG set updates per-video cumulative TP/FP,
//! so each further threshold costs one pass over the videos.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::combine::{
    bayes_scores, learn_bayes_lenient, learn_bks, majority_vote, prop_fg_scores, BayesParams, CombineError, Combiner,
    ScoreTable,
};
use crate::histogram::{extract_bits, project, HistogramError, PatternHistogram, DENSE_LIMIT};
use crate::metrics::{f1_score, HistogramSet, MetricsError};

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("unknown strategy {0:?} (expected majority-vote, prop-fg, averaged-bayes or bks)")]
    UnknownStrategy(String),
    #[error("invalid selection {indices:?} for {n} algorithms: {reason}")]
    InvalidSelection {
        indices: Vec<usize>,
        n: usize,
        reason: &'static str,
    },
    #[error("k_max = {k_max} must lie in 1..={n}")]
    KMax { k_max: usize, n: usize },
    #[error("worker count must be at least 1")]
    Workers,
    #[error("checkpoint {path}: {reason}")]
    Checkpoint { path: PathBuf, reason: String },
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("thread pool: {0}")]
    ThreadPool(String),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Combine(#[from] CombineError),
    #[error(transparent)]
    Histogram(#[from] HistogramError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    MajorityVote,
    PropFg,
    AveragedBayes,
    Bks,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::MajorityVote,
        Strategy::PropFg,
        Strategy::AveragedBayes,
        Strategy::Bks,
    ];

    /// Whether the strategy exposes a threshold `tau`.
    pub fn is_thresholded(self) -> bool {
        self != Strategy::MajorityVote
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::MajorityVote => "majority-vote",
            Strategy::PropFg => "prop-fg",
            Strategy::AveragedBayes => "averaged-bayes",
            Strategy::Bks => "bks",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = SearchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| SearchError::UnknownStrategy(s.to_string()))
    }
}

/// Strictly increasing algorithm indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Selection(Vec<usize>);

impl Selection {
    pub fn new(indices: Vec<usize>, n: usize) -> Result<Self, SearchError> {
        let bad = |reason| SearchError::InvalidSelection {
            indices: indices.clone(),
            n,
            reason,
        };
        if indices.is_empty() {
            return Err(bad("empty"));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(bad("indices must strictly increase"));
        }
        if indices.last().is_some_and(|&i| i >= n) {
            return Err(bad("index out of range"));
        }
        if indices.len() > DENSE_LIMIT {
            return Err(bad("too many algorithms for a threshold sweep"));
        }
        Ok(Self(indices))
    }

    /// Sorts and deduplicates before validating.
    pub fn from_unsorted(mut indices: Vec<usize>, n: usize) -> Result<Self, SearchError> {
        indices.sort_unstable();
        indices.dedup();
        Self::new(indices, n)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    /// Algorithm names joined by `+`.
    pub fn label(&self, algorithms: &[String]) -> String {
        self.0
            .iter()
            .map(|&i| algorithms[i].as_str())
            .collect::<Vec<_>>()
            .join("+")
    }
}

impl AsRef<[usize]> for Selection {
    fn as_ref(&self) -> &[usize] {
        &self.0
    }
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn selections_of_size(n: usize, k: usize) -> impl Iterator<Item = Selection> {
    let mut current: Option<Vec<usize>> = (k >= 1 && k <= n).then(|| (0..k).collect());
    std::iter::from_fn(move || {
        let out = current.clone()?;
        let c = current.as_mut().unwrap();
        // advance the rightmost index that still has room
        match (0..k).rev().find(|&i| c[i] < n - k + i) {
            Some(i) => {
                c[i] += 1;
                for j in i + 1..k {
                    c[j] = c[j - 1] + 1;
                }
            }
            None => current = None,
        }
        Some(Selection(out))
    })
}

/// Every selection of `1..=k_max` algorithms out of `n`, by size, then
/// lexicographically.
pub fn enumerate_selections(n: usize, k_max: usize) -> impl Iterator<Item = Selection> {
    (1..=k_max.min(n)).flat_map(move |k| selections_of_size(n, k))
}

pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

pub fn count_selections(n: usize, k_max: usize) -> u128 {
    (1..=k_max.min(n) as u64).map(|k| binomial(n as u64, k)).sum()
}

/// Combiners a strategy can produce over all selections, counting only
/// thresholds that are neither always-FG nor always-BG. For Bayes and BKS
/// this is an upper bound reached when all `2^k` scores differ.
pub fn count_combinations(strategy: Strategy, n: usize, k_max: usize) -> u128 {
    (1..=k_max.min(n) as u64)
        .map(|k| {
            let per = match strategy {
                Strategy::MajorityVote => 1,
                Strategy::PropFg => k as u128,
                Strategy::AveragedBayes | Strategy::Bks => (1u128 << k) - 1,
            };
            binomial(n as u64, k) * per
        })
        .sum()
}

/// Best combiner found for one selection.
#[derive(Debug, Clone)]
pub struct SearchResult {
    pub strategy: Strategy,
    pub selection: Selection,
    pub tau: Option<f64>,
    /// Undefined weighted F1 reads as 0.
    pub f1_bar: f64,
    pub tpr_bar: f64,
    pub fpr_bar: f64,
    /// Learning fell back for an undefined Bayes parameter of a selected algorithm.
    pub degraded: bool,
    pub combiner: Combiner,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Candidate {
    selection: Selection,
    tau: Option<f64>,
    f1: Option<f64>,
    tpr: Option<f64>,
    fpr: Option<f64>,
    degraded: bool,
}

/// Higher F1, then smaller tau, then the lexicographically smaller selection.
fn better(a: &Candidate, b: &Candidate) -> bool {
    if a.f1 != b.f1 {
        return a.f1 > b.f1;
    }
    if a.tau != b.tau {
        return match (a.tau, b.tau) {
            (Some(x), Some(y)) => x < y,
            _ => a.tau.is_some(),
        };
    }
    a.selection < b.selection
}

fn keep_better(slot: &mut Option<Candidate>, c: Candidate) {
    if slot.as_ref().is_none_or(|s| better(&c, s)) {
        *slot = Some(c);
    }
}

/// Projected counts of one selection, bucketed by pattern.
struct Projected {
    starts: Vec<usize>,
    items: Vec<(u32, u64, u64)>,
    total_fg: Vec<u64>,
}

impl Projected {
    fn new(hists: &[PatternHistogram], sel: &[usize]) -> Self {
        let size = 1usize << sel.len();
        let mut flat: Vec<(u32, u32, u64, u64)> = Vec::new();
        for (i, h) in hists.iter().enumerate() {
            for e in h.entries() {
                flat.push((extract_bits(e.pattern, sel), i as u32, e.fg, e.bg));
            }
        }
        let mut starts = vec![0usize; size + 1];
        for f in &flat {
            starts[f.0 as usize + 1] += 1;
        }
        for p in 0..size {
            starts[p + 1] += starts[p];
        }
        let mut fill = starts.clone();
        let mut items = vec![(0u32, 0u64, 0u64); flat.len()];
        for (p, i, fg, bg) in flat {
            items[fill[p as usize]] = (i, fg, bg);
            fill[p as usize] += 1;
        }
        Self {
            starts,
            items,
            total_fg: hists.iter().map(|h| h.total_fg()).collect(),
        }
    }

    fn add_pattern(&self, p: usize, tp: &mut [u64], fp: &mut [u64]) {
        for &(i, fg, bg) in &self.items[self.starts[p]..self.starts[p + 1]] {
            tp[i as usize] += fg;
            fp[i as usize] += bg;
        }
    }
}

/// Read-only inputs of a search: evaluation histograms at full width and
/// parameters learned on the learning set.
pub struct SearchContext {
    set: HistogramSet,
    totals_bg: Vec<u64>,
    algorithms: Vec<String>,
    ls: PatternHistogram,
    bayes: BayesParams,
    /// Algorithms with an undefined Bayes parameter on the learning set.
    bayes_undefined: Vec<bool>,
}

impl SearchContext {
    pub fn new(set: HistogramSet, algorithms: Vec<String>) -> Result<Self, SearchError> {
        assert_eq!(set.n(), algorithms.len(), "one name per algorithm");
        let ls = set.learning_histogram()?;
        let (bayes, undefined) = learn_bayes_lenient(&ls)?;
        let mut bayes_undefined = vec![false; set.n()];
        for (j, _) in undefined {
            bayes_undefined[j] = true;
        }
        let totals_bg = set.histograms().iter().map(|h| h.total_bg()).collect();
        Ok(Self {
            set,
            totals_bg,
            algorithms,
            ls,
            bayes,
            bayes_undefined,
        })
    }

    pub fn n(&self) -> usize {
        self.set.n()
    }

    pub fn algorithms(&self) -> &[String] {
        &self.algorithms
    }

    pub fn histograms(&self) -> &HistogramSet {
        &self.set
    }

    pub fn learning_histogram(&self) -> &PatternHistogram {
        &self.ls
    }

    pub fn bayes_params(&self) -> &BayesParams {
        &self.bayes
    }

    fn check(&self, sel: &Selection) -> Result<(), SearchError> {
        if sel.indices().last().is_some_and(|&i| i >= self.n()) {
            return Err(SearchError::InvalidSelection {
                indices: sel.indices().to_vec(),
                n: self.n(),
                reason: "index out of range",
            });
        }
        Ok(())
    }

    fn degraded(&self, strategy: Strategy, sel: &Selection) -> bool {
        strategy == Strategy::AveragedBayes && sel.indices().iter().any(|&j| self.bayes_undefined[j])
    }

    /// Score of every pattern of `sel` under `strategy`.
    pub fn scores(&self, strategy: Strategy, sel: &Selection) -> Result<ScoreTable, SearchError> {
        self.check(sel)?;
        Ok(match strategy {
            Strategy::MajorityVote | Strategy::PropFg => prop_fg_scores(sel.k()),
            Strategy::AveragedBayes => bayes_scores(&self.bayes.select(sel.indices())),
            Strategy::Bks => learn_bks(&project(&self.ls, sel.indices())?)?.scores(),
        })
    }

    /// The combiner of `strategy` on `sel` at threshold `tau`; majority vote
    /// ignores `tau`.
    pub fn combiner(&self, strategy: Strategy, sel: &Selection, tau: Option<f64>) -> Result<Combiner, SearchError> {
        Ok(match (strategy, tau) {
            (Strategy::MajorityVote, _) => majority_vote(sel.k()).into(),
            (_, Some(t)) => Combiner::Scored {
                scores: self.scores(strategy, sel)?,
                threshold: t,
            },
            (_, None) => majority_vote(sel.k()).into(),
        })
    }

    fn summarize(&self, proj: &Projected, tp: &[u64], fp: &[u64]) -> (Option<f64>, Option<f64>, Option<f64>) {
        let layout = self.set.layout();
        let f1 = layout.mean(|i| f1_score(tp[i], fp[i], proj.total_fg[i] - tp[i]));
        let tpr = layout.mean(|i| (proj.total_fg[i] > 0).then(|| tp[i] as f64 / proj.total_fg[i] as f64));
        let fpr = layout.mean(|i| (self.totals_bg[i] > 0).then(|| fp[i] as f64 / self.totals_bg[i] as f64));
        (f1, tpr, fpr)
    }

    /// Best threshold of one selection and the number of thresholds tried.
    fn sweep(&self, strategy: Strategy, sel: &Selection) -> Result<(Candidate, u64), SearchError> {
        let proj = Projected::new(self.set.histograms(), sel.indices());
        let videos = self.set.len();
        let (mut tp, mut fp) = (vec![0u64; videos], vec![0u64; videos]);
        let degraded = self.degraded(strategy, sel);
        let layout = self.set.layout();
        let f1_of = |tp: &[u64], fp: &[u64]| layout.mean(|i| f1_score(tp[i], fp[i], proj.total_fg[i] - tp[i]));

        if strategy == Strategy::MajorityVote {
            let mv = majority_vote(sel.k());
            for p in 0..1usize << sel.k() {
                if mv.get(p as u32) {
                    proj.add_pattern(p, &mut tp, &mut fp);
                }
            }
            let (f1, tpr, fpr) = self.summarize(&proj, &tp, &fp);
            let c = Candidate {
                selection: sel.clone(),
                tau: None,
                f1,
                tpr,
                fpr,
                degraded,
            };
            return Ok((c, 1));
        }

        let scores = self.scores(strategy, sel)?;
        let s = scores.scores();
        let mut order: Vec<u32> = (0..s.len() as u32).collect();
        order.sort_by(|&a, &b| s[b as usize].total_cmp(&s[a as usize]).then(a.cmp(&b)));
        let mut groups: Vec<(f64, usize, usize)> = Vec::new();
        let mut start = 0;
        for i in 1..=order.len() {
            if i == order.len() || s[order[i] as usize] != s[order[start] as usize] {
                groups.push((s[order[start] as usize], start, i));
                start = i;
            }
        }
        // the last group would make every pattern FG
        let nontrivial = groups.len() - 1;
        let mut best: Option<(Option<f64>, usize)> = None;
        for (g, &(_, lo, hi)) in groups.iter().enumerate().take(nontrivial) {
            for &p in &order[lo..hi] {
                proj.add_pattern(p as usize, &mut tp, &mut fp);
            }
            let f1 = f1_of(&tp, &fp);
            // later groups have smaller tau, so ties move forward
            if best.is_none_or(|(b, _)| f1 >= b) {
                best = Some((f1, g));
            }
        }
        // all scores equal: only the trivial always-FG threshold remains
        let chosen = best.map_or(groups.len() - 1, |(_, g)| g);
        tp.iter_mut().for_each(|t| *t = 0);
        fp.iter_mut().for_each(|f| *f = 0);
        for &p in &order[..groups[chosen].2] {
            proj.add_pattern(p as usize, &mut tp, &mut fp);
        }
        let (f1, tpr, fpr) = self.summarize(&proj, &tp, &fp);
        let c = Candidate {
            selection: sel.clone(),
            tau: Some(groups[chosen].0),
            f1,
            tpr,
            fpr,
            degraded,
        };
        Ok((c, nontrivial.max(1) as u64))
    }

    fn finish(&self, strategy: Strategy, c: Candidate) -> Result<SearchResult, SearchError> {
        let combiner = self.combiner(strategy, &c.selection, c.tau)?;
        Ok(SearchResult {
            strategy,
            selection: c.selection,
            tau: c.tau,
            f1_bar: c.f1.unwrap_or(0.0),
            tpr_bar: c.tpr.unwrap_or(0.0),
            fpr_bar: c.fpr.unwrap_or(0.0),
            degraded: c.degraded,
            combiner,
        })
    }

    /// Best weighted F1 over the nontrivial thresholds of `strategy` on `sel`.
    pub fn best_for_selection(&self, strategy: Strategy, sel: &Selection) -> Result<SearchResult, SearchError> {
        self.check(sel)?;
        let (c, _) = self.sweep(strategy, sel)?;
        self.finish(strategy, c)
    }

    /// `strategy` on `sel` at a fixed threshold (ignored by majority vote).
    pub fn evaluate_at(&self, strategy: Strategy, sel: &Selection, tau: f64) -> Result<SearchResult, SearchError> {
        self.check(sel)?;
        if strategy == Strategy::MajorityVote {
            return self.best_for_selection(strategy, sel);
        }
        let proj = Projected::new(self.set.histograms(), sel.indices());
        let (mut tp, mut fp) = (vec![0u64; self.set.len()], vec![0u64; self.set.len()]);
        let scores = self.scores(strategy, sel)?;
        for (p, &s) in scores.scores().iter().enumerate() {
            if s >= tau {
                proj.add_pattern(p, &mut tp, &mut fp);
            }
        }
        let (f1, tpr, fpr) = self.summarize(&proj, &tp, &fp);
        let c = Candidate {
            selection: sel.clone(),
            tau: Some(tau),
            f1,
            tpr,
            fpr,
            degraded: self.degraded(strategy, sel),
        };
        self.finish(strategy, c)
    }

    /// `strategy` on the `n` first algorithms of `ranking`.
    pub fn topn_baseline(&self, strategy: Strategy, n: usize, ranking: &[usize]) -> Result<SearchResult, SearchError> {
        if n == 0 || n > ranking.len() {
            return Err(SearchError::KMax {
                k_max: n,
                n: ranking.len(),
            });
        }
        let sel = Selection::from_unsorted(ranking[..n].to_vec(), self.n())?;
        if sel.k() != n {
            return Err(SearchError::InvalidSelection {
                indices: ranking[..n].to_vec(),
                n: self.n(),
                reason: "ranking repeats an algorithm",
            });
        }
        self.best_for_selection(strategy, &sel)
    }

    /// Exhaustive search over every selection of `1..=k_max` algorithms.
    pub fn search(
        &self,
        strategy: Strategy,
        k_max: usize,
        options: &SearchOptions,
        progress: Option<&(dyn Fn(&Progress) + Sync)>,
    ) -> Result<SearchOutcome, SearchError> {
        let n = self.n();
        if k_max == 0 || k_max > n {
            return Err(SearchError::KMax { k_max, n });
        }
        if options.workers == 0 {
            return Err(SearchError::Workers);
        }
        let total = count_selections(n, k_max) as u64;
        let mut state = match &options.checkpoint {
            Some(path) if path.exists() => {
                let s = Checkpoint::load(path)?;
                s.check(strategy, k_max, &self.algorithms, path)?;
                s
            }
            _ => Checkpoint::fresh(strategy, k_max, &self.algorithms),
        };
        let resumed = state.done > 0;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(options.workers)
            .build()
            .map_err(|e| SearchError::ThreadPool(e.to_string()))?;
        let batch_size = options.batch_size.max(1);
        let mut pending = enumerate_selections(n, k_max).skip(state.done as usize);
        let mut remaining = options.budget.unwrap_or(u64::MAX);
        loop {
            let take = batch_size.min(remaining.min(usize::MAX as u64) as usize);
            let batch: Vec<Selection> = pending.by_ref().take(take).collect();
            if batch.is_empty() {
                break;
            }
            remaining -= batch.len() as u64;
            let results = pool.install(|| {
                batch
                    .par_iter()
                    .map(|sel| self.sweep(strategy, sel))
                    .collect::<Result<Vec<_>, _>>()
            })?;
            for (c, evaluated) in results {
                state.combiners += evaluated;
                let k = c.selection.k();
                keep_better(&mut state.best[k - 1], c);
            }
            state.done += batch.len() as u64;
            if let Some(path) = &options.checkpoint {
                state.save(path)?;
            }
            if let Some(report) = progress {
                let best = state.overall();
                report(&Progress {
                    selections_done: state.done,
                    selections_total: total,
                    combiners_done: state.combiners,
                    best_f1: best.and_then(|b| b.f1),
                    best_selection: best.map(|b| b.selection.label(&self.algorithms)),
                });
            }
        }
        let best = state.overall().cloned().map(|c| self.finish(strategy, c)).transpose()?;
        let per_k = state
            .best
            .iter()
            .flatten()
            .map(|c| self.finish(strategy, c.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SearchOutcome {
            strategy,
            per_k,
            best,
            combiners_evaluated: state.combiners,
            selections_done: state.done,
            complete: state.done == total,
            resumed,
        })
    }
}

#[derive(Debug, Clone)]
pub struct SearchOptions {
    pub workers: usize,
    /// Selections per batch; a checkpoint is written after every batch.
    pub batch_size: usize,
    pub checkpoint: Option<PathBuf>,
    /// Stop after this many selections in this call; resume from the checkpoint.
    pub budget: Option<u64>,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            workers: 1,
            batch_size: 4096,
            checkpoint: None,
            budget: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Progress {
    pub selections_done: u64,
    pub selections_total: u64,
    pub combiners_done: u64,
    pub best_f1: Option<f64>,
    pub best_selection: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub strategy: Strategy,
    /// Best result for each selection size visited, by increasing size.
    pub per_k: Vec<SearchResult>,
    pub best: Option<SearchResult>,
    /// Thresholds evaluated: nontrivial ones, or one per selection for majority vote.
    pub combiners_evaluated: u64,
    pub selections_done: u64,
    /// Every selection has been visited.
    pub complete: bool,
    pub resumed: bool,
}

const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    strategy: Strategy,
    k_max: usize,
    algorithms: Vec<String>,
    done: u64,
    combiners: u64,
    best: Vec<Option<Candidate>>,
}

impl Checkpoint {
    fn fresh(strategy: Strategy, k_max: usize, algorithms: &[String]) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            strategy,
            k_max,
            algorithms: algorithms.to_vec(),
            done: 0,
            combiners: 0,
            best: vec![None; k_max],
        }
    }

    fn load(path: &Path) -> Result<Self, SearchError> {
        let text = fs::read_to_string(path).map_err(|source| SearchError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| SearchError::Checkpoint {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }

    fn check(&self, strategy: Strategy, k_max: usize, algorithms: &[String], path: &Path) -> Result<(), SearchError> {
        let reason = if self.version != CHECKPOINT_VERSION {
            Some(format!("unsupported version {}", self.version))
        } else if self.strategy != strategy || self.k_max != k_max {
            Some(format!("written for {} with k_max = {}", self.strategy, self.k_max))
        } else if self.algorithms != algorithms {
            Some("written for a different algorithm list".to_string())
        } else if self.best.len() != k_max {
            Some("malformed best-result list".to_string())
        } else {
            None
        };
        match reason {
            Some(reason) => Err(SearchError::Checkpoint {
                path: path.to_path_buf(),
                reason,
            }),
            None => Ok(()),
        }
    }

    fn save(&self, path: &Path) -> Result<(), SearchError> {
        let io_err = |source| SearchError::Io {
            path: path.to_path_buf(),
            source,
        };
        let text = serde_json::to_string(self).expect("checkpoint serializes");
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, text).map_err(io_err)?;
        fs::rename(&tmp, path).map_err(io_err)
    }

    fn overall(&self) -> Option<&Candidate> {
        let mut best: Option<&Candidate> = None;
        for c in self.best.iter().flatten() {
            if best.is_none_or(|b| better(c, b)) {
                best = Some(c);
            }
        }
        best
    }
}

/// Results table: `strategy,selection,n,tau,f1`, one row per result.
pub fn write_results_csv(w: &mut impl Write, results: &[SearchResult], algorithms: &[String]) -> io::Result<()> {
    writeln!(w, "strategy,selection,n,tau,f1")?;
    for r in results {
        let tau = r.tau.map(|t| t.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{}",
            r.strategy,
            r.selection.label(algorithms),
            r.selection.k(),
            tau,
            r.f1_bar
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sel(v: &[usize]) -> Selection {
        Selection(v.to_vec())
    }

    #[test]
    fn strategy_names_roundtrip() {
        for s in Strategy::ALL {
            assert_eq!(s.to_string().parse::<Strategy>().unwrap(), s);
        }
        assert!("vote".parse::<Strategy>().is_err());
    }

    #[test]
    fn selection_validation() {
        assert!(Selection::new(vec![], 3).is_err());
        assert!(Selection::new(vec![1, 1], 3).is_err());
        assert!(Selection::new(vec![2, 1], 3).is_err());
        assert!(Selection::new(vec![0, 3], 3).is_err());
        assert_eq!(Selection::from_unsorted(vec![2, 0, 2], 3).unwrap(), sel(&[0, 2]));
        let names: Vec<String> = ["a", "b", "c"].map(String::from).to_vec();
        assert_eq!(sel(&[0, 2]).label(&names), "a+c");
    }

    #[test]
    fn enumeration_order_and_counts() {
        let all: Vec<Selection> = enumerate_selections(3, 3).collect();
        let expected: Vec<Selection> = [&[0][..], &[1], &[2], &[0, 1], &[0, 2], &[1, 2], &[0, 1, 2]]
            .iter()
            .map(|s| sel(s))
            .collect();
        assert_eq!(all, expected);
        assert_eq!(enumerate_selections(5, 2).count(), 15);
        assert_eq!(count_selections(5, 2), 15);
        assert_eq!(selections_of_size(4, 5).count(), 0);
        for n in 1..=8 {
            for k in 1..=n {
                assert_eq!(selections_of_size(n, k).count() as u128, binomial(n as u64, k as u64));
            }
        }
    }

    #[test]
    fn published_counts() {
        assert_eq!(count_selections(26, 9), 5_658_536);
        assert_eq!(count_combinations(Strategy::MajorityVote, 26, 9), 5_658_536);
        assert_eq!(count_combinations(Strategy::PropFg, 26, 9), 47_002_306);
        assert_eq!(count_combinations(Strategy::Bks, 26, 9), 2_095_352_896);
        assert_eq!(count_combinations(Strategy::AveragedBayes, 26, 9), 2_095_352_896);
    }

    #[test]
    fn tie_break_order() {
        let c = |f1: f64, tau: f64, s: &[usize]| Candidate {
            selection: sel(s),
            tau: Some(tau),
            f1: Some(f1),
            tpr: None,
            fpr: None,
            degraded: false,
        };
        assert!(better(&c(0.9, 0.5, &[1]), &c(0.8, 0.1, &[0])));
        assert!(better(&c(0.8, 0.1, &[1]), &c(0.8, 0.5, &[0])));
        assert!(better(&c(0.8, 0.5, &[0, 3]), &c(0.8, 0.5, &[1])));
        let undefined = Candidate {
            f1: None,
            ..c(0.0, 0.0, &[0])
        };
        assert!(better(&c(0.0, 0.9, &[5]), &undefined));
    }
}
