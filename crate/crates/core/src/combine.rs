//! Pixelwise combiners over joint patterns.
//!
//! A combiner on `n` algorithms is described by what it does on each of the
//! `2^n` joint patterns: a truth table (deterministic), a probability of
//! answering FG (stochastic), or a score compared to a threshold `tau` with
//! an inclusive `>=`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::histogram::{project, PatternHistogram};
use crate::metrics::ConfusionCounts;

/// Combiners materialize `2^n` entries.
pub const MAX_ARITY: usize = 26;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CombineError {
    #[error("arity {0} exceeds the supported maximum of {MAX_ARITY}")]
    ArityTooLarge(usize),
    #[error("table has {found} entries, expected {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("entry {index} = {value} is outside [0, 1]")]
    OutOfUnitRange { index: usize, value: f64 },
    #[error("learning set too small: {parameter} of algorithm {algorithm} has a zero denominator")]
    UndefinedParameter { algorithm: usize, parameter: &'static str },
    #[error("learning set is empty")]
    EmptyLearningSet,
    #[error("combiners have different arities")]
    ArityMismatch,
    #[error("mixture weights must be non-negative and sum to 1 (sum = {0})")]
    BadWeights(f64),
    #[error("{combiners} combiners but {weights} weights")]
    WeightCount { combiners: usize, weights: usize },
    #[error("algorithm index {index} out of range for arity {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("invalid combiner file: {0}")]
    Format(String),
}

fn check_arity(n: usize) -> Result<(), CombineError> {
    if n > MAX_ARITY {
        return Err(CombineError::ArityTooLarge(n));
    }
    Ok(())
}

fn check_unit(values: &[f64]) -> Result<(), CombineError> {
    for (index, &value) in values.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(CombineError::OutOfUnitRange { index, value });
        }
    }
    Ok(())
}

/// Deterministic combiner: bit `v` is the output on pattern `v`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TruthTable {
    n: usize,
    words: Vec<u64>,
}

impl TruthTable {
    pub fn always_bg(n: usize) -> Self {
        assert!(n <= MAX_ARITY, "arity {n} too large");
        Self {
            n,
            words: vec![0; (1usize << n).div_ceil(64)],
        }
    }

    pub fn always_fg(n: usize) -> Self {
        Self::from_fn(n, |_| true)
    }

    pub fn from_fn(n: usize, f: impl Fn(u32) -> bool) -> Self {
        let mut t = Self::always_bg(n);
        for v in 0..t.len() as u32 {
            if f(v) {
                t.set(v, true);
            }
        }
        t
    }

    pub fn from_bits(n: usize, bits: &[bool]) -> Result<Self, CombineError> {
        check_arity(n)?;
        if bits.len() != 1 << n {
            return Err(CombineError::LengthMismatch {
                expected: 1 << n,
                found: bits.len(),
            });
        }
        Ok(Self::from_fn(n, |v| bits[v as usize]))
    }

    /// The output of algorithm `j` alone.
    pub fn single(n: usize, j: usize) -> Result<Self, CombineError> {
        check_arity(n)?;
        if j >= n {
            return Err(CombineError::IndexOutOfRange { index: j, n });
        }
        Ok(Self::from_fn(n, |v| (v >> j) & 1 == 1))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of patterns, `2^n`.
    pub fn len(&self) -> usize {
        1 << self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn get(&self, v: u32) -> bool {
        (self.words[(v >> 6) as usize] >> (v & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, v: u32, value: bool) {
        let w = &mut self.words[(v >> 6) as usize];
        if value {
            *w |= 1 << (v & 63);
        } else {
            *w &= !(1 << (v & 63));
        }
    }

    /// Size of the FG set.
    pub fn count_fg(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_trivial(&self) -> bool {
        let c = self.count_fg();
        c == 0 || c == self.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len() as u32).map(move |v| self.get(v))
    }

    /// Hex digits of the `2^n`-bit number whose bit `v` is the output on
    /// pattern `v`, most significant digit first.
    pub fn to_hex(&self) -> String {
        let digits = self.len().div_ceil(4);
        (0..digits)
            .rev()
            .map(|d| {
                let nibble = (0..4)
                    .filter(|b| {
                        let v = d * 4 + b;
                        v < self.len() && self.get(v as u32)
                    })
                    .fold(0u32, |acc, b| acc | 1 << b);
                char::from_digit(nibble, 16).expect("nibble")
            })
            .collect()
    }

    pub fn from_hex(n: usize, hex: &str) -> Result<Self, CombineError> {
        check_arity(n)?;
        let mut t = Self::always_bg(n);
        let digits = t.len().div_ceil(4);
        if hex.len() != digits {
            return Err(CombineError::Format(format!(
                "truth table for n = {n} needs {digits} hex digits, got {}",
                hex.len()
            )));
        }
        for (i, c) in hex.chars().rev().enumerate() {
            let nibble = c
                .to_digit(16)
                .ok_or_else(|| CombineError::Format(format!("invalid hex digit {c:?}")))?;
            for b in 0..4 {
                if nibble >> b & 1 == 1 {
                    let v = i * 4 + b;
                    if v >= t.len() {
                        return Err(CombineError::Format("bits set beyond 2^n".into()));
                    }
                    t.set(v as u32, true);
                }
            }
        }
        Ok(t)
    }
}

/// Probability of answering FG on each pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticTable {
    n: usize,
    q: Vec<f64>,
}

impl StochasticTable {
    pub fn new(n: usize, q: Vec<f64>) -> Result<Self, CombineError> {
        check_arity(n)?;
        if q.len() != 1 << n {
            return Err(CombineError::LengthMismatch {
                expected: 1 << n,
                found: q.len(),
            });
        }
        check_unit(&q)?;
        Ok(Self { n, q })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }
}

/// A soft combiner: one score in `[0, 1]` per pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    n: usize,
    score: Vec<f64>,
}

impl ScoreTable {
    pub fn new(n: usize, score: Vec<f64>) -> Result<Self, CombineError> {
        check_arity(n)?;
        if score.len() != 1 << n {
            return Err(CombineError::LengthMismatch {
                expected: 1 << n,
                found: score.len(),
            });
        }
        check_unit(&score)?;
        Ok(Self { n, score })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn scores(&self) -> &[f64] {
        &self.score
    }

    pub fn threshold(&self, tau: f64) -> TruthTable {
        threshold(self, tau)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Combiner {
    Deterministic(TruthTable),
    Stochastic(StochasticTable),
    Scored { scores: ScoreTable, threshold: f64 },
}

impl Combiner {
    pub fn arity(&self) -> usize {
        match self {
            Combiner::Deterministic(t) => t.n(),
            Combiner::Stochastic(s) => s.n(),
            Combiner::Scored { scores, .. } => scores.n(),
        }
    }

    /// Probability of answering FG on pattern `v`.
    pub fn fg_probability(&self, v: u32) -> f64 {
        match self {
            Combiner::Deterministic(t) => t.get(v) as u8 as f64,
            Combiner::Stochastic(s) => s.q[v as usize],
            Combiner::Scored { scores, threshold } => (scores.score[v as usize] >= *threshold) as u8 as f64,
        }
    }

    /// The truth table, when the combiner is deterministic.
    pub fn truth_table(&self) -> Option<TruthTable> {
        match self {
            Combiner::Deterministic(t) => Some(t.clone()),
            Combiner::Scored { scores, threshold: tau } => Some(threshold(scores, *tau)),
            Combiner::Stochastic(_) => None,
        }
    }
}

impl From<TruthTable> for Combiner {
    fn from(t: TruthTable) -> Self {
        Combiner::Deterministic(t)
    }
}

impl From<StochasticTable> for Combiner {
    fn from(s: StochasticTable) -> Self {
        Combiner::Stochastic(s)
    }
}

/// Fraction of algorithms answering FG, per pattern.
pub fn prop_fg_scores(n: usize) -> ScoreTable {
    assert!((1..=MAX_ARITY).contains(&n), "arity {n} out of range");
    let score = (0..1u32 << n).map(|v| v.count_ones() as f64 / n as f64).collect();
    ScoreTable { n, score }
}

/// FG iff at least a fraction `tau` of the algorithms answer FG.
pub fn prop_fg(n: usize, tau: f64) -> TruthTable {
    threshold(&prop_fg_scores(n), tau)
}

/// FG iff at least half of the algorithms answer FG; ties go to FG.
pub fn majority_vote(n: usize) -> TruthTable {
    prop_fg(n, 0.5)
}

/// FG exactly on patterns with `score >= tau`.
pub fn threshold(scores: &ScoreTable, tau: f64) -> TruthTable {
    TruthTable::from_fn(scores.n, |v| scores.score[v as usize] >= tau)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdCounting {
    /// Every distinct truth table, including always-FG and always-BG.
    All,
    /// Only truth tables that are neither always-FG nor always-BG.
    Nontrivial,
}

/// Distinct thresholdings of `scores`, by decreasing FG-set size.
///
/// With `k` distinct score values, thresholding at each of them gives `k`
/// tables (the smallest value gives always-FG), and one more threshold just
/// above the maximum gives always-BG: `k + 1` in total.
pub fn enumerate_thresholds(scores: &ScoreTable) -> Vec<(f64, TruthTable)> {
    enumerate_thresholds_with(scores, ThresholdCounting::All)
}

pub fn enumerate_thresholds_with(scores: &ScoreTable, counting: ThresholdCounting) -> Vec<(f64, TruthTable)> {
    let mut distinct: Vec<f64> = scores.score.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let mut out = Vec::with_capacity(distinct.len() + 1);
    for &tau in &distinct {
        out.push((tau, threshold(scores, tau)));
    }
    let max = *distinct.last().expect("2^n >= 1 scores");
    out.push((max.next_up(), TruthTable::always_bg(scores.n)));
    if counting == ThresholdCounting::Nontrivial {
        out.retain(|(_, t)| !t.is_trivial());
    }
    out
}

/// Algorithm index and name of a parameter replaced by the prior.
pub type Fallback = (usize, &'static str);

/// Per-algorithm false omission rate and precision measured on a learning set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesParams {
    pub for_: Vec<f64>,
    pub ppv: Vec<f64>,
    /// Learning-set confusion counts of each algorithm taken alone.
    pub counts: Vec<ConfusionCounts>,
}

impl BayesParams {
    pub fn n(&self) -> usize {
        self.ppv.len()
    }

    /// Parameters of the algorithms in `subset`, in that order.
    pub fn select(&self, subset: &[usize]) -> BayesParams {
        BayesParams {
            for_: subset.iter().map(|&j| self.for_[j]).collect(),
            ppv: subset.iter().map(|&j| self.ppv[j]).collect(),
            counts: subset.iter().map(|&j| self.counts[j]).collect(),
        }
    }
}

fn single_algorithm_counts(ls: &PatternHistogram, j: usize) -> ConfusionCounts {
    let p = project(ls, &[j]).expect("index in range");
    let (tp, fp) = p.get(1);
    ConfusionCounts {
        tp,
        fp,
        fn_: p.total_fg() - tp,
        tn: p.total_bg() - fp,
    }
}

/// PPV and FOR of every algorithm, each taken alone on the learning set.
pub fn learn_bayes(ls_hist: &PatternHistogram) -> Result<BayesParams, CombineError> {
    let (params, undefined) = learn_bayes_lenient(ls_hist)?;
    if let Some(&(algorithm, parameter)) = undefined.first() {
        return Err(CombineError::UndefinedParameter { algorithm, parameter });
    }
    Ok(params)
}

/// Like [`learn_bayes`], but undefined parameters fall back to the global FG
/// prior of the learning set; the fallbacks are returned alongside.
pub fn learn_bayes_lenient(ls_hist: &PatternHistogram) -> Result<(BayesParams, Vec<Fallback>), CombineError> {
    if ls_hist.total() == 0 {
        return Err(CombineError::EmptyLearningSet);
    }
    let prior = ls_hist.total_fg() as f64 / ls_hist.total() as f64;
    let mut undefined = Vec::new();
    let mut params = BayesParams {
        for_: Vec::with_capacity(ls_hist.n()),
        ppv: Vec::with_capacity(ls_hist.n()),
        counts: Vec::with_capacity(ls_hist.n()),
    };
    for j in 0..ls_hist.n() {
        let c = single_algorithm_counts(ls_hist, j);
        let ppv = if c.tp + c.fp > 0 {
            c.tp as f64 / (c.tp + c.fp) as f64
        } else {
            undefined.push((j, "PPV"));
            prior
        };
        let for_ = if c.fn_ + c.tn > 0 {
            c.fn_ as f64 / (c.fn_ + c.tn) as f64
        } else {
            undefined.push((j, "FOR"));
            prior
        };
        params.ppv.push(ppv);
        params.for_.push(for_);
        params.counts.push(c);
    }
    Ok((params, undefined))
}

/// Mean over algorithms of PPV where the algorithm says FG and FOR where it
/// says BG.
pub fn bayes_scores(params: &BayesParams) -> ScoreTable {
    let n = params.n();
    assert!((1..=MAX_ARITY).contains(&n), "arity {n} out of range");
    let score = (0..1u32 << n)
        .map(|v| {
            let sum: f64 = (0..n)
                .map(|j| {
                    if (v >> j) & 1 == 1 {
                        params.ppv[j]
                    } else {
                        params.for_[j]
                    }
                })
                .sum();
            sum / n as f64
        })
        .collect();
    ScoreTable { n, score }
}

/// Score used by BKS on patterns never seen in the learning set.
#[derive(Debug, Clone, PartialEq)]
pub enum BksFallback {
    /// Global FG prior of the learning set.
    Prior,
    Constant(f64),
    /// Averaged-Bayes score of the pattern.
    AveragedBayes,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BksTable {
    n: usize,
    p_fg: Vec<f64>,
    seen: Vec<bool>,
    fallback: Vec<f64>,
}

impl BksTable {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Empirical `P(FG | pattern)`, `None` when the pattern was never seen.
    pub fn p_fg(&self, v: u32) -> Option<f64> {
        self.seen[v as usize].then(|| self.p_fg[v as usize])
    }

    pub fn seen(&self, v: u32) -> bool {
        self.seen[v as usize]
    }

    pub fn fallback(&self, v: u32) -> f64 {
        self.fallback[v as usize]
    }

    pub fn scores(&self) -> ScoreTable {
        let score = (0..self.p_fg.len())
            .map(|v| if self.seen[v] { self.p_fg[v] } else { self.fallback[v] })
            .collect();
        ScoreTable { n: self.n, score }
    }
}

pub fn learn_bks(ls_hist: &PatternHistogram) -> Result<BksTable, CombineError> {
    learn_bks_with(ls_hist, &BksFallback::Prior)
}

pub fn learn_bks_with(ls_hist: &PatternHistogram, fallback: &BksFallback) -> Result<BksTable, CombineError> {
    let n = ls_hist.n();
    check_arity(n)?;
    if ls_hist.total() == 0 {
        return Err(CombineError::EmptyLearningSet);
    }
    let size = 1usize << n;
    let mut p_fg = vec![0.0; size];
    let mut seen = vec![false; size];
    for e in ls_hist.entries() {
        p_fg[e.pattern as usize] = e.fg as f64 / (e.fg + e.bg) as f64;
        seen[e.pattern as usize] = true;
    }
    let fallback = match fallback {
        BksFallback::Prior => vec![ls_hist.total_fg() as f64 / ls_hist.total() as f64; size],
        BksFallback::Constant(c) => {
            check_unit(&[*c])?;
            vec![*c; size]
        }
        BksFallback::AveragedBayes => {
            let (params, _) = learn_bayes_lenient(ls_hist)?;
            bayes_scores(&params).score
        }
    };
    Ok(BksTable {
        n,
        p_fg,
        seen,
        fallback,
    })
}

/// `q_v = sum_i weights_i * q_v(combiner_i)`.
pub fn mixture(combiners: &[Combiner], weights: &[f64]) -> Result<StochasticTable, CombineError> {
    if combiners.len() != weights.len() {
        return Err(CombineError::WeightCount {
            combiners: combiners.len(),
            weights: weights.len(),
        });
    }
    let Some(first) = combiners.first() else {
        return Err(CombineError::BadWeights(0.0));
    };
    let n = first.arity();
    if combiners.iter().any(|c| c.arity() != n) {
        return Err(CombineError::ArityMismatch);
    }
    let sum: f64 = weights.iter().sum();
    if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) || (sum - 1.0).abs() > 1e-9 {
        return Err(CombineError::BadWeights(sum));
    }
    let q = (0..1u32 << n)
        .map(|v| {
            let p: f64 = combiners
                .iter()
                .zip(weights)
                .map(|(c, &w)| w * c.fg_probability(v))
                .sum();
            p.clamp(0.0, 1.0)
        })
        .collect();
    StochasticTable::new(n, q)
}

/// Random Choice: answer BG with `p_bg`, FG with `p_fg`, or copy algorithm
/// `j` with `per_algorithm[j]`.
pub fn random_choice(p_bg: f64, p_fg: f64, per_algorithm: &[f64]) -> Result<StochasticTable, CombineError> {
    let n = per_algorithm.len();
    let mut combiners = vec![TruthTable::always_bg(n).into(), TruthTable::always_fg(n).into()];
    let mut weights = vec![p_bg, p_fg];
    for (j, &w) in per_algorithm.iter().enumerate() {
        combiners.push(TruthTable::single(n, j)?.into());
        weights.push(w);
    }
    mixture(&combiners, &weights)
}

/// On-disk combiner description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinerFile {
    pub kind: CombinerKind,
    pub n: usize,
    #[serde(default)]
    pub algorithms: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CombinerKind {
    Deterministic,
    Stochastic,
    Scored,
}

impl CombinerFile {
    pub fn from_combiner(combiner: &Combiner, algorithms: &[String]) -> Self {
        let n = combiner.arity();
        let base = CombinerFile {
            kind: CombinerKind::Deterministic,
            n,
            algorithms: algorithms.to_vec(),
            truth: None,
            q: None,
            score: None,
            tau: None,
        };
        match combiner {
            Combiner::Deterministic(t) => CombinerFile {
                truth: Some(t.to_hex()),
                ..base
            },
            Combiner::Stochastic(s) => CombinerFile {
                kind: CombinerKind::Stochastic,
                q: Some(s.q.clone()),
                ..base
            },
            Combiner::Scored { scores, threshold } => CombinerFile {
                kind: CombinerKind::Scored,
                score: Some(scores.score.clone()),
                tau: Some(*threshold),
                ..base
            },
        }
    }

    pub fn to_combiner(&self) -> Result<Combiner, CombineError> {
        if !self.algorithms.is_empty() && self.algorithms.len() != self.n {
            return Err(CombineError::Format(format!(
                "{} algorithm names for n = {}",
                self.algorithms.len(),
                self.n
            )));
        }
        let missing = |field: &str| CombineError::Format(format!("{:?} combiner needs `{field}`", self.kind));
        match self.kind {
            CombinerKind::Deterministic => {
                let hex = self.truth.as_deref().ok_or_else(|| missing("truth"))?;
                Ok(Combiner::Deterministic(TruthTable::from_hex(self.n, hex)?))
            }
            CombinerKind::Stochastic => {
                let q = self.q.clone().ok_or_else(|| missing("q"))?;
                Ok(Combiner::Stochastic(StochasticTable::new(self.n, q)?))
            }
            CombinerKind::Scored => {
                let score = self.score.clone().ok_or_else(|| missing("score"))?;
                let tau = self.tau.ok_or_else(|| missing("tau"))?;
                if !tau.is_finite() {
                    return Err(CombineError::Format("tau must be finite".into()));
                }
                Ok(Combiner::Scored {
                    scores: ScoreTable::new(self.n, score)?,
                    threshold: tau,
                })
            }
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("combiner file serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, CombineError> {
        serde_json::from_str(text).map_err(|e| CombineError::Format(e.to_string()))
    }
}
