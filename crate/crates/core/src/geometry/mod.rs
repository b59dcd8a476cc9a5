//! Achievable regions in the weighted ROC plane `(FPR̄, TPR̄)`.
//!
//! Predicting FG on pattern `v` moves a combiner's weighted point by the
//! generator of `v`. A combiner that predicts FG with probability `q_v` lands
//! on `sum_v q_v * g_v`, so the set of all pixelwise combiners is the
//! Minkowski sum of the segments `[0, g_v]`: a zonogon.

mod envelope;
mod hull;
mod zonogon;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, VideoKey};
use crate::histogram::{extract_bits, PatternHistogram};
use crate::metrics::{HistogramSet, Layout, MetricsError};

pub use envelope::{union_envelope, union_over_subsets, union_up_to, Envelope, EnvelopeChain};
pub use hull::{convex_hull, polygon_contains, random_choice_region};
pub use zonogon::{zonogon, Zonogon, ANGLE_TOLERANCE};

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("generator of pattern {pattern:#x} is not in the first quadrant: ({dx}, {dy})")]
    InvalidGenerator { pattern: u32, dx: f64, dy: f64 },
    #[error("empty input")]
    Empty,
    #[error("chain x coordinates must strictly increase (index {0})")]
    NonMonotoneChain(usize),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn dist(self, o: Point) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }
}

impl std::ops::Add for Point {
    type Output = Point;

    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Point {
    type Output = Point;

    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Point::new(x, y)
    }
}

/// Weighted-ROC displacement of predicting FG on `pattern`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub pattern: u32,
    pub dx: f64,
    pub dy: f64,
}

/// Weight of every video in a category-weighted mean of ratios over
/// `totals`. Videos with `totals == 0` and categories without any usable
/// video get weight 0.
fn video_weights(layout: &Layout, totals: impl Fn(usize) -> u64) -> Vec<f64> {
    let mut w = vec![0.0; layout.video_count()];
    let usable: Vec<usize> = layout
        .ranges()
        .iter()
        .map(|r| r.clone().filter(|&i| totals(i) > 0).count())
        .collect();
    let categories = usable.iter().filter(|&&c| c > 0).count();
    for (range, &count) in layout.ranges().iter().zip(&usable) {
        for i in range.clone() {
            if count > 0 && totals(i) > 0 {
                w[i] = 1.0 / (categories as f64 * count as f64);
            }
        }
    }
    w
}

fn fold_sorted(mut terms: Vec<Generator>) -> Vec<Generator> {
    terms.sort_by_key(|g| g.pattern);
    let mut out: Vec<Generator> = Vec::with_capacity(terms.len());
    for g in terms {
        match out.last_mut() {
            Some(last) if last.pattern == g.pattern => {
                last.dx += g.dx;
                last.dy += g.dy;
            }
            _ => out.push(g),
        }
    }
    out.retain(|g| g.dx != 0.0 || g.dy != 0.0);
    out
}

/// One generator per pattern with a nonzero contribution, sorted by pattern.
pub fn build_generators(set: &HistogramSet) -> Vec<Generator> {
    let hists = set.histograms();
    let wx = video_weights(set.layout(), |i| hists[i].total_bg());
    let wy = video_weights(set.layout(), |i| hists[i].total_fg());
    let mut terms = Vec::new();
    for (i, h) in hists.iter().enumerate() {
        let sx = if wx[i] > 0.0 { wx[i] / h.total_bg() as f64 } else { 0.0 };
        let sy = if wy[i] > 0.0 { wy[i] / h.total_fg() as f64 } else { 0.0 };
        for e in h.entries() {
            terms.push(Generator {
                pattern: e.pattern,
                dx: e.bg as f64 * sx,
                dy: e.fg as f64 * sy,
            });
        }
    }
    fold_sorted(terms)
}

/// [`build_generators`] from per-video histograms keyed like the corpus.
pub fn build_generators_for(
    corpus_hists: &BTreeMap<VideoKey, PatternHistogram>,
    corpus: &Corpus,
) -> Result<Vec<Generator>, GeometryError> {
    let set = HistogramSet::new(corpus_hists.clone(), corpus)?;
    Ok(build_generators(&set))
}

/// Generators of the algorithms in `subset`: patterns are merged by their
/// bits on `subset`, bit `i` of the result being algorithm `subset[i]`.
pub fn project_generators(gens: &[Generator], subset: &[usize]) -> Vec<Generator> {
    let terms = gens
        .iter()
        .map(|g| Generator {
            pattern: extract_bits(g.pattern, subset),
            ..*g
        })
        .collect();
    fold_sorted(terms)
}

/// Weighted `(FPR̄, TPR̄)` of a combiner answering FG with probability `q(v)`.
pub fn point_of(gens: &[Generator], q: impl Fn(u32) -> f64) -> Point {
    let (mut x, mut y) = (0.0, 0.0);
    for g in gens {
        let p = q(g.pattern);
        x += p * g.dx;
        y += p * g.dy;
    }
    Point::new(x, y)
}
