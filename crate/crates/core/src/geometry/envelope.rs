use rayon::prelude::*;

use super::zonogon::{zonogon, Zonogon};
use super::{project_generators, Generator, GeometryError, Point};
use crate::search::{selections_of_size, Selection};

/// Interior points closer than this to the chord of their neighbours are dropped.
const SIMPLIFY_EPS: f64 = 1e-14;
/// Chain endpoints this close to `x = 1` are snapped onto it.
const SNAP_EPS: f64 = 1e-9;

/// Piecewise-linear function of x given by its vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeChain {
    points: Vec<Point>,
}

impl EnvelopeChain {
    pub fn new(points: Vec<Point>) -> Result<Self, GeometryError> {
        if points.is_empty() {
            return Err(GeometryError::Empty);
        }
        if let Some(i) = points.windows(2).position(|w| w[1].x <= w[0].x) {
            return Err(GeometryError::NonMonotoneChain(i + 1));
        }
        Ok(Self { points })
    }

    /// Chain through points with non-decreasing x. Runs of equal x collapse
    /// to their largest (`keep_max`) or smallest y.
    pub(crate) fn from_monotone(points: &[Point], keep_max: bool) -> Self {
        let mut out: Vec<Point> = Vec::with_capacity(points.len());
        for &p in points {
            match out.last_mut() {
                Some(last) if last.x >= p.x => {
                    last.y = if keep_max { last.y.max(p.y) } else { last.y.min(p.y) };
                }
                _ => out.push(p),
            }
        }
        let len = out.len();
        if let Some(last) = out.last_mut() {
            if len > 1 && (last.x - 1.0).abs() <= SNAP_EPS {
                last.x = 1.0;
            }
        }
        Self { points: out }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Value at `x`; constant beyond the endpoints.
    pub fn eval(&self, x: f64) -> f64 {
        let pts = &self.points;
        let first = pts[0];
        let last = pts[pts.len() - 1];
        if x <= first.x {
            return first.y;
        }
        if x >= last.x {
            return last.y;
        }
        let i = pts.partition_point(|p| p.x <= x);
        let (a, b) = (pts[i - 1], pts[i]);
        if x == a.x {
            return a.y;
        }
        a.y + (b.y - a.y) * ((x - a.x) / (b.x - a.x))
    }

    pub fn max(&self, other: &Self) -> Self {
        merge(self, other, true)
    }

    pub fn min(&self, other: &Self) -> Self {
        merge(self, other, false)
    }
}

fn merge(a: &EnvelopeChain, b: &EnvelopeChain, upper: bool) -> EnvelopeChain {
    let pick = |u: f64, v: f64| if upper { u.max(v) } else { u.min(v) };
    let mut xs: Vec<f64> = Vec::with_capacity(a.points.len() + b.points.len());
    let (mut i, mut j) = (0, 0);
    while i < a.points.len() || j < b.points.len() {
        let x = match (a.points.get(i), b.points.get(j)) {
            (Some(p), Some(q)) if p.x < q.x => {
                i += 1;
                p.x
            }
            (Some(p), Some(q)) if q.x < p.x => {
                j += 1;
                q.x
            }
            (Some(p), Some(_)) => {
                i += 1;
                j += 1;
                p.x
            }
            (Some(p), None) => {
                i += 1;
                p.x
            }
            (None, Some(q)) => {
                j += 1;
                q.x
            }
            (None, None) => unreachable!(),
        };
        if xs.last() != Some(&x) {
            xs.push(x);
        }
    }
    let mut out: Vec<Point> = Vec::with_capacity(xs.len() * 2);
    let mut prev: Option<(f64, f64, f64)> = None;
    for &x in &xs {
        let (ya, yb) = (a.eval(x), b.eval(x));
        if let Some((x0, ya0, yb0)) = prev {
            let (d0, d1) = (ya0 - yb0, ya - yb);
            if (d0 > 0.0 && d1 < 0.0) || (d0 < 0.0 && d1 > 0.0) {
                let t = d0 / (d0 - d1);
                let xc = x0 + t * (x - x0);
                if xc > x0 && xc < x {
                    out.push(Point::new(xc, ya0 + t * (ya - ya0)));
                }
            }
        }
        out.push(Point::new(x, pick(ya, yb)));
        prev = Some((x, ya, yb));
    }
    EnvelopeChain { points: simplify(out) }
}

fn simplify(points: Vec<Point>) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::with_capacity(points.len());
    for p in points {
        while out.len() >= 2 {
            let (a, b) = (out[out.len() - 2], out[out.len() - 1]);
            let chord = p - a;
            let len = chord.x.hypot(chord.y);
            if chord.cross(b - a).abs() <= SIMPLIFY_EPS * len {
                out.pop();
            } else {
                break;
            }
        }
        out.push(p);
    }
    out
}

/// Region between two chains: `lower(x) <= y <= upper(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub upper: EnvelopeChain,
    pub lower: EnvelopeChain,
}

impl Envelope {
    pub fn of(z: &Zonogon) -> Self {
        Self {
            upper: z.upper_chain(),
            lower: z.lower_chain(),
        }
    }

    pub fn merge(&self, other: &Self) -> Self {
        Self {
            upper: self.upper.max(&other.upper),
            lower: self.lower.min(&other.lower),
        }
    }

    pub fn contains(&self, p: Point, tol: f64) -> bool {
        let lo = self.lower.points()[0].x.min(self.upper.points()[0].x);
        let hi = self
            .lower
            .points()
            .last()
            .unwrap()
            .x
            .max(self.upper.points().last().unwrap().x);
        if p.x < lo - tol || p.x > hi + tol {
            return false;
        }
        let x = p.x.clamp(lo, hi);
        self.lower.eval(x) - tol <= p.y && p.y <= self.upper.eval(x) + tol
    }

    /// Closed boundary, counterclockwise: lower chain then upper chain reversed.
    pub fn polygon(&self) -> Vec<Point> {
        let mut out = self.lower.points().to_vec();
        for &p in self.upper.points().iter().rev() {
            if out.last() != Some(&p) && out.first() != Some(&p) {
                out.push(p);
            }
        }
        out
    }
}

/// Fixed pairwise tree reduction, so the result does not depend on the
/// number of threads.
fn tree_reduce(mut items: Vec<Envelope>) -> Option<Envelope> {
    while items.len() > 1 {
        items = items
            .par_chunks(2)
            .map(|c| if c.len() == 2 { c[0].merge(&c[1]) } else { c[0].clone() })
            .collect();
    }
    items.pop()
}

/// Boundary of the union of zonogons: pointwise max of the upper chains and
/// pointwise min of the lower chains.
pub fn union_envelope(zonogons: &[Zonogon]) -> Result<Envelope, GeometryError> {
    let chains: Vec<Envelope> = zonogons.par_iter().map(Envelope::of).collect();
    tree_reduce(chains).ok_or(GeometryError::Empty)
}

/// Union of the zonogons of every subset of the algorithms behind `gens`.
pub fn union_over_subsets<S>(gens: &[Generator], subsets: &[S]) -> Result<Envelope, GeometryError>
where
    S: AsRef<[usize]> + Sync,
{
    let chains = subsets
        .par_iter()
        .map(|s| zonogon(&project_generators(gens, s.as_ref())).map(|z| Envelope::of(&z)))
        .collect::<Result<Vec<_>, _>>()?;
    tree_reduce(chains).ok_or(GeometryError::Empty)
}

/// Union of the zonogons of all selections of at most `k` out of `n`
/// algorithms. A zonogon only grows when an algorithm is added, so only the
/// selections of exactly `min(k, n)` algorithms are visited; `prefilter =
/// false` visits every size instead.
pub fn union_up_to(gens: &[Generator], n: usize, k: usize, prefilter: bool) -> Result<Envelope, GeometryError> {
    const BATCH: usize = 4096;
    let k = k.min(n);
    let lo = if prefilter { k } else { 1 };
    let mut subsets = (lo..=k).flat_map(|size| selections_of_size(n, size));
    let mut acc: Option<Envelope> = None;
    loop {
        let batch: Vec<Selection> = subsets.by_ref().take(BATCH).collect();
        if batch.is_empty() {
            break;
        }
        let part = union_over_subsets(gens, &batch)?;
        acc = Some(match acc {
            Some(a) => a.merge(&part),
            None => part,
        });
    }
    acc.ok_or(GeometryError::Empty)
}
