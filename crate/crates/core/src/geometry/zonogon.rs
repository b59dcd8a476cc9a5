use super::envelope::EnvelopeChain;
use super::hull::polygon_contains;
use super::{Generator, GeometryError, Point};

/// Generators whose angles differ by at most this much are merged.
pub const ANGLE_TOLERANCE: f64 = 1e-12;

/// Convex polygon, counterclockwise from `(0, 0)`: first the lower-right
/// chain up to the sum of all generators, then the upper-left chain back.
#[derive(Debug, Clone, PartialEq)]
pub struct Zonogon {
    vertices: Vec<Point>,
    /// Number of merged generators; each chain has `edges + 1` points.
    edges: usize,
}

/// Minkowski sum of the segments `[0, g]`.
///
/// Zero generators are dropped, generators of equal angle are added, and the
/// rest are sorted by decreasing angle: their prefix sums from `(0, 0)` form
/// the upper-left chain, and its reflection through half the total forms the
/// lower-right chain.
pub fn zonogon(generators: &[Generator]) -> Result<Zonogon, GeometryError> {
    let mut dirs: Vec<(f64, Point)> = Vec::with_capacity(generators.len());
    for g in generators {
        if !(g.dx >= 0.0 && g.dy >= 0.0 && g.dx.is_finite() && g.dy.is_finite()) {
            return Err(GeometryError::InvalidGenerator {
                pattern: g.pattern,
                dx: g.dx,
                dy: g.dy,
            });
        }
        if g.dx > 0.0 || g.dy > 0.0 {
            dirs.push((g.dy.atan2(g.dx), Point::new(g.dx, g.dy)));
        }
    }
    dirs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut merged: Vec<(f64, Point)> = Vec::with_capacity(dirs.len());
    for (angle, v) in dirs {
        match merged.last_mut() {
            Some((lead, acc)) if *lead - angle <= ANGLE_TOLERANCE => *acc = *acc + v,
            _ => merged.push((angle, v)),
        }
    }
    let m = merged.len();
    let mut upper = Vec::with_capacity(m + 1);
    let mut p = Point::new(0.0, 0.0);
    upper.push(p);
    for (_, v) in &merged {
        p = p + *v;
        upper.push(p);
    }
    let total = p;
    let mut vertices = Vec::with_capacity(2 * m);
    // lower chain: total - upper[m - i]
    for i in 0..=m {
        vertices.push(total - upper[m - i]);
    }
    vertices[0] = Point::new(0.0, 0.0);
    vertices[m] = total;
    for i in (1..m).rev() {
        vertices.push(upper[i]);
    }
    Ok(Zonogon { vertices, edges: m })
}

impl Zonogon {
    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Sum of all generators, the vertex opposite `(0, 0)`.
    pub fn top(&self) -> Point {
        self.vertices[self.edges]
    }

    /// Lower-right boundary from `(0, 0)` to [`Self::top`].
    pub fn lower_points(&self) -> &[Point] {
        &self.vertices[..=self.edges]
    }

    /// Upper-left boundary from `(0, 0)` to [`Self::top`].
    pub fn upper_points(&self) -> Vec<Point> {
        let mut out = vec![self.vertices[0]];
        out.extend(self.vertices[self.edges + 1..].iter().rev().copied());
        if self.edges > 0 {
            out.push(self.top());
        }
        out
    }

    /// Upper boundary as a function of x; a vertical edge keeps its top.
    pub fn upper_chain(&self) -> EnvelopeChain {
        EnvelopeChain::from_monotone(&self.upper_points(), true)
    }

    /// Lower boundary as a function of x; a vertical edge keeps its bottom.
    pub fn lower_chain(&self) -> EnvelopeChain {
        EnvelopeChain::from_monotone(self.lower_points(), false)
    }

    pub fn contains(&self, p: Point, tol: f64) -> bool {
        polygon_contains(&self.vertices, p, tol)
    }

    /// Cross-product test on every consecutive triple.
    pub fn is_convex(&self, tol: f64) -> bool {
        let n = self.vertices.len();
        if n < 3 {
            return true;
        }
        (0..n).all(|i| {
            let (a, b, c) = (self.vertices[i], self.vertices[(i + 1) % n], self.vertices[(i + 2) % n]);
            (b - a).cross(c - b) >= -tol
        })
    }

    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| self.vertices[i].cross(self.vertices[(i + 1) % n]))
            .sum::<f64>()
            / 2.0
    }
}
