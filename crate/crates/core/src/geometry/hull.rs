use super::Point;

const COLLINEAR_EPS: f64 = 1e-12;

fn turn(o: Point, a: Point, b: Point) -> f64 {
    (a - o).cross(b - o)
}

/// Monotone-chain convex hull, counterclockwise from the lowest-x (then
/// lowest-y) point. Collinear and duplicate points are dropped; collinear
/// input gives its two extreme points.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && turn(hull[hull.len() - 2], hull[hull.len() - 1], p) <= COLLINEAR_EPS {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && turn(hull[hull.len() - 2], hull[hull.len() - 1], p) <= COLLINEAR_EPS {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    if hull.len() == 2 && hull[0] == hull[1] {
        hull.pop();
    }
    hull
}

/// Hull of the individual algorithm points together with the trivial
/// combiners `(0, 0)` and `(1, 1)`.
pub fn random_choice_region(individual: &[Point]) -> Vec<Point> {
    let mut pts = individual.to_vec();
    pts.push(Point::new(0.0, 0.0));
    pts.push(Point::new(1.0, 1.0));
    convex_hull(&pts)
}

fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.x * ab.x + ab.y * ab.y;
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p.x - a.x) * ab.x + (p.y - a.y) * ab.y) / len2;
    let t = t.clamp(0.0, 1.0);
    p.dist(Point::new(a.x + t * ab.x, a.y + t * ab.y))
}

/// Whether `p` lies inside the convex counterclockwise polygon `poly` or
/// within `tol` of its boundary. Segments and single points are handled as
/// degenerate polygons.
pub fn polygon_contains(poly: &[Point], p: Point, tol: f64) -> bool {
    match poly.len() {
        0 => false,
        1 => p.dist(poly[0]) <= tol,
        2 => segment_distance(p, poly[0], poly[1]) <= tol,
        n => {
            let inside = (0..n).all(|i| turn(poly[i], poly[(i + 1) % n], p) >= 0.0);
            inside || (0..n).any(|i| segment_distance(p, poly[i], poly[(i + 1) % n]) <= tol)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pt(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    /// Vertex set by brute force: `a` is a vertex when some other point `b`
    /// makes every remaining point lie strictly left of `a -> b`, or on the
    /// segment between them.
    fn reference_vertices(points: &[Point]) -> Vec<Point> {
        let mut out = Vec::new();
        for &a in points {
            let is_vertex = points.iter().any(|&b| {
                b != a
                    && points.iter().all(|&c| {
                        let t = turn(a, b, c);
                        t > COLLINEAR_EPS
                            || (t.abs() <= COLLINEAR_EPS
                                && (c.x - a.x) * (c.x - b.x) + (c.y - a.y) * (c.y - b.y) <= 0.0)
                    })
            });
            if is_vertex {
                out.push(a);
            }
        }
        out.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
        out.dedup();
        out
    }

    #[test]
    fn triangle() {
        let h = convex_hull(&[pt(0.0, 0.0), pt(1.0, 1.0), pt(0.1, 0.8)]);
        assert_eq!(h, vec![pt(0.0, 0.0), pt(1.0, 1.0), pt(0.1, 0.8)]);
    }

    #[test]
    fn collinear_gives_segment() {
        let h = convex_hull(&[pt(0.5, 0.5), pt(0.0, 0.0), pt(1.0, 1.0), pt(0.25, 0.25)]);
        assert_eq!(h, vec![pt(0.0, 0.0), pt(1.0, 1.0)]);
        assert_eq!(convex_hull(&[pt(0.3, 0.3), pt(0.3, 0.3)]), vec![pt(0.3, 0.3)]);
    }

    #[test]
    fn random_points_match_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let pts: Vec<Point> = (0..100).map(|_| pt(rng.random(), rng.random())).collect();
            let mut hull = convex_hull(&pts);
            for i in 0..hull.len() {
                let (a, b, c) = (hull[i], hull[(i + 1) % hull.len()], hull[(i + 2) % hull.len()]);
                assert!(turn(a, b, c) > 0.0, "hull must turn left");
            }
            hull.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
            assert_eq!(hull, reference_vertices(&pts));
        }
    }

    #[test]
    fn containment() {
        let square = [pt(0.0, 0.0), pt(1.0, 0.0), pt(1.0, 1.0), pt(0.0, 1.0)];
        assert!(polygon_contains(&square, pt(0.5, 0.5), 0.0));
        assert!(polygon_contains(&square, pt(1.0, 0.5), 0.0));
        assert!(!polygon_contains(&square, pt(1.1, 0.5), 0.05));
        assert!(polygon_contains(&square, pt(1.04, 0.5), 0.05));
        let seg = [pt(0.0, 0.0), pt(1.0, 1.0)];
        assert!(polygon_contains(&seg, pt(0.5, 0.5), 1e-12));
        assert!(!polygon_contains(&seg, pt(0.5, 0.6), 1e-3));
    }

    #[test]
    fn random_choice_includes_corners() {
        let r = random_choice_region(&[pt(0.1, 0.8)]);
        assert_eq!(r, vec![pt(0.0, 0.0), pt(1.0, 1.0), pt(0.1, 0.8)]);
    }
}
