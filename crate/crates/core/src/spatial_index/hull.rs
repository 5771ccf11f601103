//! Convex hulls and their outward offset by a fixed distance.

use std::f64::consts::PI;

/// Planar point in meters.
pub type Vec2 = (f64, f64);

fn cross(o: Vec2, a: Vec2, b: Vec2) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Convex hull by Andrew's monotone chain, counter-clockwise, without
/// collinear vertices. One vertex for coincident input, two for collinear.
pub fn convex_hull(points: &[Vec2]) -> Vec<Vec2> {
    let mut pts: Vec<Vec2> = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let mut hull: Vec<Vec2> = Vec::with_capacity(pts.len() * 2);
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
        {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    if hull.len() == 1 {
        // all points collinear and the chain collapsed: keep both extremes
        return vec![pts[0], pts[pts.len() - 1]];
    }
    hull
}

/// Convex polygon with counter-clockwise vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<Vec2>,
    min: Vec2,
    max: Vec2,
}

impl ConvexPolygon {
    fn new(vertices: Vec<Vec2>) -> Self {
        let mut min = (f64::INFINITY, f64::INFINITY);
        let mut max = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &(x, y) in &vertices {
            min = (min.0.min(x), min.1.min(y));
            max = (max.0.max(x), max.1.max(y));
        }
        ConvexPolygon { vertices, min, max }
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn bounding_box(&self) -> (Vec2, Vec2) {
        (self.min, self.max)
    }

    /// Closed containment test in O(log n) using the fan around vertex 0.
    pub fn contains(&self, q: Vec2) -> bool {
        if q.0 < self.min.0 || q.0 > self.max.0 || q.1 < self.min.1 || q.1 > self.max.1 {
            return false;
        }
        let v = &self.vertices;
        let n = v.len();
        if n < 3 {
            return false;
        }
        let p0 = v[0];
        if cross(p0, v[1], q) < 0.0 || cross(p0, v[n - 1], q) > 0.0 {
            return false;
        }
        // largest i in [1, n-2] with q left of or on ray p0 -> v[i]
        let (mut lo, mut hi) = (1usize, n - 1);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if cross(p0, v[mid], q) >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        cross(v[lo], v[lo + 1], q) >= 0.0
    }
}

/// Chords per arc for a circumscribed approximation of `turn` radians whose
/// outward deviation stays below `tolerance` at radius `radius`.
fn chords_for(turn: f64, radius: f64, tolerance: f64, min_chords: usize) -> usize {
    let max_step = 2.0 * (radius / (radius + tolerance)).acos();
    let needed = if max_step > 0.0 {
        (turn / max_step).ceil() as usize
    } else {
        min_chords
    };
    needed.max(min_chords)
}

fn push_arc(out: &mut Vec<Vec2>, center: Vec2, start: f64, turn: f64, radius: f64, chords: usize, closed: bool) {
    let step = turn / chords as f64;
    let outer = radius / (step / 2.0).cos();
    out.push((center.0 + radius * start.cos(), center.1 + radius * start.sin()));
    for j in 0..chords {
        let a = start + (j as f64 + 0.5) * step;
        out.push((center.0 + outer * a.cos(), center.1 + outer * a.sin()));
    }
    if !closed {
        let end = start + turn;
        out.push((center.0 + radius * end.cos(), center.1 + radius * end.sin()));
    }
}

/// Outward offset of a convex hull by `distance`.
///
/// Arcs around hull vertices are replaced by circumscribed chords (at least
/// `min_chords` per vertex, outward deviation under `tolerance`), so the
/// result always contains the exact offset region. One-vertex hulls become
/// discs and two-vertex hulls become capsules.
pub fn dilate(hull: &[Vec2], distance: f64, tolerance: f64, min_chords: usize) -> ConvexPolygon {
    assert!(!hull.is_empty(), "dilate needs at least one vertex");
    // guard the closed-ball boundary against rounding in the trigonometry
    let radius = distance * (1.0 + 1e-9) + 1e-6;
    let mut out = Vec::new();
    if hull.len() == 1 {
        let chords = chords_for(2.0 * PI, radius, tolerance, min_chords);
        push_arc(&mut out, hull[0], 0.0, 2.0 * PI, radius, chords, true);
        return ConvexPolygon::new(out);
    }
    let n = hull.len();
    let normal_angle = |i: usize| {
        let a = hull[i];
        let b = hull[(i + 1) % n];
        // outward normal of a counter-clockwise edge points to its right
        (-(b.0 - a.0)).atan2(b.1 - a.1)
    };
    for i in 0..n {
        let incoming = normal_angle((i + n - 1) % n);
        let outgoing = normal_angle(i);
        let mut turn = outgoing - incoming;
        while turn <= 0.0 {
            turn += 2.0 * PI;
        }
        while turn > 2.0 * PI {
            turn -= 2.0 * PI;
        }
        let chords = chords_for(turn, radius, tolerance, min_chords);
        push_arc(&mut out, hull[i], incoming, turn, radius, chords, false);
    }
    ConvexPolygon::new(out)
}

/// Exact Euclidean distance from `q` to the convex region spanned by `hull`.
pub fn distance_to_hull(hull: &[Vec2], q: Vec2) -> f64 {
    let seg = |a: Vec2, b: Vec2| {
        let (dx, dy) = (b.0 - a.0, b.1 - a.1);
        let len2 = dx * dx + dy * dy;
        let t = if len2 == 0.0 {
            0.0
        } else {
            (((q.0 - a.0) * dx + (q.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
        };
        let (px, py) = (a.0 + t * dx, a.1 + t * dy);
        ((q.0 - px).powi(2) + (q.1 - py).powi(2)).sqrt()
    };
    match hull.len() {
        0 => f64::INFINITY,
        1 => seg(hull[0], hull[0]),
        2 => seg(hull[0], hull[1]),
        n => {
            let inside = (0..n).all(|i| cross(hull[i], hull[(i + 1) % n], q) >= 0.0);
            if inside {
                0.0
            } else {
                (0..n)
                    .map(|i| seg(hull[i], hull[(i + 1) % n]))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hull_of_square_with_interior_points() {
        let pts = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (0.5, 0.5), (0.5, 0.0)];
        let hull = convex_hull(&pts);
        assert_eq!(hull.len(), 4);
    }

    #[test]
    fn degenerate_hulls() {
        assert_eq!(convex_hull(&[(1.0, 1.0), (1.0, 1.0)]).len(), 1);
        let line = convex_hull(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)]);
        assert_eq!(line, vec![(0.0, 0.0), (2.0, 2.0)]);
    }

    #[test]
    fn disc_and_capsule() {
        let disc = dilate(&[(0.0, 0.0)], 500.0, 0.01, 8);
        assert!(disc.contains((500.0, 0.0)));
        assert!(disc.contains((0.0, -499.9)));
        assert!(!disc.contains((360.0, 360.0)));
        let capsule = dilate(&[(0.0, 0.0), (100.0, 0.0)], 500.0, 0.01, 8);
        assert!(capsule.contains((50.0, 500.0)));
        assert!(capsule.contains((600.0, 0.0)));
        assert!(!capsule.contains((50.0, 501.0)));
    }

    #[test]
    fn chord_count_and_error_bound() {
        let square = [(0.0, 0.0), (100.0, 0.0), (100.0, 100.0), (0.0, 100.0)];
        let poly = dilate(&square, 500.0, 0.01, 8);
        // at least 8 chords per vertex
        assert!(poly.vertices().len() >= 4 * (8 + 2));
        for &v in poly.vertices() {
            let d = distance_to_hull(&square, v);
            assert!(d >= 500.0 - 1e-6 && d < 500.0 + 0.01, "{d}");
        }
    }

    #[test]
    fn point_499m_from_square_edge_is_inside() {
        let square = [(0.0, 0.0), (100.0, 0.0), (100.0, 100.0), (0.0, 100.0)];
        let poly = dilate(&square, 500.0, 0.01, 8);
        assert!(poly.contains((50.0, 100.0 + 499.0)));
        assert!(poly.contains((-499.0, 50.0)));
        assert!(!poly.contains((50.0, 100.0 + 501.0)));
    }

    #[test]
    fn dilation_agrees_with_exact_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let pts: Vec<Vec2> = (0..rng.gen_range(1..12))
                .map(|_| (rng.gen_range(0.0..300.0), rng.gen_range(0.0..300.0)))
                .collect();
            let hull = convex_hull(&pts);
            let poly = dilate(&hull, 500.0, 0.01, 8);
            for _ in 0..500 {
                let q = (rng.gen_range(-900.0..1200.0), rng.gen_range(-900.0..1200.0));
                let d = distance_to_hull(&hull, q);
                if d <= 500.0 {
                    assert!(poly.contains(q), "true member at {d} m excluded");
                } else if d > 500.02 {
                    assert!(!poly.contains(q), "point at {d} m included");
                }
            }
        }
    }
}
