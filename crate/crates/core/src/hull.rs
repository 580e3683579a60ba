//! Andrew's monotone chain and the shoelace formula.

use crate::{cross, Vec2};

/// Convex hull in counterclockwise order, collinear points dropped.
///
/// Fewer than three affinely independent points yield the distinct extreme
/// points (0, 1 or 2 of them).
pub fn convex_hull(points: &[Vec2]) -> Vec<Vec2> {
    let mut pts: Vec<Vec2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let mut hull: Vec<Vec2> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 1] - hull[hull.len() - 2], p - hull[hull.len() - 2]) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower && cross(hull[hull.len() - 1] - hull[hull.len() - 2], p - hull[hull.len() - 2]) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// Signed shoelace area of a polygon given by its vertex cycle (not repeated).
pub fn shoelace(vertices: &[Vec2]) -> f64 {
    let n = vertices.len();
    if n < 3 {
        return 0.0;
    }
    let o = vertices[0];
    let terms = (1..n - 1).map(|i| cross(vertices[i] - o, vertices[i + 1] - o));
    0.5 * crate::compensated_sum(terms)
}

/// Area of the convex hull of a point set.
pub fn hull_area_points(points: &[Vec2]) -> f64 {
    shoelace(&convex_hull(points))
}
