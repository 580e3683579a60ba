//! Directed polygonal lines, their convexification, and area functionals.
//!
//! Convexifying a line keeps its multiset of edge vectors and reorders the
//! edges by angle, producing a convex line from the same starting vertex.
//! Among all reorderings it has the largest hull area.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::legendre::Trajectory;
use crate::{cross, hull, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    Clockwise,
    Counterclockwise,
}

/// A directed polygonal line `a₁ … a_n` with `n ≥ 2` and no repeated consecutive vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonalLine {
    vertices: Vec<Vec2>,
}

impl PolygonalLine {
    pub fn new(vertices: Vec<Vec2>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::InvalidArgument("a polygonal line needs at least two vertices".into()));
        }
        if vertices.iter().any(|v| !v.x.is_finite() || !v.y.is_finite()) {
            return Err(Error::InvalidArgument("vertices must be finite".into()));
        }
        if vertices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("consecutive vertices must be distinct".into()));
        }
        Ok(Self { vertices })
    }

    /// The line starting at `start` and following `edges` in order.
    pub fn from_edges(start: Vec2, edges: &[Vec2]) -> Result<Self> {
        let mut vertices = Vec::with_capacity(edges.len() + 1);
        let mut p = start;
        vertices.push(p);
        for e in edges {
            p += e;
            vertices.push(p);
        }
        Self::new(vertices)
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn edges(&self) -> Vec<Vec2> {
        self.vertices.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn is_closed(&self) -> bool {
        self.vertices[0] == self.vertices[self.vertices.len() - 1]
    }

    /// Area of the convex hull of the vertices; zero when they are collinear.
    pub fn hull_area(&self) -> f64 {
        hull::hull_area_points(&self.vertices)
    }

    /// Reference direction for angle sorting: the closing chord `a₁ − a_n`, or `(1, 0)` if closed.
    pub fn reference_direction(&self) -> Vec2 {
        if self.is_closed() {
            Vec2::new(1.0, 0.0)
        } else {
            self.vertices[0] - self.vertices[self.vertices.len() - 1]
        }
    }

    /// Reorder the edges by increasing angle from [`Self::reference_direction`],
    /// measured in the given rotational sense.
    pub fn convexify(&self, orientation: Orientation) -> PolygonalLine {
        let sorted = self.convexified_edges(orientation);
        let mut out = PolygonalLine::from_edges(self.vertices[0], &sorted).expect("edges are nonzero");
        if self.is_closed() {
            let n = out.vertices.len();
            out.vertices[n - 1] = self.vertices[0];
        }
        out
    }

    /// The edge sequence of [`Self::convexify`], bit-for-bit a permutation of [`Self::edges`].
    pub fn convexified_edges(&self, orientation: Orientation) -> Vec<Vec2> {
        let edges = self.edges();
        convexification_order(&edges, self.reference_direction(), orientation)
            .into_iter()
            .map(|i| edges[i])
            .collect()
    }
}

/// Angle of `e` from `reference` in the given sense, in `[0, 2π)`. The zero vector has angle 0.
fn angle_from(reference: Vec2, e: Vec2, orientation: Orientation) -> f64 {
    if e == Vec2::zeros() {
        return 0.0;
    }
    let c = cross(reference, e);
    let s = match orientation {
        Orientation::Counterclockwise => c,
        Orientation::Clockwise => -c,
    };
    let mut a = s.atan2(reference.dot(&e));
    if a < 0.0 {
        a += TAU;
    }
    if a >= TAU {
        a -= TAU;
    }
    a
}

/// Permutation sorting `edges` by (angle from `reference`, norm, index).
pub fn convexification_order(edges: &[Vec2], reference: Vec2, orientation: Orientation) -> Vec<usize> {
    let keys: Vec<(f64, f64)> = edges.iter().map(|&e| (angle_from(reference, e, orientation), e.norm())).collect();
    let mut order: Vec<usize> = (0..edges.len()).collect();
    order.sort_by(|&i, &j| {
        keys[i]
            .0
            .total_cmp(&keys[j].0)
            .then(keys[i].1.total_cmp(&keys[j].1))
            .then(i.cmp(&j))
    });
    order
}

/// Curves carrying the signed area `Ã = ½∫(h₁h₂′ − h₁′h₂) dt`.
pub trait SignedArea {
    fn signed_area(&self) -> f64;
}

impl SignedArea for PolygonalLine {
    /// Exact for piecewise-linear curves; measured from `a₁`, so an open line
    /// is implicitly closed by its chord.
    fn signed_area(&self) -> f64 {
        let o = self.vertices[0];
        let terms = self.vertices.windows(2).map(|w| cross(w[0] - o, w[1] - o));
        0.5 * crate::compensated_sum(terms)
    }
}

impl SignedArea for Trajectory {
    /// Trapezoid rule on `h × h'` over the sample grid.
    fn signed_area(&self) -> f64 {
        let f: Vec<f64> = self.points.iter().zip(&self.derivs).map(|(p, d)| cross(*p, *d)).collect();
        let terms = self.times.windows(2).zip(f.windows(2)).map(|(t, f)| 0.5 * (t[1] - t[0]) * (f[0] + f[1]));
        0.5 * crate::compensated_sum(terms)
    }
}

pub fn signed_area_integral<C: SignedArea + ?Sized>(curve: &C) -> f64 {
    curve.signed_area()
}

/// Winding-number area `σ(P) = ∫ wind(P, x) dx` of a closed line, by fan triangulation from `a₁`.
pub fn winding_signed_area(p: &PolygonalLine) -> Result<f64> {
    if !p.is_closed() {
        return Err(Error::NotClosed);
    }
    let v = p.vertices();
    let o = v[0];
    let terms = (1..v.len().saturating_sub(2)).map(|i| cross(v[i] - o, v[i + 1] - o));
    Ok(0.5 * crate::compensated_sum(terms))
}
