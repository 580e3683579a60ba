//! Increment laws and their cumulant generating functions.
//!
//! Every law here has a Laplace transform that is finite on the whole plane,
//! so `K(u) = log E e^{u·X}` is finite and smooth everywhere. A model may
//! carry a Gaussian regularization strength `eps`, in which case the
//! cumulant becomes `K(u) + eps |u|² / 2` (the law of `X + √eps N`).

use crate::error::{Error, Result};
use crate::{hull, Mat2, Vec2};

/// One-dimensional law of the second coordinate of a graph-type walk.
#[derive(Debug, Clone, PartialEq)]
pub enum Model1D {
    Gaussian { mean: f64, variance: f64 },
    Atoms { points: Vec<f64>, probs: Vec<f64> },
}

/// Geometry of the support of the increment law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SupportClass {
    /// The origin is interior to the convex hull of the support.
    FullPlane,
    ProperSubsetOfPlane,
    /// Support is contained in the vertical line `{mu1} × ℝ`.
    VerticalLine(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    Gaussian { mean: Vec2, cov: Mat2 },
    Atoms { points: Vec<Vec2>, probs: Vec<f64> },
    Graph1D { mu1: f64, y: Model1D },
}

/// A planar increment law, immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementModel {
    kind: ModelKind,
    eps: f64,
}

const PROB_SUM_TOL: f64 = 1e-12;
const COLLINEAR_TOL: f64 = 1e-12;

fn validate_probs(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidModel("atom list is empty".into()));
    }
    if probs.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
        return Err(Error::InvalidModel("atom probabilities must be positive".into()));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > PROB_SUM_TOL {
        return Err(Error::InvalidModel(format!("atom probabilities sum to {total}, not 1")));
    }
    Ok(())
}

impl Model1D {
    pub fn gaussian(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() || !variance.is_finite() || variance < 0.0 {
            return Err(Error::InvalidModel("1-D Gaussian needs finite mean and variance ≥ 0".into()));
        }
        Ok(Model1D::Gaussian { mean, variance })
    }

    pub fn atoms(points: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if points.len() != probs.len() {
            return Err(Error::InvalidModel("points and probs differ in length".into()));
        }
        validate_probs(&probs)?;
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidModel("atom points must be finite".into()));
        }
        for i in 0..points.len() {
            for j in 0..i {
                if points[i] == points[j] {
                    return Err(Error::InvalidModel("atom points must be distinct".into()));
                }
            }
        }
        Ok(Model1D::Atoms { points, probs })
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Model1D::Gaussian { variance, .. } => *variance == 0.0,
            Model1D::Atoms { points, .. } => points.len() < 2,
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Model1D::Gaussian { mean, .. } => *mean,
            Model1D::Atoms { points, probs } => points.iter().zip(probs).map(|(x, p)| x * p).sum(),
        }
    }

    /// Closed convex hull of the support, `(min, max)`; infinite for Gaussians.
    pub fn support_bounds(&self) -> (f64, f64) {
        match self {
            Model1D::Gaussian { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Model1D::Atoms { points, .. } => (
                points.iter().copied().fold(f64::INFINITY, f64::min),
                points.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            ),
        }
    }

    /// Probability mass sitting at `x` (zero for Gaussians).
    pub fn mass_at(&self, x: f64) -> f64 {
        match self {
            Model1D::Gaussian { .. } => 0.0,
            Model1D::Atoms { points, probs } => points.iter().zip(probs).filter(|(p, _)| **p == x).map(|(_, q)| *q).sum(),
        }
    }

    /// `(K(u), K'(u), K''(u))`.
    pub fn cumulant_derivs(&self, u: f64) -> (f64, f64, f64) {
        match self {
            Model1D::Gaussian { mean, variance } => (mean * u + 0.5 * variance * u * u, mean + variance * u, *variance),
            Model1D::Atoms { points, probs } => {
                if u == 0.0 {
                    let m = self.mean();
                    let var = points.iter().zip(probs).map(|(x, p)| p * (x - m) * (x - m)).sum();
                    return (0.0, m, var);
                }
                let scores: Vec<f64> = points.iter().zip(probs).map(|(x, p)| u * x + p.ln()).collect();
                let smax = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let w: Vec<f64> = scores.iter().map(|s| (s - smax).exp()).collect();
                let z: f64 = w.iter().sum();
                let m = points.iter().zip(&w).map(|(x, wi)| x * wi).sum::<f64>() / z;
                let var = points.iter().zip(&w).map(|(x, wi)| wi * (x - m) * (x - m)).sum::<f64>() / z;
                (smax + z.ln(), m, var)
            }
        }
    }
}

impl IncrementModel {
    pub fn gaussian(mean: Vec2, cov: Mat2) -> Result<Self> {
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("Gaussian parameters must be finite".into()));
        }
        let scale = 1.0 + cov.abs().max();
        if (cov[(0, 1)] - cov[(1, 0)]).abs() > 1e-12 * scale {
            return Err(Error::InvalidModel("covariance must be symmetric".into()));
        }
        let sym = 0.5 * (cov + cov.transpose());
        let eig = sym.symmetric_eigenvalues();
        if eig.min() < -1e-12 * scale {
            return Err(Error::InvalidModel("covariance must be positive semidefinite".into()));
        }
        Ok(Self { kind: ModelKind::Gaussian { mean, cov: sym }, eps: 0.0 })
    }

    /// Standard Gaussian shifted by `mean`.
    pub fn standard_gaussian(mean: Vec2) -> Self {
        Self { kind: ModelKind::Gaussian { mean, cov: Mat2::identity() }, eps: 0.0 }
    }

    pub fn atoms(points: Vec<Vec2>, probs: Vec<f64>) -> Result<Self> {
        if points.len() != probs.len() {
            return Err(Error::InvalidModel("points and probs differ in length".into()));
        }
        validate_probs(&probs)?;
        if points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::InvalidModel("atom points must be finite".into()));
        }
        for i in 0..points.len() {
            for j in 0..i {
                if points[i] == points[j] {
                    return Err(Error::InvalidModel("atom points must be distinct".into()));
                }
            }
        }
        Ok(Self { kind: ModelKind::Atoms { points, probs }, eps: 0.0 })
    }

    /// Uniform law on the given atoms.
    pub fn uniform_atoms(points: Vec<Vec2>) -> Result<Self> {
        let n = points.len();
        Self::atoms(points, vec![1.0 / n as f64; n])
    }

    /// Law of `(mu1, Y)`: the walk is the graph of a one-dimensional walk.
    pub fn graph1d(mu1: f64, y: Model1D) -> Result<Self> {
        if mu1 == 0.0 || !mu1.is_finite() {
            return Err(Error::InvalidModel("graph model needs a finite nonzero mu1".into()));
        }
        if y.is_constant() {
            return Err(Error::InvalidModel("graph model needs a non-constant y law".into()));
        }
        Ok(Self { kind: ModelKind::Graph1D { mu1, y }, eps: 0.0 })
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn epsilon(&self) -> f64 {
        self.eps
    }

    /// Same law convolved with `N(0, eps I)`.
    pub fn regularize(&self, eps: f64) -> Result<Self> {
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(Error::InvalidArgument(format!("regularization strength must be ≥ 0, got {eps}")));
        }
        Ok(Self { kind: self.kind.clone(), eps: self.eps + eps })
    }

    /// `K(u)`.
    pub fn cumulant(&self, u: Vec2) -> f64 {
        let reg = 0.5 * self.eps * u.norm_squared();
        let base = match &self.kind {
            ModelKind::Gaussian { mean, cov } => u.dot(mean) + 0.5 * u.dot(&(cov * u)),
            ModelKind::Atoms { points, probs } => {
                if u == Vec2::zeros() {
                    0.0
                } else {
                    let scores: Vec<f64> = points.iter().zip(probs).map(|(p, q)| u.dot(p) + q.ln()).collect();
                    let smax = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    smax + scores.iter().map(|s| (s - smax).exp()).sum::<f64>().ln()
                }
            }
            ModelKind::Graph1D { mu1, y } => u.x * mu1 + y.cumulant_derivs(u.y).0,
        };
        base + reg
    }

    /// `∇K(u)`.
    pub fn cumulant_gradient(&self, u: Vec2) -> Vec2 {
        self.cumulant_all(u).1
    }

    /// `Hess K(u)`.
    pub fn cumulant_hessian(&self, u: Vec2) -> Mat2 {
        self.cumulant_all(u).2
    }

    /// `(K(u), ∇K(u), Hess K(u))` in one pass.
    pub fn cumulant_all(&self, u: Vec2) -> (f64, Vec2, Mat2) {
        let (k, g, h) = match &self.kind {
            ModelKind::Gaussian { mean, cov } => {
                let cu = cov * u;
                (u.dot(mean) + 0.5 * u.dot(&cu), mean + cu, *cov)
            }
            ModelKind::Atoms { points, probs } => {
                if u == Vec2::zeros() {
                    let m = self.drift();
                    let cov = points
                        .iter()
                        .zip(probs)
                        .fold(Mat2::zeros(), |acc, (p, q)| acc + *q * (p - m) * (p - m).transpose());
                    (0.0, m, cov)
                } else {
                    let scores: Vec<f64> = points.iter().zip(probs).map(|(p, q)| u.dot(p) + q.ln()).collect();
                    let smax = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let w: Vec<f64> = scores.iter().map(|s| (s - smax).exp()).collect();
                    let z: f64 = w.iter().sum();
                    let m = points.iter().zip(&w).fold(Vec2::zeros(), |acc, (p, wi)| acc + *wi * p) / z;
                    let cov = points
                        .iter()
                        .zip(&w)
                        .fold(Mat2::zeros(), |acc, (p, wi)| acc + *wi * (p - m) * (p - m).transpose())
                        / z;
                    (smax + z.ln(), m, cov)
                }
            }
            ModelKind::Graph1D { mu1, y } => {
                let (k, d, dd) = y.cumulant_derivs(u.y);
                (u.x * mu1 + k, Vec2::new(*mu1, d), Mat2::new(0.0, 0.0, 0.0, dd))
            }
        };
        (
            k + 0.5 * self.eps * u.norm_squared(),
            g + self.eps * u,
            h + self.eps * Mat2::identity(),
        )
    }

    /// Drift `μ = ∇K(0) = E X₁`.
    pub fn drift(&self) -> Vec2 {
        match &self.kind {
            ModelKind::Gaussian { mean, .. } => *mean,
            ModelKind::Atoms { points, probs } => points.iter().zip(probs).fold(Vec2::zeros(), |acc, (p, q)| acc + *q * p),
            ModelKind::Graph1D { mu1, y } => Vec2::new(*mu1, y.mean()),
        }
    }

    pub fn support_class(&self) -> SupportClass {
        if self.eps > 0.0 {
            return SupportClass::FullPlane;
        }
        match &self.kind {
            ModelKind::Gaussian { cov, .. } => {
                let eig = cov.symmetric_eigenvalues();
                if eig.min() > 1e-12 * eig.max().max(1.0) {
                    SupportClass::FullPlane
                } else {
                    SupportClass::ProperSubsetOfPlane
                }
            }
            ModelKind::Atoms { points, .. } => {
                if origin_strictly_inside_hull(points) {
                    SupportClass::FullPlane
                } else {
                    SupportClass::ProperSubsetOfPlane
                }
            }
            ModelKind::Graph1D { mu1, .. } => SupportClass::VerticalLine(*mu1),
        }
    }

    /// Whether `K(u) = K(-u)` on a fixed probe grid, to `1e-10` relative.
    pub fn is_centrally_symmetric(&self) -> bool {
        for &r in &[0.25, 0.5, 1.0, 2.0, 4.0] {
            for k in 0..16 {
                let u = r * crate::unit(std::f64::consts::PI * k as f64 / 16.0 + 0.1);
                let (a, b) = (self.cumulant(u), self.cumulant(-u));
                if (a - b).abs() > 1e-10 * (1.0 + a.abs().max(b.abs())) {
                    return false;
                }
            }
        }
        true
    }

    /// `K(0, u)`, the cumulant of the second coordinate, with its first two derivatives.
    pub fn y_cumulant(&self, u: f64) -> (f64, f64, f64) {
        let (k, g, h) = self.cumulant_all(Vec2::new(0.0, u));
        (k, g.y, h[(1, 1)])
    }

    /// For graph models: the convex hull of the support of `Y`, widened to ℝ when regularized.
    pub fn y_support_bounds(&self) -> Option<(f64, f64)> {
        match &self.kind {
            ModelKind::Graph1D { y, .. } if self.eps == 0.0 => Some(y.support_bounds()),
            ModelKind::Graph1D { .. } => Some((f64::NEG_INFINITY, f64::INFINITY)),
            _ => None,
        }
    }
}

fn origin_strictly_inside_hull(points: &[Vec2]) -> bool {
    let h = hull::convex_hull(points);
    if h.len() < 3 {
        return false;
    }
    (0..h.len()).all(|i| {
        let a = h[i];
        let b = h[(i + 1) % h.len()];
        let edge = b - a;
        crate::cross(edge, -a) > COLLINEAR_TOL * edge.norm()
    })
}

/// Location of a point relative to the closed convex hull of the atoms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HullMembership {
    Interior,
    Boundary,
    Exterior,
}

/// Classify `v` against the convex hull of `points` (nonempty hull of ≥ 3 vertices).
pub fn hull_membership(points: &[Vec2], v: Vec2) -> HullMembership {
    let h = hull::convex_hull(points);
    if h.len() < 3 {
        return HullMembership::Exterior;
    }
    let mut on_edge = false;
    for i in 0..h.len() {
        let a = h[i];
        let b = h[(i + 1) % h.len()];
        let edge = b - a;
        let d = crate::cross(edge, v - a) / edge.norm();
        if d < -COLLINEAR_TOL * (1.0 + v.norm()) {
            return HullMembership::Exterior;
        }
        if d <= COLLINEAR_TOL * (1.0 + v.norm()) {
            on_edge = true;
        }
    }
    if on_edge {
        HullMembership::Boundary
    } else {
        HullMembership::Interior
    }
}
