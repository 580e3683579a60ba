//! The rate function `I = K*`, its gradient, the one-dimensional rate of
//! graph-type walks, and the energy `I_C(h) = ∫ I(h'(t)) dt` of a curve.
//!
//! `I` is evaluated as `u*·v − K(u*)` where `u*` solves `∇K(u) = v`. For atom
//! laws `∇K` maps onto the open hull of the atoms only; Newton slows down as `v`
//! approaches the hull boundary. Points on the boundary are handled exactly
//! by restricting the law to the supporting face, points outside give `+∞`.

use crate::error::{Error, Result};
use crate::increments::{hull_membership, HullMembership, IncrementModel, ModelKind, SupportClass};
use crate::{hull, Mat2, Vec2};

const MAX_ITER: usize = 100;
const ARMIJO: f64 = 1e-4;

fn tolerance(v: f64) -> f64 {
    1e-10 * (1.0 + v.abs())
}

/// A sampled curve `h` on `[0, 1]` with derivative samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<Vec2>,
    /// `h'(tᵢ)`, one-sided at the endpoints.
    pub derivs: Vec<Vec2>,
    /// `I_C(h)`, filled in by [`energy`].
    pub energy: Option<f64>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, points: Vec<Vec2>, derivs: Vec<Vec2>) -> Result<Self> {
        let n = times.len();
        if n < 2 || points.len() != n || derivs.len() != n {
            return Err(Error::InvalidArgument("trajectory needs ≥ 2 samples of matching length".into()));
        }
        if times[0] != 0.0 || times[n - 1] != 1.0 || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("times must increase strictly from 0 to 1".into()));
        }
        if points[0] != Vec2::zeros() {
            return Err(Error::InvalidArgument("trajectory must start at the origin".into()));
        }
        Ok(Self { times, points, derivs, energy: None })
    }

    /// Sample `h` and `h'` on the uniform grid `tᵢ = i/n`.
    pub fn sample<H, D>(n: usize, h: H, dh: D) -> Self
    where
        H: Fn(f64) -> Vec2,
        D: Fn(f64) -> Vec2,
    {
        let times: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let mut points: Vec<Vec2> = times.iter().map(|&t| h(t)).collect();
        points[0] = Vec2::zeros();
        let derivs = times.iter().map(|&t| dh(t)).collect();
        Self { times, points, derivs, energy: None }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn end_point(&self) -> Vec2 {
        *self.points.last().unwrap()
    }

    pub fn hull_area(&self) -> f64 {
        hull::hull_area_points(&self.points)
    }
}

/// `I(v)`; `+∞` outside the effective domain.
///
/// Requires a full-plane model, since otherwise `I` is not smooth and the
/// solver has nothing to invert. Convergence slows near the boundary of the
/// domain for atom laws.
pub fn rate(model: &IncrementModel, v: Vec2) -> Result<f64> {
    Ok(rate_and_gradient_inner(model, v)?.0)
}

/// `∇I(v)`, the maximizer `u*` of `u·v − K(u)`.
pub fn rate_gradient(model: &IncrementModel, v: Vec2) -> Result<Vec2> {
    match rate_and_gradient_inner(model, v)? {
        (_, Some(u)) => Ok(u),
        (_, None) => Err(Error::OutsideDomain { value: v.norm() }),
    }
}

/// `(I(v), ∇I(v))`.
pub fn rate_and_gradient(model: &IncrementModel, v: Vec2) -> Result<(f64, Vec2)> {
    match rate_and_gradient_inner(model, v)? {
        (r, Some(u)) => Ok((r, u)),
        (_, None) => Err(Error::OutsideDomain { value: v.norm() }),
    }
}

fn rate_and_gradient_inner(model: &IncrementModel, v: Vec2) -> Result<(f64, Option<Vec2>)> {
    if model.support_class() != SupportClass::FullPlane {
        return Err(Error::NotFullPlane);
    }
    if !v.x.is_finite() || !v.y.is_finite() {
        return Err(Error::InvalidArgument("velocity must be finite".into()));
    }
    if model.epsilon() == 0.0 {
        if let ModelKind::Atoms { points, probs } = model.kind() {
            match hull_membership(points, v) {
                HullMembership::Exterior => return Ok((f64::INFINITY, None)),
                HullMembership::Boundary => return Ok((boundary_rate(points, probs, v)?, None)),
                HullMembership::Interior => {}
            }
        }
    }
    if v == model.drift() {
        return Ok((0.0, Some(Vec2::zeros())));
    }
    let u = solve_dual(model, v)?;
    let value = (u.dot(&v) - model.cumulant(u)).max(0.0);
    Ok((value, Some(u)))
}

/// Exact `I(v)` for `v` on the boundary of the atom hull: the law
/// restricted to the supporting face, plus `−log P(face)`.
fn boundary_rate(points: &[Vec2], probs: &[f64], v: Vec2) -> Result<f64> {
    let h = hull::convex_hull(points);
    let scale = 1.0 + v.norm();
    for i in 0..h.len() {
        let a = h[i];
        let b = h[(i + 1) % h.len()];
        let edge = b - a;
        let t = edge / edge.norm();
        if crate::cross(t, v - a).abs() > 1e-12 * scale {
            continue;
        }
        let (xs, qs): (Vec<f64>, Vec<f64>) = points
            .iter()
            .zip(probs)
            .filter(|(p, _)| crate::cross(t, *p - a).abs() <= 1e-12 * (1.0 + p.norm()))
            .map(|(p, q)| (t.dot(p), *q))
            .unzip();
        let mass: f64 = qs.iter().sum();
        let face = crate::Model1D::atoms(xs, qs.iter().map(|q| q / mass).collect())
            .or_else(|_| crate::Model1D::atoms(vec![0.0], vec![1.0]))?;
        let x = t.dot(&v);
        let (lo, hi) = face.support_bounds();
        let x = x.clamp(lo, hi);
        return Ok(-mass.ln() + conjugate_1d(&face, x)?.0);
    }
    Err(Error::OutsideDomain { value: v.norm() })
}

/// Damped Newton for `∇K(u) = v` with gradient-descent fallback.
fn solve_dual(model: &IncrementModel, v: Vec2) -> Result<Vec2> {
    let tol = tolerance(v.norm());
    let h0 = model.cumulant_hessian(Vec2::zeros());
    let mut u = h0.try_inverse().map(|inv| inv * (v - model.drift())).unwrap_or_else(Vec2::zeros);
    if !u.x.is_finite() || !u.y.is_finite() {
        u = Vec2::zeros();
    }
    let objective = |k: f64, u: Vec2| k - u.dot(&v);
    let (mut k, mut g, mut hs) = model.cumulant_all(u);
    let mut r = g - v;
    for _ in 0..MAX_ITER {
        if r.norm() <= tol {
            match newton_step(&hs, r) {
                Some(d) if d.norm() > 1e-13 * (1.0 + u.norm()) => {}
                _ => return Ok(u),
            }
        }
        let phi = objective(k, u);
        let newton = newton_step(&hs, r);
        let mut accepted = false;
        for dir in [newton, Some(-r)].into_iter().flatten() {
            let slope = r.dot(&dir);
            if !(slope < 0.0) {
                continue;
            }
            let mut t = 1.0;
            while t > 1e-30 {
                let cand = u + t * dir;
                let (k2, g2, h2) = model.cumulant_all(cand);
                let r2 = g2 - v;
                if objective(k2, cand) <= phi + ARMIJO * t * slope || r2.norm() < r.norm() {
                    u = cand;
                    k = k2;
                    g = g2;
                    hs = h2;
                    r = r2;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if accepted {
                break;
            }
        }
        if !accepted {
            break;
        }
    }
    let _ = g;
    if r.norm() <= tol {
        Ok(u)
    } else {
        Err(Error::NoConvergence { what: "rate function Newton solve", iterations: MAX_ITER, residual: r.norm() })
    }
}

fn newton_step(h: &Mat2, r: Vec2) -> Option<Vec2> {
    let d = h.try_inverse()? * (-r);
    (d.x.is_finite() && d.y.is_finite()).then_some(d)
}

fn y_law(model: &IncrementModel) -> Result<(f64, &crate::Model1D)> {
    match model.kind() {
        ModelKind::Graph1D { mu1, y } => Ok((*mu1, y)),
        _ => Err(Error::InvalidArgument("one-dimensional rate needs a graph model".into())),
    }
}

/// `I₂(v) = I(μ₁, v)`, the conjugate of `K₂(u) = K(0, u)`.
///
/// Outside the closed hull of the support of `Y` this is `OutsideDomain`;
/// at an atom endpoint it equals `−log P(Y = v)`.
pub fn rate_1d(model: &IncrementModel, v: f64) -> Result<f64> {
    Ok(rate_1d_inner(model, v)?.0)
}

/// `I₂'(v)`; the derivative blows up at the support endpoints, which are rejected.
pub fn rate_1d_gradient(model: &IncrementModel, v: f64) -> Result<f64> {
    match rate_1d_inner(model, v)?.1 {
        Some(u) => Ok(u),
        None => Err(Error::OutsideDomain { value: v }),
    }
}

fn rate_1d_inner(model: &IncrementModel, v: f64) -> Result<(f64, Option<f64>)> {
    let (_, y) = y_law(model)?;
    if !v.is_finite() {
        return Err(Error::OutsideDomain { value: v });
    }
    let eps = model.epsilon();
    if eps > 0.0 {
        let k = |u: f64| model.y_cumulant(u);
        let (val, u) = solve_conjugate_1d(k, y.mean(), v)?;
        return Ok((val, Some(u)));
    }
    let (lo, hi) = y.support_bounds();
    if v < lo || v > hi {
        return Err(Error::OutsideDomain { value: v });
    }
    if v == lo || v == hi {
        return Ok((-y.mass_at(v).ln(), None));
    }
    let (val, u) = conjugate_1d(y, v)?;
    Ok((val, Some(u)))
}

/// Conjugate of a one-dimensional cumulant at an interior point or endpoint.
fn conjugate_1d(y: &crate::Model1D, v: f64) -> Result<(f64, f64)> {
    let (lo, hi) = y.support_bounds();
    if y.is_constant() {
        return if v == lo { Ok((0.0, 0.0)) } else { Err(Error::OutsideDomain { value: v }) };
    }
    if v == lo || v == hi {
        return Ok((-y.mass_at(v).ln(), f64::NAN));
    }
    solve_conjugate_1d(|u| y.cumulant_derivs(u), y.mean(), v)
}

/// Safeguarded Newton on `K'(u) = v` for an interior `v`; returns `(K*(v), u*)`.
fn solve_conjugate_1d<F>(k: F, mean: f64, v: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> (f64, f64, f64),
{
    if v == mean {
        return Ok((0.0, 0.0));
    }
    let tol = tolerance(v);
    let sign = if v > mean { 1.0 } else { -1.0 };
    // bracket [a, b] in the direction of v
    let (mut a, mut b) = (0.0f64, sign);
    let mut steps = 0;
    while sign * (k(b).1 - v) < 0.0 {
        a = b;
        b *= 2.0;
        steps += 1;
        if steps > 1100 || !b.is_finite() {
            return Err(Error::NoConvergence { what: "one-dimensional rate bracket", iterations: steps, residual: f64::NAN });
        }
    }
    let (mut lo, mut hi) = if a < b { (a, b) } else { (b, a) };
    let mut u = 0.5 * (lo + hi);
    for _ in 0..400 {
        let (_, d, dd) = k(u);
        let r = d - v;
        // near a support endpoint K'' is tiny, so a small residual does not pin u down
        if r.abs() <= tol && (r / dd).abs() <= 1e-13 * (1.0 + u.abs()) {
            return Ok(((u * v - k(u).0).max(0.0), u));
        }
        if r > 0.0 {
            hi = u;
        } else {
            lo = u;
        }
        let newton = u - r / dd;
        u = if dd > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= f64::EPSILON * hi.abs().max(lo.abs()) {
            let r = k(u).1 - v;
            if r.abs() <= 1e3 * tol {
                return Ok(((u * v - k(u).0).max(0.0), u));
            }
            return Err(Error::NoConvergence { what: "one-dimensional rate solve", iterations: 400, residual: r.abs() });
        }
    }
    Err(Error::NoConvergence { what: "one-dimensional rate solve", iterations: 400, residual: (k(u).1 - v).abs() })
}

/// `I(v)` for any model the solver can handle: full-plane laws directly,
/// graph laws through `I₂` on the line `v₁ = μ₁` and `+∞` off it.
pub fn rate_general(model: &IncrementModel, v: Vec2) -> Result<f64> {
    match model.support_class() {
        SupportClass::FullPlane => rate(model, v),
        SupportClass::VerticalLine(mu1) => {
            if (v.x - mu1).abs() > 1e-12 * (1.0 + mu1.abs()) {
                Ok(f64::INFINITY)
            } else {
                match rate_1d(model, v.y) {
                    Err(Error::OutsideDomain { .. }) => Ok(f64::INFINITY),
                    other => other,
                }
            }
        }
        SupportClass::ProperSubsetOfPlane => Err(Error::NotFullPlane),
    }
}

/// Trapezoid quadrature of `I(h'(t))` over the trajectory grid; stores the
/// result in `traj.energy`.
pub fn energy(model: &IncrementModel, traj: &mut Trajectory) -> Result<f64> {
    let rates = traj.derivs.iter().map(|&d| rate_general(model, d)).collect::<Result<Vec<f64>>>()?;
    let e = crate::compensated_sum(
        traj.times.windows(2).zip(rates.windows(2)).map(|(t, r)| 0.5 * (t[1] - t[0]) * (r[0] + r[1])),
    );
    traj.energy = Some(e);
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Model1D;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn v(x: f64, y: f64) -> Vec2 {
        Vec2::new(x, y)
    }

    fn std_gauss() -> IncrementModel {
        IncrementModel::standard_gaussian(Vec2::zeros())
    }

    fn drifted() -> IncrementModel {
        IncrementModel::standard_gaussian(v(1.0, 0.0))
    }

    fn triangle() -> IncrementModel {
        IncrementModel::uniform_atoms(vec![v(1.0, 1.0), v(1.0, -1.0), v(-1.0, 0.0)]).unwrap()
    }

    fn pm1_graph() -> IncrementModel {
        IncrementModel::graph1d(1.0, Model1D::atoms(vec![1.0, -1.0], vec![0.5, 0.5]).unwrap()).unwrap()
    }

    fn full_plane_zoo() -> Vec<IncrementModel> {
        vec![
            std_gauss(),
            drifted(),
            IncrementModel::gaussian(v(0.2, -0.1), Mat2::new(2.0, 0.6, 0.6, 0.8)).unwrap(),
            triangle(),
            triangle().regularize(0.05).unwrap(),
        ]
    }

    // brute-force sup over a grid of u, used as an independent conjugate oracle
    fn grid_sup_1d<F: Fn(f64) -> f64>(k: F, v: f64) -> f64 {
        let mut best = f64::NEG_INFINITY;
        let n = 200_000;
        for i in 0..=n {
            let u = -10.0 + 20.0 * i as f64 / n as f64;
            best = best.max(u * v - k(u));
        }
        best
    }

    #[test]
    fn rate_examples() {
        assert!((rate(&std_gauss(), v(1.0, 0.0)).unwrap() - 0.5).abs() < 1e-14);
        for m in full_plane_zoo() {
            assert_eq!(rate(&m, m.drift()).unwrap(), 0.0);
        }
        let i2 = rate_1d(&pm1_graph(), 1.0).unwrap();
        assert!((i2 - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn rate_gradient_examples() {
        let g = rate_gradient(&std_gauss(), v(0.7, -2.5)).unwrap();
        assert!((g - v(0.7, -2.5)).norm() < 1e-12);
        for m in full_plane_zoo() {
            assert_eq!(rate_gradient(&m, m.drift()).unwrap(), Vec2::zeros());
        }
        let g = rate_gradient(&drifted(), v(2.0, 1.0)).unwrap();
        assert!((g - v(1.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn rate_requires_full_plane() {
        let two = IncrementModel::atoms(vec![v(1.0, 1.0), v(1.0, -1.0)], vec![0.5, 0.5]).unwrap();
        assert_eq!(rate(&two, v(1.0, 0.0)), Err(Error::NotFullPlane));
        assert_eq!(rate(&pm1_graph(), v(1.0, 0.0)), Err(Error::NotFullPlane));
        assert!(rate(&two.regularize(0.1).unwrap(), v(1.0, 0.0)).unwrap().is_finite());
    }

    #[test]
    fn atom_domain_boundary_and_exterior() {
        let m = triangle();
        assert_eq!(rate(&m, v(2.0, 0.0)).unwrap(), f64::INFINITY);
        assert!(rate_gradient(&m, v(2.0, 0.0)).is_err());
        // vertex: −log P(X = vertex)
        assert!((rate(&m, v(1.0, 1.0)).unwrap() - 3f64.ln()).abs() < 1e-12);
        // middle of the right edge: face mass 2/3, conditional mean hit exactly
        let edge = rate(&m, v(1.0, 0.0)).unwrap();
        assert!((edge - 1.5f64.ln()).abs() < 1e-12);
        let inside = rate(&m, v(1.0 - 1e-7, 0.0)).unwrap();
        assert!((inside - edge).abs() < 1e-4, "{inside} vs {edge}");
    }

    #[test]
    fn rate_1d_examples() {
        let g = IncrementModel::graph1d(1.0, Model1D::gaussian(0.0, 1.0).unwrap()).unwrap();
        assert!((rate_1d(&g, 1.0).unwrap() - 0.5).abs() < 1e-12);
        let g2 = IncrementModel::graph1d(1.0, Model1D::gaussian(0.3, 2.0).unwrap()).unwrap();
        assert_eq!(rate_1d(&g2, 0.3).unwrap(), 0.0);
        assert!((rate_1d(&g2, 1.3).unwrap() - 0.25).abs() < 1e-12);
        let m = pm1_graph();
        assert_eq!(rate_1d(&m, 0.0).unwrap(), 0.0);
        let expected = 0.5 * (1.5 * 1.5f64.ln() + 0.5 * 0.5f64.ln());
        let got = rate_1d(&m, 0.5).unwrap();
        assert!((got - expected).abs() < 1e-12);
        assert!((got - 0.130812).abs() < 1e-6);
        let oracle = grid_sup_1d(|u| u.cosh().ln(), 0.5);
        assert!((got - oracle).abs() < 1e-8);
        assert!(matches!(rate_1d(&m, 1.5), Err(Error::OutsideDomain { .. })));
        assert!(matches!(rate_1d_gradient(&m, 1.0), Err(Error::OutsideDomain { .. })));
        assert!((rate_1d_gradient(&m, 0.5).unwrap() - 0.5f64.atanh()).abs() < 1e-10);
        assert!(rate_1d(&std_gauss(), 0.5).is_err());
    }

    #[test]
    fn rate_1d_matches_grid_sup_for_skewed_atoms() {
        let y = Model1D::atoms(vec![-1.0, 0.5, 2.0], vec![0.2, 0.5, 0.3]).unwrap();
        let m = IncrementModel::graph1d(2.0, y.clone()).unwrap();
        for &x in &[-0.8, -0.2, 0.4, 1.0, 1.7] {
            let oracle = grid_sup_1d(|u| y.cumulant_derivs(u).0, x);
            assert!((rate_1d(&m, x).unwrap() - oracle).abs() < 1e-7, "x = {x}");
        }
    }

    #[test]
    fn energy_examples() {
        let g = std_gauss();
        let mut line = Trajectory::sample(100, |t| t * g.drift(), |_| g.drift());
        assert_eq!(energy(&g, &mut line).unwrap(), 0.0);
        assert_eq!(line.energy, Some(0.0));

        // constant-speed half circle of speed c: I ≡ c²/2
        let c = 2.3;
        let r = c / PI;
        let mut arc = Trajectory::sample(
            256,
            |t| r * v(1.0 - (PI * t).cos(), (PI * t).sin()),
            |t| r * PI * v((PI * t).sin(), (PI * t).cos()),
        );
        assert!((energy(&g, &mut arc).unwrap() - c * c / 2.0).abs() < 1e-12);

        let d = drifted();
        let mu = d.drift();
        let times = vec![0.0, 0.5, 0.5 + 1e-12, 1.0];
        let points = vec![Vec2::zeros(), Vec2::zeros(), 2.0 * mu * 1e-12, mu];
        let derivs = vec![Vec2::zeros(), Vec2::zeros(), 2.0 * mu, 2.0 * mu];
        let mut piece = Trajectory::new(times, points, derivs).unwrap();
        let exact = 0.5 * (0.5 * mu.norm_squared()) + 0.5 * (0.5 * (2.0 * mu - mu).norm_squared());
        assert!((energy(&d, &mut piece).unwrap() - exact).abs() < 1e-10);
    }

    #[test]
    fn trajectory_validation() {
        assert!(Trajectory::new(vec![0.0, 1.0], vec![v(1.0, 0.0), v(1.0, 1.0)], vec![Vec2::zeros(); 2]).is_err());
        assert!(Trajectory::new(vec![0.0, 0.0, 1.0], vec![Vec2::zeros(); 3], vec![Vec2::zeros(); 3]).is_err());
        assert!(Trajectory::new(vec![0.0, 1.0], vec![Vec2::zeros(); 2], vec![Vec2::zeros(); 2]).is_ok());
    }

    #[test]
    fn fenchel_young() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for m in full_plane_zoo() {
            for _ in 0..200 {
                let u = v(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
                let vel = m.cumulant_gradient(v(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)));
                let i = rate(&m, vel).unwrap();
                assert!(i + m.cumulant(u) >= u.dot(&vel) - 1e-10);
                let us = rate_gradient(&m, vel).unwrap();
                assert!((i + m.cumulant(us) - us.dot(&vel)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn inverse_map_identity() {
        for m in full_plane_zoo() {
            let atoms = matches!(m.kind(), ModelKind::Atoms { .. }) && m.epsilon() == 0.0;
            for i in 0..15 {
                for j in 0..15 {
                    let w = v(-3.0 + 6.0 * i as f64 / 14.0, -3.0 + 6.0 * j as f64 / 14.0);
                    let vel = m.drift() + w;
                    if atoms && hull_membership(&[v(1.0, 1.0), v(1.0, -1.0), v(-1.0, 0.0)], vel) != HullMembership::Interior {
                        continue;
                    }
                    let u = rate_gradient(&m, vel).unwrap();
                    assert!((m.cumulant_gradient(u) - vel).norm() < 1e-8, "{vel:?}");
                }
            }
        }
    }

    #[test]
    fn strict_convexity_margin() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for m in full_plane_zoo() {
            // curvature lower bound of I on the sampled box: 1 / max eigenvalue of Hess K there
            for _ in 0..200 {
                let a = m.drift() + v(rng.random_range(-0.6..0.6), rng.random_range(-0.3..0.3));
                let b = m.drift() + v(rng.random_range(-0.6..0.6), rng.random_range(-0.3..0.3));
                let sep = (a - b).norm();
                if sep < 0.1 {
                    continue;
                }
                let mid = 0.5 * (a + b);
                let lmax = [a, b, mid]
                    .iter()
                    .map(|&p| m.cumulant_hessian(rate_gradient(&m, p).unwrap()).symmetric_eigenvalues().max())
                    .fold(0.0, f64::max);
                let delta = sep * sep / (8.0 * 4.0 * lmax);
                let lhs = rate(&m, mid).unwrap();
                let rhs = 0.5 * rate(&m, a).unwrap() + 0.5 * rate(&m, b).unwrap();
                assert!(lhs < rhs - delta, "{lhs} vs {rhs} - {delta}");
            }
        }
    }

    #[test]
    fn jensen_lower_bound() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        for m in [std_gauss(), drifted(), triangle()] {
            for _ in 0..40 {
                let c: Vec<f64> = (0..4).map(|_| rng.random_range(-0.3..0.3)).collect();
                let mu = m.drift();
                let h = |t: f64| t * mu + v(c[0] * (PI * t).sin() + c[1] * t * t, c[2] * (2.0 * PI * t).sin() + c[3] * t);
                let dh = |t: f64| mu + v(c[0] * PI * (PI * t).cos() + 2.0 * c[1] * t, c[2] * 2.0 * PI * (2.0 * PI * t).cos() + c[3]);
                let mut traj = Trajectory::sample(400, h, dh);
                let e = energy(&m, &mut traj).unwrap();
                let end = rate(&m, traj.end_point()).unwrap();
                assert!(e >= end - 1e-9, "{e} < {end}");
            }
        }
    }

    #[test]
    fn vertical_line_energy_uses_one_dimensional_rate() {
        let m = pm1_graph();
        let mut t = Trajectory::sample(10, |t| v(t, 0.5 * t), |_| v(1.0, 0.5));
        let e = energy(&m, &mut t).unwrap();
        assert!((e - rate_1d(&m, 0.5).unwrap()).abs() < 1e-14);
        let mut off = Trajectory::sample(10, |t| v(0.5 * t, 0.0), |_| v(0.5, 0.0));
        assert_eq!(energy(&m, &mut off).unwrap(), f64::INFINITY);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(300))]

        #[test]
        fn conjugate_pairs_are_tight(i in 0usize..5, ux in -2.0f64..2.0, uy in -2.0f64..2.0) {
            let m = &full_plane_zoo()[i];
            let u = v(ux, uy);
            let g = m.cumulant_gradient(u);
            let (r, du) = rate_and_gradient(m, g).unwrap();
            proptest::prop_assert!((r - (u.dot(&g) - m.cumulant(u))).abs() <= 1e-8 * (1.0 + r));
            proptest::prop_assert!((du - u).norm() <= 1e-6 * (1.0 + u.norm()));
        }

        #[test]
        fn fenchel_young_holds(i in 0usize..5, ux in -3.0f64..3.0, uy in -3.0f64..3.0, s in 0.0f64..1.0, t in 0.0f64..1.0) {
            let m = &full_plane_zoo()[i];
            // a point of the domain, reached as a gradient
            let x = m.cumulant_gradient(v(6.0 * s - 3.0, 6.0 * t - 3.0));
            let u = v(ux, uy);
            proptest::prop_assert!(rate(m, x).unwrap() + m.cumulant(u) >= u.dot(&x) - 1e-9);
        }
    }
}
