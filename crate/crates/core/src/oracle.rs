//! Brute-force check of `𝒥_A`: minimize the discrete energy `Σ I(vᵢ)/n` over
//! piecewise-linear curves with `n` equal-duration segments subject to the
//! signed-area constraint `Ã = ±a`.
//!
//! The outer loop is an augmented Lagrangian; the inner unconstrained
//! problem is solved by L-BFGS with Armijo backtracking.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::increments::{IncrementModel, SupportClass};
use crate::legendre;
use crate::polyline::{convexification_order, Orientation, PolygonalLine};
use crate::{cross, hull, perp, Vec2};

/// A curve with `h(0) = 0` and constant velocity `vᵢ` on `[(i−1)/n, i/n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteCurve {
    pub n: usize,
    pub velocities: Vec<Vec2>,
    /// `I(vᵢ)` per segment.
    pub rates: Vec<f64>,
    /// `Σ I(vᵢ)/n`.
    pub energy: f64,
    /// `½ Σ h(t_{i−1}) × vᵢ / n`.
    pub area: f64,
}

fn signed_area(velocities: &[Vec2]) -> f64 {
    let n = velocities.len() as f64;
    let mut h = Vec2::zeros();
    let mut terms = Vec::with_capacity(velocities.len());
    for v in velocities {
        terms.push(cross(h, *v));
        h += v / n;
    }
    0.5 * crate::compensated_sum(terms) / n
}

impl DiscreteCurve {
    pub fn new(model: &IncrementModel, velocities: Vec<Vec2>) -> Result<Self> {
        let rates = velocities.iter().map(|v| legendre::rate(model, *v)).collect::<Result<Vec<f64>>>()?;
        Ok(Self::with_rates(velocities, rates))
    }

    fn with_rates(velocities: Vec<Vec2>, rates: Vec<f64>) -> Self {
        let n = velocities.len();
        let energy = crate::compensated_sum(rates.iter().copied()) / n as f64;
        let area = signed_area(&velocities);
        Self { n, velocities, rates, energy, area }
    }

    /// `h(tᵢ)` for `i = 0..=n`.
    pub fn points(&self) -> Vec<Vec2> {
        let n = self.n as f64;
        let mut pts = Vec::with_capacity(self.n + 1);
        let mut h = Vec2::zeros();
        pts.push(h);
        for v in &self.velocities {
            h += v / n;
            pts.push(h);
        }
        pts
    }

    pub fn hull_area(&self) -> f64 {
        hull::hull_area_points(&self.points())
    }

    pub fn to_polyline(&self) -> Result<PolygonalLine> {
        let mut pts = self.points();
        pts.dedup();
        PolygonalLine::new(pts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    /// Target `|Ã − a|`.
    pub feas_tol: f64,
    /// Target `n·max|∇L|`.
    pub stat_tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { feas_tol: 1e-6, stat_tol: 1e-4, max_outer: 60, max_inner: 3000 }
    }
}

/// `∇Ã` with respect to the velocities.
fn area_gradient(velocities: &[Vec2]) -> Vec<Vec2> {
    let n = velocities.len();
    let scale = 1.0 / (2.0 * (n * n) as f64);
    let total: Vec2 = velocities.iter().sum();
    let mut before = Vec2::zeros();
    velocities
        .iter()
        .map(|v| {
            let after = total - before - v;
            let g = scale * (perp(before) - perp(after));
            before += v;
            g
        })
        .collect()
}

struct Lagrangian<'a> {
    model: &'a IncrementModel,
    target: f64,
    mult: f64,
    rho: f64,
}

impl Lagrangian<'_> {
    /// Value and gradient; `None` when some velocity leaves the domain of `I`.
    fn eval(&self, v: &[Vec2]) -> Option<(f64, Vec<Vec2>)> {
        let n = v.len() as f64;
        let mut e = Vec::with_capacity(v.len());
        let mut grad = Vec::with_capacity(v.len());
        for vi in v {
            let (r, g) = legendre::rate_and_gradient(self.model, *vi).ok()?;
            if !r.is_finite() {
                return None;
            }
            e.push(r);
            grad.push(g / n);
        }
        let c = signed_area(v) - self.target;
        let coef = -self.mult + self.rho * c;
        for (g, ga) in grad.iter_mut().zip(area_gradient(v)) {
            *g += coef * ga;
        }
        let value = crate::compensated_sum(e) / n - self.mult * c + 0.5 * self.rho * c * c;
        Some((value, grad))
    }
}

fn dot(a: &[Vec2], b: &[Vec2]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn inf_norm(a: &[Vec2]) -> f64 {
    a.iter().map(|x| x.amax()).fold(0.0, f64::max)
}

/// L-BFGS on the augmented Lagrangian; returns the final gradient sup-norm.
fn lbfgs(lag: &Lagrangian, v: &mut Vec<Vec2>, max_iter: usize, gtol: f64) -> Result<f64> {
    let n = v.len() as f64;
    let Some((mut f, mut g)) = lag.eval(v) else {
        return Err(Error::InvalidArgument("oracle start lies outside the rate function domain".into()));
    };
    let mut hist: VecDeque<(Vec<Vec2>, Vec<Vec2>, f64)> = VecDeque::new();
    for _ in 0..max_iter {
        if n * inf_norm(&g) <= gtol {
            break;
        }
        // two-loop recursion
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(hist.len());
        for (s, y, rho) in hist.iter().rev() {
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = hist.back() {
            let gamma = dot(s, y) / dot(y, y);
            for qi in q.iter_mut() {
                *qi *= gamma;
            }
        } else {
            let scale = 1.0 / (n * inf_norm(&g)).max(1.0);
            for qi in q.iter_mut() {
                *qi *= scale * n;
            }
        }
        for ((s, y, rho), a) in hist.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (a - b) * si;
            }
        }
        let mut d: Vec<Vec2> = q.iter().map(|x| -x).collect();
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            d = g.iter().map(|x| -x).collect();
            slope = dot(&g, &d);
            hist.clear();
        }
        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-20 {
            let trial: Vec<Vec2> = v.iter().zip(&d).map(|(x, di)| x + t * di).collect();
            if let Some((ft, gt)) = lag.eval(&trial) {
                if ft <= f + 1e-4 * t * slope {
                    accepted = Some((trial, ft, gt));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((trial, ft, gt)) = accepted else {
            break;
        };
        let s: Vec<Vec2> = trial.iter().zip(v.iter()).map(|(a, b)| a - b).collect();
        let y: Vec<Vec2> = gt.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-16 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            hist.push_back((s, y, 1.0 / sy));
            if hist.len() > 12 {
                hist.pop_front();
            }
        }
        let improved = f - ft;
        *v = trial;
        f = ft;
        g = gt;
        if improved.abs() <= 1e-16 * f.abs().max(1.0) && n * inf_norm(&g) <= 10.0 * gtol {
            break;
        }
    }
    Ok(n * inf_norm(&g))
}

/// Scaled half circle of area `a` spanning a chord along the drift, with signed area of sign `sign`.
fn initial_curve(model: &IncrementModel, a: f64, n: usize, sign: f64) -> Vec<Vec2> {
    let mu = model.drift();
    let e = if mu.norm() > 1e-12 { mu / mu.norm() } else { Vec2::new(1.0, 0.0) };
    let d = (8.0 * a / std::f64::consts::PI).sqrt();
    // h(t) = (d/2)(1 − cos πt)e − sign (d/2) sin(πt) e^⊥ is traversed with signed area sign·a
    (0..n)
        .map(|i| {
            let t0 = i as f64 / n as f64;
            let t1 = (i + 1) as f64 / n as f64;
            let h = |t: f64| 0.5 * d * ((1.0 - (std::f64::consts::PI * t).cos()) * e - sign * (std::f64::consts::PI * t).sin() * perp(e));
            (h(t1) - h(t0)) * n as f64
        })
        .collect()
}

fn solve_signed(model: &IncrementModel, target: f64, n: usize, opts: &OracleOptions) -> Result<(DiscreteCurve, f64, f64)> {
    let circle = initial_curve(model, target.abs(), n, target.signum());
    let mu = model.drift();
    let mut v = circle.clone();
    // bounded laws: blend toward the drift until every velocity has finite rate
    let mut s = 1.0;
    while v.iter().any(|x| !legendre::rate(model, *x).map(f64::is_finite).unwrap_or(false)) {
        s *= 0.5;
        if s < 1e-12 {
            return Err(Error::InvalidArgument("no feasible oracle start".into()));
        }
        v = circle.iter().map(|x| (1.0 - s) * mu + s * x).collect();
    }
    let mut lag = Lagrangian { model, target, mult: 0.0, rho: 10.0 };
    let mut prev_c = f64::INFINITY;
    let mut stat = f64::INFINITY;
    let mut c = f64::INFINITY;
    for _ in 0..opts.max_outer {
        stat = lbfgs(&lag, &mut v, opts.max_inner, 0.1 * opts.stat_tol)?;
        c = signed_area(&v) - target;
        if c.abs() <= opts.feas_tol && stat <= opts.stat_tol {
            let curve = DiscreteCurve::new(model, v)?;
            return Ok((curve, c.abs(), stat));
        }
        lag.mult -= lag.rho * c;
        if c.abs() > 0.25 * prev_c {
            lag.rho *= 2.0;
        }
        prev_c = c.abs();
    }
    Err(Error::NoConvergence { what: "augmented Lagrangian oracle", iterations: opts.max_outer, residual: c.abs().max(stat) })
}

/// Minimize the discrete energy over `n`-segment curves with `|Ã| = a`.
///
/// Both signs of the constraint are solved and the lower energy is returned
/// together with the final constraint violation.
pub fn minimize_discrete(model: &IncrementModel, a: f64, n: usize, opts: &OracleOptions) -> Result<DiscreteCurve> {
    if model.support_class() != SupportClass::FullPlane {
        return Err(Error::NotFullPlane);
    }
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::InvalidArgument(format!("target area must be positive and finite, got {a}")));
    }
    if n < 8 {
        return Err(Error::InvalidArgument(format!("oracle needs at least 8 segments, got {n}")));
    }
    let (plus, minus) = rayon::join(|| solve_signed(model, a, n, opts), || solve_signed(model, -a, n, opts));
    match (plus, minus) {
        (Ok(p), Ok(m)) => Ok(if m.0.energy < p.0.energy { m.0 } else { p.0 }),
        (Ok(p), Err(_)) => Ok(p.0),
        (Err(_), Ok(m)) => Ok(m.0),
        (Err(e), Err(_)) => Err(e),
    }
}

/// Reorder the velocities into a convex curve; energy is unchanged.
pub fn convexify_curve(curve: &DiscreteCurve, orientation: Orientation) -> DiscreteCurve {
    let end: Vec2 = curve.velocities.iter().sum::<Vec2>() / curve.n as f64;
    let reference = if end == Vec2::zeros() { Vec2::new(1.0, 0.0) } else { -end };
    let order = convexification_order(&curve.velocities, reference, orientation);
    let velocities = order.iter().map(|&i| curve.velocities[i]).collect();
    let rates = order.iter().map(|&i| curve.rates[i]).collect();
    DiscreteCurve::with_rates(velocities, rates)
}
