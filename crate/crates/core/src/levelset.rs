//! Level sets `K⁻¹(α)`, sub-level areas, arc masses and arc parametrizations.
//!
//! Every sub-level set `{K ≤ α}` with `α > 0` is convex and contains the
//! origin, so its boundary is the polar curve `θ ↦ r(θ) e_θ` where `r(θ)`
//! solves `K(r e_θ) = α`. Areas and masses are integrals in `θ`:
//!
//! - area: `½ r(θ)²`,
//! - mass `∫ |∇K|⁻¹ dσ`: `r(θ) / (e_θ · ∇K(r(θ) e_θ))`, which is also `r ∂r/∂α`, so
//!   the mass is exactly the `α`-derivative of the area.
//!
//! Both are integrated with composite Gauss–Legendre rules, doubling the
//! panel count until the relative change drops below `1e-12`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::increments::{IncrementModel, SupportClass};
use crate::polyline::PolygonalLine;
use crate::quadrature::gauss_legendre;
use crate::{perp, unit, Vec2};

const ORDER: usize = 8;
const MIN_PANELS: usize = 8;
const MAX_PANELS: usize = 1 << 16;
const REL_TOL: f64 = 1e-12;

/// Side of the line `ℓℝ`: `Plus` is where `u · ℓ^⊥ ≥ 0`, traversed counterclockwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tau {
    Plus,
    Minus,
}

impl Tau {
    pub fn sign(self) -> f64 {
        match self {
            Tau::Plus => 1.0,
            Tau::Minus => -1.0,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Tau::Plus => "+",
            Tau::Minus => "-",
        }
    }
}

impl std::str::FromStr for Tau {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "+" | "plus" | "+1" => Ok(Tau::Plus),
            "-" | "minus" | "-1" => Ok(Tau::Minus),
            _ => Err(Error::InvalidArgument(format!("orientation must be + or -, got {s:?}"))),
        }
    }
}

/// Part of the sub-level set being measured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    Full,
    Half { ell: Vec2, tau: Tau },
}

impl Region {
    /// Polar angle range `[θ₀, θ₁]` of the region.
    fn angles(self) -> Result<(f64, f64)> {
        match self {
            Region::Full => Ok((0.0, 2.0 * PI)),
            Region::Half { ell, tau } => {
                let t = direction_angle(ell)?;
                Ok(match tau {
                    Tau::Plus => (t, t + PI),
                    Tau::Minus => (t - PI, t),
                })
            }
        }
    }
}

fn direction_angle(ell: Vec2) -> Result<f64> {
    let n = ell.norm();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::InvalidArgument("direction must be a nonzero finite vector".into()));
    }
    Ok(ell.y.atan2(ell.x))
}

/// Sampled parametrization `g` of one arc of `K⁻¹(α)`.
///
/// `g(0) = r⁺ℓ`, `g(1) = −r⁻ℓ`, and the `|∇K|⁻¹`-mass of `g([0, t])` equals `t·mass`,
/// which makes `g'(t) = τ·mass·∇K(g(t))^⊥`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelArc {
    pub alpha: f64,
    pub ell: Vec2,
    pub tau: Tau,
    pub times: Vec<f64>,
    pub samples: Vec<Vec2>,
    pub derivs: Vec<Vec2>,
    pub mass: f64,
}

fn check(model: &IncrementModel, alpha: f64) -> Result<()> {
    if model.support_class() != SupportClass::FullPlane {
        return Err(Error::NotFullPlane);
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!("level alpha must be positive and finite, got {alpha}")));
    }
    Ok(())
}

/// The `r > 0` with `K(r·dir) = α`.
pub fn level_radius(model: &IncrementModel, alpha: f64, dir: Vec2) -> Result<f64> {
    check(model, alpha)?;
    let n = dir.norm();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::InvalidArgument("direction must be a nonzero finite vector".into()));
    }
    radius(model, alpha, dir / n, None)
}

/// Newton from the right of the root; monotone because `r ↦ K(r·d)` is convex and negative at 0.
fn radius(model: &IncrementModel, alpha: f64, d: Vec2, hint: Option<f64>) -> Result<f64> {
    let phi = |r: f64| model.cumulant(r * d) - alpha;
    let mut r = hint.filter(|h| *h > 0.0 && h.is_finite()).unwrap_or(1.0);
    let mut grow = 0;
    while phi(r) < 0.0 {
        r *= 2.0;
        grow += 1;
        if grow > 2000 || !r.is_finite() {
            return Err(Error::NoConvergence { what: "level radius bracket", iterations: grow, residual: f64::NAN });
        }
    }
    let mut lo = 0.0f64;
    for _ in 0..200 {
        let (k, g, _) = model.cumulant_all(r * d);
        let f = k - alpha;
        if f == 0.0 {
            return Ok(r);
        }
        if f < 0.0 {
            lo = lo.max(r);
        }
        let slope = d.dot(&g);
        let mut next = r - f / slope;
        if !(slope > 0.0) || !(next > lo) || !next.is_finite() {
            next = 0.5 * (lo + r);
        }
        if (next - r).abs() <= 1e-15 * r {
            return Ok(if f > 0.0 && phi(next) >= 0.0 { next } else { r });
        }
        r = next;
    }
    Ok(r)
}

/// Polar radius `r(θ)` of `K⁻¹(α)`.
pub fn radius_at(model: &IncrementModel, alpha: f64, theta: f64) -> Result<f64> {
    check(model, alpha)?;
    radius(model, alpha, unit(theta), None)
}

/// `(½r², r/(e·∇K))` at angle `theta`.
fn densities(model: &IncrementModel, alpha: f64, theta: f64, hint: Option<f64>) -> Result<(f64, f64, f64)> {
    let e = unit(theta);
    let r = radius(model, alpha, e, hint)?;
    let g = model.cumulant_gradient(r * e);
    Ok((0.5 * r * r, r / e.dot(&g), r))
}

/// Panel integrals of area and mass densities over `[a, b]` with `panels` equal panels.
fn panel_integrals(model: &IncrementModel, alpha: f64, a: f64, b: f64, panels: usize) -> Result<Vec<(f64, f64)>> {
    let (x, w) = gauss_legendre(ORDER);
    let h = (b - a) / panels as f64;
    (0..panels)
        .into_par_iter()
        .map(|p| {
            let lo = a + h * p as f64;
            let mut area = 0.0;
            let mut mass = 0.0;
            let mut hint = None;
            for (xi, wi) in x.iter().zip(&w) {
                let (da, dm, r) = densities(model, alpha, lo + 0.5 * h * (xi + 1.0), hint)?;
                hint = Some(r * 1.01);
                area += 0.5 * h * wi * da;
                mass += 0.5 * h * wi * dm;
            }
            Ok((area, mass))
        })
        .collect()
}

fn rel_change(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Converged panel integrals over `[a, b]`.
fn converged_panels(model: &IncrementModel, alpha: f64, a: f64, b: f64) -> Result<Vec<(f64, f64)>> {
    converged_panels_to(model, alpha, a, b, REL_TOL, MAX_PANELS)
}

fn converged_panels_to(model: &IncrementModel, alpha: f64, a: f64, b: f64, tol: f64, max_panels: usize) -> Result<Vec<(f64, f64)>> {
    let total = |v: &[(f64, f64)]| {
        (
            crate::compensated_sum(v.iter().map(|p| p.0)),
            crate::compensated_sum(v.iter().map(|p| p.1)),
        )
    };
    let mut panels = MIN_PANELS;
    let mut prev = panel_integrals(model, alpha, a, b, panels)?;
    loop {
        panels *= 2;
        let cur = panel_integrals(model, alpha, a, b, panels)?;
        let (pa, pm) = total(&prev);
        let (ca, cm) = total(&cur);
        if (rel_change(ca, pa) < tol && rel_change(cm, pm) < tol) || panels >= max_panels {
            return Ok(cur);
        }
        prev = cur;
    }
}

/// `(E, λ)` of the region: its area and the `|∇K|⁻¹`-mass of its curved boundary.
pub fn area_and_mass(model: &IncrementModel, alpha: f64, region: Region) -> Result<(f64, f64)> {
    check(model, alpha)?;
    let (a, b) = region.angles()?;
    let v = converged_panels(model, alpha, a, b)?;
    Ok((
        crate::compensated_sum(v.iter().map(|p| p.0)),
        crate::compensated_sum(v.iter().map(|p| p.1)),
    ))
}

/// [`area_and_mass`] at a looser tolerance, for sign scans.
pub(crate) fn area_and_mass_coarse(model: &IncrementModel, alpha: f64, region: Region) -> Result<(f64, f64)> {
    check(model, alpha)?;
    let (a, b) = region.angles()?;
    let v = converged_panels_to(model, alpha, a, b, 1e-6, 1 << 10)?;
    Ok((
        crate::compensated_sum(v.iter().map(|p| p.0)),
        crate::compensated_sum(v.iter().map(|p| p.1)),
    ))
}

/// `E(α)`, the area of `{K ≤ α}`.
pub fn sublevel_area(model: &IncrementModel, alpha: f64) -> Result<f64> {
    Ok(area_and_mass(model, alpha, Region::Full)?.0)
}

/// `E^τ(α, ℓ)`, the area of `{K ≤ α}` on side `τ` of `ℓℝ`.
pub fn half_area(model: &IncrementModel, alpha: f64, ell: Vec2, tau: Tau) -> Result<f64> {
    Ok(area_and_mass(model, alpha, Region::Half { ell, tau })?.0)
}

/// `λ^τ_{α,ℓ} = ∫ |∇K|⁻¹ dσ` over the arc of `K⁻¹(α)` on side `τ` of `ℓℝ`.
pub fn arc_mass(model: &IncrementModel, alpha: f64, ell: Vec2, tau: Tau) -> Result<f64> {
    Ok(area_and_mass(model, alpha, Region::Half { ell, tau })?.1)
}

/// `|∇K|⁻¹`-mass of the whole level set.
pub fn full_mass(model: &IncrementModel, alpha: f64) -> Result<f64> {
    Ok(area_and_mass(model, alpha, Region::Full)?.1)
}

/// `∂E/∂α` of the region, which by the coarea formula is its boundary mass.
pub fn de_dalpha(model: &IncrementModel, alpha: f64, region: Region) -> Result<f64> {
    Ok(area_and_mass(model, alpha, region)?.1)
}

/// Closed polygon through `m` points of `K⁻¹(α)` at equally spaced polar angles.
pub fn trace_level(model: &IncrementModel, alpha: f64, m: usize) -> Result<PolygonalLine> {
    check(model, alpha)?;
    if m < 8 {
        return Err(Error::InvalidArgument(format!("trace needs at least 8 samples, got {m}")));
    }
    let mut pts = (0..m)
        .into_par_iter()
        .map(|k| {
            let e = unit(2.0 * PI * k as f64 / m as f64);
            Ok(radius(model, alpha, e, None)? * e)
        })
        .collect::<Result<Vec<Vec2>>>()?;
    pts.push(pts[0]);
    PolygonalLine::new(pts)
}

/// Sample `g^τ_{α,ℓ}` at `tᵢ = i/n` by inverting the cumulative mass.
pub fn arc_parametrization(model: &IncrementModel, alpha: f64, ell: Vec2, tau: Tau, n: usize) -> Result<LevelArc> {
    check(model, alpha)?;
    if n < 2 {
        return Err(Error::InvalidArgument("arc needs at least 2 intervals".into()));
    }
    let theta_l = direction_angle(ell)?;
    let ell = unit(theta_l);
    let sg = tau.sign();
    // s ∈ [0, 1] ↦ θ = θ_ℓ + τπs; mass density in s is π·r/(e·∇K)
    let panels_v = converged_panels_shifted(model, alpha, theta_l, sg)?;
    let panels = panels_v.len();
    let mut cum = Vec::with_capacity(panels + 1);
    cum.push(0.0);
    let mut acc = 0.0;
    let mut comp = 0.0;
    for p in &panels_v {
        // running Neumaier sum
        let t = acc + p.1;
        if acc.abs() >= p.1.abs() {
            comp += (acc - t) + p.1;
        } else {
            comp += (p.1 - t) + acc;
        }
        acc = t;
        cum.push(acc + comp);
    }
    let mass = cum[panels];
    let hs = 1.0 / panels as f64;
    let theta = |s: f64| theta_l + sg * PI * s;
    let (gx, gw) = gauss_legendre(ORDER);
    let density = |s: f64, hint: Option<f64>| -> Result<(f64, f64)> {
        let (_, dm, r) = densities(model, alpha, theta(s), hint)?;
        Ok((PI * dm, r))
    };
    let partial = |lo: f64, hi: f64| -> Result<f64> {
        let h = hi - lo;
        let mut acc = 0.0;
        for (xi, wi) in gx.iter().zip(&gw) {
            acc += 0.5 * h * wi * density(lo + 0.5 * h * (xi + 1.0), None)?.0;
        }
        Ok(acc)
    };
    let times: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    let svals = times
        .par_iter()
        .map(|&t| {
            if t == 0.0 {
                return Ok(0.0);
            }
            if t == 1.0 {
                return Ok(1.0);
            }
            let target = t * mass;
            let k = match cum.binary_search_by(|c| c.total_cmp(&target)) {
                Ok(i) => return Ok((i as f64 * hs).min(1.0)),
                Err(i) => i - 1,
            }
            .min(panels - 1);
            let (s0, s1) = (k as f64 * hs, (k + 1) as f64 * hs);
            let (mut lo, mut hi) = (s0, s1);
            let frac = (target - cum[k]) / (cum[k + 1] - cum[k]);
            let mut s = s0 + frac * hs;
            for _ in 0..60 {
                let f = cum[k] + partial(s0, s)? - target;
                if f.abs() <= 1e-15 * mass {
                    break;
                }
                if f > 0.0 {
                    hi = s;
                } else {
                    lo = s;
                }
                let d = density(s, None)?.0;
                let mut next = s - f / d;
                if !(next > lo && next < hi) {
                    next = 0.5 * (lo + hi);
                }
                if (next - s).abs() <= 1e-16 {
                    s = next;
                    break;
                }
                s = next;
            }
            Ok(s)
        })
        .collect::<Result<Vec<f64>>>()?;
    let pts = svals
        .par_iter()
        .map(|&s| {
            let e = unit(theta(s));
            let r = radius(model, alpha, e, None)?;
            let g = r * e;
            Ok((g, sg * mass * perp(model.cumulant_gradient(g))))
        })
        .collect::<Result<Vec<(Vec2, Vec2)>>>()?;
    let (mut samples, derivs): (Vec<Vec2>, Vec<Vec2>) = pts.into_iter().unzip();
    // endpoints lie on ℓℝ exactly
    let r_plus = radius(model, alpha, ell, None)?;
    let r_minus = radius(model, alpha, -ell, None)?;
    samples[0] = r_plus * ell;
    samples[n] = -r_minus * ell;
    Ok(LevelArc { alpha, ell, tau, times, samples, derivs, mass })
}

/// Converged panel masses in the arc variable `s ∈ [0, 1]` (density `π r/(e·∇K)`).
fn converged_panels_shifted(model: &IncrementModel, alpha: f64, theta_l: f64, sg: f64) -> Result<Vec<(f64, f64)>> {
    let (a, b) = if sg > 0.0 { (theta_l, theta_l + PI) } else { (theta_l - PI, theta_l) };
    let mut v = converged_panels(model, alpha, a, b)?;
    if sg < 0.0 {
        v.reverse();
    }
    Ok(v)
}
