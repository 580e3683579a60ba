//! Optimal hull-area trajectories and the rate `𝒥_A(a)`.
//!
//! For a full-plane law the optimal curves are rotated, rescaled arcs of a
//! level set of `K`. Given a level `α`, a direction `ℓ` whose two
//! intersections with `K⁻¹(α)` are symmetric about the origin, and a side `τ`,
//!
//! `h(t) = −(τλ)⁻¹ (g(t) − g(0))^⊥`
//!
//! where `g` is the arc parametrization and `λ` its mass. Then `h' = ∇K(g)`,
//! the hull area is `E^τ/λ²`, and the energy is `2E^τ/λ − α`.
//!
//! Graph-type walks `(μ₁, Y)` instead get the explicit curves
//! `h_±(t) = (μ₁t, ±(2u)⁻¹(K₂(±u(2t−1)) − K₂(∓u)))`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::increments::{IncrementModel, ModelKind, SupportClass};
use crate::legendre::{self, Trajectory};
use crate::levelset::{self, Region, Tau};
use crate::{hull, perp, unit, Vec2};

/// Knobs for [`rate_of_area`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateOptions {
    /// Directions scanned on the half circle when the law is not centrally symmetric.
    pub directions: usize,
    /// Trajectory intervals.
    pub samples: usize,
    /// Gaussian regularization applied before solving (required for degenerate laws).
    pub eps: f64,
}

impl Default for RateOptions {
    fn default() -> Self {
        Self { directions: 256, samples: 1024, eps: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CandidateKind {
    Level { alpha: f64, ell: Vec2 },
    Graph { u_a: f64 },
}

/// One solution of the necessary conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub kind: CandidateKind,
    pub tau: Tau,
    /// Euler–Lagrange multiplier.
    pub multiplier: f64,
    pub energy: f64,
    /// Hull area of the sampled trajectory.
    pub hull_area: f64,
    pub trajectory: Trajectory,
    /// Energy ties the minimum within `1e-9`.
    pub minimal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateResult {
    pub a: f64,
    pub j_a: f64,
    pub a_max: f64,
    /// Regularization strength of the model actually solved.
    pub eps: f64,
    pub symmetric: bool,
    pub candidates: Vec<Candidate>,
}

impl RateResult {
    pub fn minimal_candidates(&self) -> impl Iterator<Item = &Candidate> {
        self.candidates.iter().filter(|c| c.minimal)
    }
}

/// Output of [`candidate_directions`].
#[derive(Debug, Clone, PartialEq)]
pub enum Directions {
    /// Centrally symmetric law: every direction qualifies.
    AllDirections,
    Found(Vec<(Vec2, Tau)>),
}

/// Both explicit curves of a graph-type walk.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSolution {
    pub plus: Trajectory,
    pub minus: Trajectory,
    pub u_a: f64,
    pub j_a: f64,
}

/// Euler–Lagrange defects of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElResidual {
    /// `max |λh^⊥(tᵢ) − ∇I(h'(tᵢ)) + ∇I(h'(0))|`.
    pub interior: f64,
    /// `|∇I(h'(1)) + ∇I(h'(0))|`.
    pub boundary: f64,
    /// False when `λ = 0`: the equations then describe a straight line, not an optimum.
    pub is_candidate: bool,
}

impl ElResidual {
    pub fn total(&self) -> f64 {
        self.interior + self.boundary
    }
}

/// Largest attainable area for laws with bounded support; `∞` otherwise.
///
/// For atoms with `0` interior to their hull `P` it is `1/(2|P°|)`, `P°` the polar body.
/// For a graph walk it is `|μ₁|(y_max − y_min)/8`.
pub fn a_max(model: &IncrementModel) -> f64 {
    if model.epsilon() > 0.0 {
        return f64::INFINITY;
    }
    match model.kind() {
        ModelKind::Gaussian { .. } => f64::INFINITY,
        ModelKind::Atoms { points, .. } => {
            let h = hull::convex_hull(points);
            if h.len() < 3 || model.support_class() != SupportClass::FullPlane {
                return 0.0;
            }
            let polar: Vec<Vec2> = (0..h.len())
                .map(|i| {
                    let (p, q) = (h[i], h[(i + 1) % h.len()]);
                    // u·p = 1 = u·q
                    let det = crate::cross(p, q);
                    Vec2::new(q.y - p.y, p.x - q.x) / det
                })
                .collect();
            1.0 / (2.0 * hull::shoelace(&polar))
        }
        ModelKind::Graph1D { mu1, y } => {
            let (lo, hi) = y.support_bounds();
            mu1.abs() * (hi - lo) / 8.0
        }
    }
}

/// Safeguarded regula falsi (Illinois) on a sign-changing bracket.
fn illinois<F>(mut f: F, mut a: f64, mut fa: f64, mut b: f64, mut fb: f64, ftol: f64, xtol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    let mut side = 0;
    for it in 0..200 {
        let mut c = (a * fb - b * fa) / (fb - fa);
        if !c.is_finite() || c <= a.min(b) || c >= a.max(b) || it % 8 == 7 {
            c = 0.5 * (a + b);
        }
        let fc = f(c)?;
        if fc.abs() <= ftol || (b - a).abs() <= xtol {
            return Ok(c);
        }
        if (fc > 0.0) == (fb > 0.0) {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    Err(Error::NoConvergence { what: "bracketed root", iterations: 200, residual: f64::NAN })
}

fn check_area(a: f64) -> Result<()> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::InvalidArgument(format!("target area must be positive and finite, got {a}")));
    }
    Ok(())
}

const LOG_ALPHA_MIN: f64 = -32.236_191_301_916_64; // ln 1e-14
const LOG_ALPHA_MAX: f64 = 27.631_021_115_928_547; // ln 1e12

/// The level `α` solving `(√E)'(α) = 1/√(2a)` for a centrally symmetric law.
pub fn symmetric_alpha(model: &IncrementModel, a: f64) -> Result<f64> {
    check_area(a)?;
    if model.support_class() != SupportClass::FullPlane {
        return Err(Error::NotFullPlane);
    }
    if !model.is_centrally_symmetric() {
        return Err(Error::NotSymmetric);
    }
    let amax = a_max(model);
    if a >= amax {
        return Err(Error::OutOfRange { a, a_max: amax });
    }
    // ln((√E)') − ln(1/√(2a)), decreasing in ln α
    let g = |x: f64| -> Result<f64> {
        let (e, lam) = levelset::area_and_mass(model, x.exp(), Region::Full)?;
        Ok((lam / (2.0 * e.sqrt())).ln() + 0.5 * (2.0 * a).ln())
    };
    let (lo, flo, hi, fhi) = bracket_decreasing(g, 0.0, 2.0, LOG_ALPHA_MIN, LOG_ALPHA_MAX)
        .map_err(|e| if matches!(e, Error::NoCandidate { .. }) { Error::OutOfRange { a, a_max: amax } } else { e })?;
    let x = illinois(g, lo, flo, hi, fhi, 1e-13, 1e-15)?;
    Ok(x.exp())
}

/// Bracket a root of a decreasing function by stepping from `x0`.
fn bracket_decreasing<F>(mut f: F, x0: f64, step: f64, xmin: f64, xmax: f64) -> Result<(f64, f64, f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let f0 = f(x0)?;
    if f0 > 0.0 {
        let (mut x, mut fx) = (x0, f0);
        while x < xmax {
            let nx = (x + step).min(xmax);
            let nf = f(nx)?;
            if nf <= 0.0 {
                return Ok((x, fx, nx, nf));
            }
            x = nx;
            fx = nf;
        }
    } else {
        let (mut x, mut fx) = (x0, f0);
        while x > xmin {
            let nx = (x - step).max(xmin);
            let nf = f(nx)?;
            if nf >= 0.0 {
                return Ok((nx, nf, x, fx));
            }
            x = nx;
            fx = nf;
        }
    }
    Err(Error::NoCandidate { a: f64::NAN })
}

/// `r(θ) − r(θ + π)` on `K⁻¹(α)`.
fn asymmetry(model: &IncrementModel, alpha: f64, theta: f64) -> Result<f64> {
    Ok(levelset::radius_at(model, alpha, theta)? - levelset::radius_at(model, alpha, theta + PI)?)
}

fn bisect_angle(model: &IncrementModel, alpha: f64, mut a: f64, mut fa: f64, mut b: f64) -> Result<f64> {
    for _ in 0..80 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = asymmetry(model, alpha, m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Angles `θ ∈ [0, 2π)` with `r(θ) = r(θ + π)`, from a `k`-point scan of `[0, π)`.
pub fn direction_roots(model: &IncrementModel, alpha: f64, k: usize) -> Result<Vec<f64>> {
    if k < 2 {
        return Err(Error::InvalidArgument("direction scan needs at least 2 points".into()));
    }
    let thetas: Vec<f64> = (0..=k).map(|i| PI * i as f64 / k as f64).collect();
    let mut f = thetas[..k].par_iter().map(|&t| asymmetry(model, alpha, t)).collect::<Result<Vec<f64>>>()?;
    f.push(-f[0]);
    let mut roots = Vec::new();
    for i in 0..k {
        if f[i] == 0.0 {
            roots.push(thetas[i]);
        } else if f[i + 1] != 0.0 && (f[i] > 0.0) != (f[i + 1] > 0.0) {
            roots.push(bisect_angle(model, alpha, thetas[i], f[i], thetas[i + 1])?);
        }
    }
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    if let (Some(&first), Some(&last)) = (roots.first(), roots.last()) {
        if roots.len() > 1 && (first + PI - last).abs() < 1e-12 {
            roots.pop();
        }
    }
    let mut all: Vec<f64> = roots.iter().copied().chain(roots.iter().map(|t| t + PI)).collect();
    all.sort_by(f64::total_cmp);
    Ok(all)
}

/// Directions `ℓ` whose two level-set intersections are symmetric about the origin, with both sides.
pub fn candidate_directions(model: &IncrementModel, alpha: f64, k: usize) -> Result<Directions> {
    if model.support_class() != SupportClass::FullPlane {
        return Err(Error::NotFullPlane);
    }
    if model.is_centrally_symmetric() {
        return Ok(Directions::AllDirections);
    }
    let roots = direction_roots(model, alpha, k)?;
    Ok(Directions::Found(
        roots.into_iter().flat_map(|t| [(unit(t), Tau::Plus), (unit(t), Tau::Minus)]).collect(),
    ))
}

fn trajectory_from_arc(arc: &levelset::LevelArc) -> Result<Trajectory> {
    let c = -1.0 / (arc.tau.sign() * arc.mass);
    let g0 = arc.samples[0];
    let points: Vec<Vec2> = arc.samples.iter().map(|g| c * perp(g - g0)).collect();
    let derivs: Vec<Vec2> = arc.derivs.iter().map(|d| c * perp(*d)).collect();
    Trajectory::new(arc.times.clone(), points, derivs)
}

/// The curve `h = −(τλ)⁻¹(g − g(0))^⊥` built from the level arc `g^τ_{α,ℓ}` on `n` intervals.
pub fn build_trajectory(model: &IncrementModel, alpha: f64, ell: Vec2, tau: Tau, n: usize) -> Result<Trajectory> {
    let arc = levelset::arc_parametrization(model, alpha, ell, tau, n)?;
    trajectory_from_arc(&arc)
}

fn level_candidate(model: &IncrementModel, alpha: f64, ell: Vec2, tau: Tau, n: usize) -> Result<Candidate> {
    let (e_half, _) = levelset::area_and_mass(model, alpha, Region::Half { ell, tau })?;
    let arc = levelset::arc_parametrization(model, alpha, ell, tau, n)?;
    let mut trajectory = trajectory_from_arc(&arc)?;
    legendre::energy(model, &mut trajectory)?;
    Ok(Candidate {
        kind: CandidateKind::Level { alpha, ell: arc.ell },
        tau,
        multiplier: tau.sign() * arc.mass,
        energy: 2.0 * e_half / arc.mass - alpha,
        hull_area: trajectory.hull_area(),
        trajectory,
        minimal: false,
    })
}

fn finish(a: f64, amax: f64, eps: f64, symmetric: bool, mut candidates: Vec<Candidate>) -> Result<RateResult> {
    if candidates.is_empty() {
        return Err(Error::NoCandidate { a });
    }
    let j_a = candidates.iter().map(|c| c.energy).fold(f64::INFINITY, f64::min);
    for c in &mut candidates {
        c.minimal = (c.energy - j_a).abs() <= 1e-9;
    }
    Ok(RateResult { a, j_a, a_max: amax, eps, symmetric, candidates })
}

/// Solve for `𝒥_A(a)`: all candidate curves, their energies, and the minimum.
///
/// `opts.eps > 0` regularizes the law first; this is required when its
/// support does not span the plane. Graph-type walks use the explicit curves.
pub fn rate_of_area(model: &IncrementModel, a: f64, opts: &RateOptions) -> Result<RateResult> {
    check_area(a)?;
    if opts.samples < 2 {
        return Err(Error::InvalidArgument("trajectory needs at least 2 samples".into()));
    }
    let model = if opts.eps > 0.0 { model.regularize(opts.eps)? } else { model.clone() };
    match model.support_class() {
        SupportClass::ProperSubsetOfPlane => Err(Error::NotFullPlane),
        SupportClass::VerticalLine(mu1) => {
            let sol = graph_trajectory(&model, a, opts.samples)?;
            let lam = 2.0 * sol.u_a / mu1;
            let cand = |traj: Trajectory, tau: Tau| Candidate {
                kind: CandidateKind::Graph { u_a: sol.u_a },
                tau,
                multiplier: tau.sign() * lam,
                energy: sol.j_a,
                hull_area: traj.hull_area(),
                trajectory: traj,
                minimal: false,
            };
            let candidates = vec![cand(sol.plus.clone(), Tau::Plus), cand(sol.minus.clone(), Tau::Minus)];
            finish(a, a_max(&model), model.epsilon(), false, candidates)
        }
        SupportClass::FullPlane => {
            let amax = a_max(&model);
            if a >= amax {
                return Err(Error::OutOfRange { a, a_max: amax });
            }
            if model.is_centrally_symmetric() {
                let alpha = symmetric_alpha(&model, a)?;
                let ell = Vec2::new(1.0, 0.0);
                let candidates = [Tau::Plus, Tau::Minus]
                    .par_iter()
                    .map(|&tau| level_candidate(&model, alpha, ell, tau, opts.samples))
                    .collect::<Result<Vec<_>>>()?;
                finish(a, amax, model.epsilon(), true, candidates)
            } else {
                let found = general_levels(&model, a, opts.directions)?;
                let mut candidates = found
                    .par_iter()
                    .map(|&(alpha, theta, tau)| level_candidate(&model, alpha, unit(theta), tau, opts.samples))
                    .collect::<Result<Vec<_>>>()?;
                candidates.sort_by(|x, y| {
                    x.energy.total_cmp(&y.energy).then_with(|| match (x.kind, y.kind) {
                        (CandidateKind::Level { ell: e1, .. }, CandidateKind::Level { ell: e2, .. }) => {
                            e1.y.atan2(e1.x).total_cmp(&e2.y.atan2(e2.x))
                        }
                        _ => std::cmp::Ordering::Equal,
                    })
                });
                finish(a, amax, model.epsilon(), false, candidates)
            }
        }
    }
}

const GRID_PER_DECADE: usize = 8;

/// `ln E^τ − 2 ln λ^τ − ln a` at direction angle `theta`.
fn area_defect(model: &IncrementModel, alpha: f64, theta: f64, tau: Tau, a: f64) -> Result<f64> {
    let (e, lam) = levelset::area_and_mass(model, alpha, Region::Half { ell: unit(theta), tau })?;
    Ok(e.ln() - 2.0 * lam.ln() - a.ln())
}

fn area_defect_coarse(model: &IncrementModel, alpha: f64, theta: f64, tau: Tau, a: f64) -> Result<f64> {
    let (e, lam) = levelset::area_and_mass_coarse(model, alpha, Region::Half { ell: unit(theta), tau })?;
    Ok(e.ln() - 2.0 * lam.ln() - a.ln())
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// Refine the symmetric-direction root at level `alpha` near `guess`.
fn track_root(model: &IncrementModel, alpha: f64, guess: f64, k: usize) -> Result<Option<f64>> {
    let mut w = PI / k as f64;
    for _ in 0..4 {
        let (lo, hi) = (guess - w, guess + w);
        let (flo, fhi) = (asymmetry(model, alpha, lo)?, asymmetry(model, alpha, hi)?);
        if flo == 0.0 {
            return Ok(Some(lo));
        }
        if fhi == 0.0 {
            return Ok(Some(hi));
        }
        if (flo > 0.0) != (fhi > 0.0) {
            return Ok(Some(bisect_angle(model, alpha, lo, flo, hi)?.rem_euclid(2.0 * PI)));
        }
        w *= 2.0;
    }
    let roots = direction_roots(model, alpha, k)?;
    Ok(roots.into_iter().min_by(|x, y| angle_gap(*x, guess).total_cmp(&angle_gap(*y, guess))).filter(|r| angle_gap(*r, guess) < 0.25))
}

/// `(α, θ_ℓ, τ)` triples solving `E^τ/λ² = a` along continuous branches of symmetric directions.
fn general_levels(model: &IncrementModel, a: f64, k: usize) -> Result<Vec<(f64, f64, Tau)>> {
    let decades = 12;
    let npts = decades * GRID_PER_DECADE + 1;
    let xs: Vec<f64> = (0..npts).map(|i| (10f64).ln() * (-6.0 + i as f64 / GRID_PER_DECADE as f64)).collect();
    // per grid point: roots and the area defect for each root and side
    type Row = Vec<(f64, [f64; 2])>;
    let rows = xs
        .par_iter()
        .map(|&x| -> Result<Row> {
            let alpha = x.exp();
            direction_roots(model, alpha, k)?
                .into_iter()
                .map(|t| {
                    Ok((t, [area_defect_coarse(model, alpha, t, Tau::Plus, a)?, area_defect_coarse(model, alpha, t, Tau::Minus, a)?]))
                })
                .collect()
        })
        .collect::<Result<Vec<Row>>>()?;
    let mut brackets: Vec<(usize, f64, f64, f64, f64, Tau)> = Vec::new();
    for j in 0..npts - 1 {
        for &(t1, f1) in &rows[j + 1] {
            // nearest root at the previous grid point, mutually nearest
            let Some(&(t0, f0)) = rows[j].iter().min_by(|p, q| angle_gap(p.0, t1).total_cmp(&angle_gap(q.0, t1))) else {
                continue;
            };
            let back = rows[j + 1].iter().min_by(|p, q| angle_gap(p.0, t0).total_cmp(&angle_gap(q.0, t0))).unwrap();
            if back.0 != t1 || angle_gap(t0, t1) > 0.25 {
                continue;
            }
            for (s, tau) in [Tau::Plus, Tau::Minus].into_iter().enumerate() {
                if f0[s] == 0.0 || (f0[s] < 0.0 && f1[s] > 0.0) || (f0[s] > 0.0 && f1[s] < 0.0) {
                    brackets.push((j, t0, t1, f0[s], f1[s], tau));
                }
            }
        }
    }
    brackets
        .par_iter()
        .map(|&(j, t0, t1, f0, f1, tau)| {
            let (x0, x1) = (xs[j], xs[j + 1]);
            let guess = |x: f64| {
                let s = (x - x0) / (x1 - x0);
                let mut d = (t1 - t0).rem_euclid(2.0 * PI);
                if d > PI {
                    d -= 2.0 * PI;
                }
                t0 + s * d
            };
            let theta_at = |x: f64| -> Result<f64> {
                Ok(track_root(model, x.exp(), guess(x), k)?.unwrap_or_else(|| guess(x)).rem_euclid(2.0 * PI))
            };
            let f = |x: f64| area_defect(model, x.exp(), theta_at(x)?, tau, a);
            let x = illinois(f, x0, f0, x1, f1, 1e-13, 1e-15)?;
            Ok((x.exp(), theta_at(x)?, tau))
        })
        .collect()
}

/// `E'(u) = ∫_{−1}^{1} s K₂'(us) ds` and `𝒥 = ∫_0^1 (wK₂'(w) − K₂(w)) dt` with `w = u(2t − 1)`.
fn graph_integral<F: Fn(f64) -> f64 + Sync>(f: F) -> f64 {
    // split at the kink scale near s = 0 and double panels to convergence
    let eval = |panels: usize| {
        crate::quadrature::integrate(&f, -1.0, 0.0, panels) + crate::quadrature::integrate(&f, 0.0, 1.0, panels)
    };
    let mut panels = 8;
    let mut prev = eval(panels);
    loop {
        panels *= 2;
        let cur = eval(panels);
        if (cur - prev).abs() <= 1e-15 * cur.abs().max(1e-300) || panels >= 1 << 14 {
            return cur;
        }
        prev = cur;
    }
}

/// `E'(u)` for a graph-type walk.
pub fn graph_e_prime(model: &IncrementModel, u: f64) -> f64 {
    graph_integral(|s| s * model.y_cumulant(u * s).1)
}

/// Explicit optimal curves of a graph-type walk `(μ₁, Y)` for area `a`, on `n` intervals.
pub fn graph_trajectory(model: &IncrementModel, a: f64, n: usize) -> Result<GraphSolution> {
    check_area(a)?;
    let mu1 = match model.support_class() {
        SupportClass::VerticalLine(mu1) => mu1,
        _ => return Err(Error::InvalidArgument("explicit graph curves need a graph model without regularization".into())),
    };
    if n < 2 {
        return Err(Error::InvalidArgument("trajectory needs at least 2 samples".into()));
    }
    let amax = a_max(model);
    if a >= amax {
        return Err(Error::OutOfRange { a, a_max: amax });
    }
    let target = 4.0 * a / mu1.abs();
    let f = |u: f64| Ok(graph_e_prime(model, u) - target);
    let mut hi = 1.0;
    let mut fhi = f(hi)?;
    while fhi < 0.0 {
        hi *= 2.0;
        if hi > 1e9 {
            return Err(Error::OutOfRange { a, a_max: amax });
        }
        fhi = f(hi)?;
    }
    let u = illinois(f, 0.0, -target, hi, fhi, 1e-15 * target, 1e-15 * hi)?;
    let k2 = |w: f64| model.y_cumulant(w);
    let j_a = graph_integral(|s| {
        // t ↦ s = 2t − 1 rescales dt = ds/2
        let w = u * s;
        let (k, d, _) = k2(w);
        0.5 * (w * d - k)
    });
    let (k_minus, k_plus) = (k2(-u).0, k2(u).0);
    let plus = Trajectory::sample(
        n,
        |t| Vec2::new(mu1 * t, (k2(u * (2.0 * t - 1.0)).0 - k_minus) / (2.0 * u)),
        |t| Vec2::new(mu1, k2(u * (2.0 * t - 1.0)).1),
    );
    let minus = Trajectory::sample(
        n,
        |t| Vec2::new(mu1 * t, -(k2(-u * (2.0 * t - 1.0)).0 - k_plus) / (2.0 * u)),
        |t| Vec2::new(mu1, k2(-u * (2.0 * t - 1.0)).1),
    );
    let mut sol = GraphSolution { plus, minus, u_a: u, j_a };
    legendre::energy(model, &mut sol.plus)?;
    legendre::energy(model, &mut sol.minus)?;
    Ok(sol)
}

/// Euler–Lagrange residual `λh^⊥(t) = ∇I(h'(t)) − ∇I(h'(0))` with transversality `∇I(h'(1)) = −∇I(h'(0))`.
pub fn el_residual(model: &IncrementModel, traj: &Trajectory, lambda: f64) -> Result<ElResidual> {
    let grads = traj
        .derivs
        .par_iter()
        .map(|d| legendre::rate_gradient(model, *d))
        .collect::<Result<Vec<Vec2>>>()?;
    let g0 = grads[0];
    let interior = traj
        .points
        .iter()
        .zip(&grads)
        .map(|(h, g)| (lambda * perp(*h) - g + g0).norm())
        .fold(0.0, f64::max);
    let boundary = (grads[grads.len() - 1] + g0).norm();
    Ok(ElResidual { interior, boundary, is_candidate: lambda != 0.0 && lambda.is_finite() })
}

/// One-dimensional residual `λμ₁t = I₂'(h₂'(t)) − I₂'(h₂'(0))` for graph walks, with transversality.
pub fn el_residual_1d(model: &IncrementModel, traj: &Trajectory, lambda: f64) -> Result<ElResidual> {
    let mu1 = match model.kind() {
        ModelKind::Graph1D { mu1, .. } => *mu1,
        _ => return Err(Error::InvalidArgument("one-dimensional residual needs a graph model".into())),
    };
    let grads = traj
        .derivs
        .iter()
        .map(|d| legendre::rate_1d_gradient(model, d.y))
        .collect::<Result<Vec<f64>>>()?;
    let g0 = grads[0];
    let interior = traj
        .times
        .iter()
        .zip(&grads)
        .map(|(t, g)| (lambda * mu1 * t - g + g0).abs())
        .fold(0.0, f64::max);
    let boundary = (grads[grads.len() - 1] + g0).abs();
    Ok(ElResidual { interior, boundary, is_candidate: lambda != 0.0 && lambda.is_finite() })
}

/// `𝒥_A(a)` for the law regularized by each `eps` in turn.
pub fn regularization_ladder(model: &IncrementModel, a: f64, eps: &[f64], opts: &RateOptions) -> Result<Vec<(f64, RateResult)>> {
    eps.iter()
        .map(|&e| {
            let m = model.regularize(e)?;
            Ok((e, rate_of_area(&m, a, &RateOptions { eps: 0.0, ..*opts })?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::increments::Model1D;
    use crate::polyline::{signed_area_integral, PolygonalLine};
    use crate::Mat2;

    fn v(x: f64, y: f64) -> Vec2 {
        Vec2::new(x, y)
    }

    fn std_gauss() -> IncrementModel {
        IncrementModel::standard_gaussian(Vec2::zeros())
    }

    fn drifted() -> IncrementModel {
        IncrementModel::standard_gaussian(v(1.0, 0.0))
    }

    fn pm1_graph() -> IncrementModel {
        IncrementModel::graph1d(1.0, Model1D::atoms(vec![1.0, -1.0], vec![0.5, 0.5]).unwrap()).unwrap()
    }

    fn gauss_graph() -> IncrementModel {
        IncrementModel::graph1d(1.0, Model1D::gaussian(0.0, 1.0).unwrap()).unwrap()
    }

    fn square() -> IncrementModel {
        IncrementModel::uniform_atoms(vec![v(1.0, 0.0), v(-1.0, 0.0), v(0.0, 1.0), v(0.0, -1.0)]).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    // bisection for (2φ − sin 2φ)/(8φ² cos² φ) = a on (0, π/2)
    fn drift_phi(a: f64) -> f64 {
        let f = |p: f64| (2.0 * p - (2.0 * p).sin()) / (8.0 * p * p * p.cos().powi(2)) - a;
        let (mut lo, mut hi) = (1e-9, PI / 2.0 - 1e-12);
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if f(m) > 0.0 {
                hi = m;
            } else {
                lo = m;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn symmetric_alpha_examples() {
        for a in [0.25, 1.0, 2.0] {
            assert!(rel(symmetric_alpha(&std_gauss(), a).unwrap(), PI * a) < 1e-10);
        }
        let g2 = IncrementModel::gaussian(Vec2::zeros(), 2.0 * Mat2::identity()).unwrap();
        assert!(rel(symmetric_alpha(&g2, 1.0).unwrap(), PI / 2.0) < 1e-6);
        let mut prev = f64::INFINITY;
        for a in [1e-1, 1e-2, 1e-3, 1e-4] {
            let al = symmetric_alpha(&std_gauss(), a).unwrap();
            assert!(al < prev);
            prev = al;
        }
        assert!(prev < 1e-3);
        assert_eq!(symmetric_alpha(&drifted(), 1.0), Err(Error::NotSymmetric));
    }

    #[test]
    fn square_atoms_a_max() {
        // polar of the diamond is the square [−1, 1]²
        assert!((a_max(&square()) - 0.125).abs() < 1e-15);
        assert!(matches!(symmetric_alpha(&square(), 0.2), Err(Error::OutOfRange { .. })));
        assert_eq!(a_max(&square().regularize(1e-3).unwrap()), f64::INFINITY);
        assert_eq!(a_max(&pm1_graph()), 0.25);
        assert_eq!(a_max(&gauss_graph()), f64::INFINITY);
    }

    #[test]
    fn directions_examples() {
        assert_eq!(candidate_directions(&std_gauss(), 1.0, 64).unwrap(), Directions::AllDirections);
        let Directions::Found(d) = candidate_directions(&drifted(), 1.0, 256).unwrap() else { panic!() };
        assert_eq!(d.len(), 4);
        for (ell, _) in &d {
            assert!(ell.x.abs() < 1e-12 && (ell.y.abs() - 1.0).abs() < 1e-12);
        }
        let tri = IncrementModel::uniform_atoms(vec![v(1.0, 1.0), v(1.0, -1.0), v(-1.0, 0.3)]).unwrap();
        let coarse = direction_roots(&tri, 0.7, 64).unwrap();
        let fine = direction_roots(&tri, 0.7, 512).unwrap();
        assert_eq!(coarse.len(), fine.len());
        for (c, f) in coarse.iter().zip(&fine) {
            assert!((c - f).abs() < 1e-6);
        }
    }

    #[test]
    fn trajectory_examples() {
        let alpha = PI;
        let h = build_trajectory(&std_gauss(), alpha, v(1.0, 0.0), Tau::Plus, 512).unwrap();
        assert_eq!(h.points[0], Vec2::zeros());
        for d in &h.derivs {
            assert!((d.norm() - (2.0 * PI).sqrt()).abs() < 1e-8);
        }
        let arc = levelset::arc_parametrization(&std_gauss(), alpha, v(1.0, 0.0), Tau::Plus, 512).unwrap();
        for (d, g) in h.derivs.iter().zip(&arc.derivs) {
            assert!(d.dot(g).abs() < 1e-9);
        }
        let tri = IncrementModel::uniform_atoms(vec![v(1.0, 1.0), v(1.0, -1.0), v(-1.0, 0.3)]).unwrap();
        let ell = unit(direction_roots(&tri, 0.5, 256).unwrap()[0]);
        for tau in [Tau::Plus, Tau::Minus] {
            let h = build_trajectory(&tri, 0.5, ell, tau, 1024).unwrap();
            let (e, lam) = levelset::area_and_mass(&tri, 0.5, Region::Half { ell, tau }).unwrap();
            assert!(rel(h.hull_area(), e / (lam * lam)) < 1e-4);
        }
    }

    #[test]
    fn isotropic_rate() {
        for a in [0.25, 0.5, 1.0, 2.0] {
            let r = rate_of_area(&std_gauss(), a, &RateOptions::default()).unwrap();
            assert!(rel(r.j_a, PI * a) < 1e-10);
            assert_eq!(r.candidates.len(), 2);
            assert!((r.candidates[0].energy - r.candidates[1].energy).abs() < 1e-8);
            for c in &r.candidates {
                assert!(rel(c.hull_area, a) < 1e-4);
                assert!(rel(c.trajectory.energy.unwrap(), c.energy) < 1e-5);
                assert!(rel(signed_area_integral(&c.trajectory).abs(), c.hull_area) < 1e-4);
            }
        }
    }

    #[test]
    fn drifted_rate() {
        let a = 1.0;
        let phi = drift_phi(a);
        let expected = 4.0 * a * phi - 0.5 * phi.tan().powi(2);
        let r = rate_of_area(&drifted(), a, &RateOptions::default()).unwrap();
        assert!(rel(r.j_a, expected) < 1e-8, "{} vs {expected}", r.j_a);
        assert_eq!(r.candidates.len(), 4);
        let minimal: Vec<&Candidate> = r.minimal_candidates().collect();
        assert_eq!(minimal.len(), 2);
        for c in &minimal {
            let CandidateKind::Level { ell, .. } = c.kind else { panic!() };
            assert!(ell.x.abs() < 1e-9);
            // the smaller arc has mass 2φ < π
            assert!(c.multiplier.abs() < PI);
            assert!(rel(c.hull_area, a) < 1e-4);
        }
        for c in &r.candidates {
            let res = el_residual(&drifted(), &c.trajectory, c.multiplier).unwrap();
            assert!(res.interior <= 1e-5 && res.boundary <= 1e-5);
        }
    }

    #[test]
    fn rate_monotone_in_area() {
        let mut prev = 0.0;
        for a in [0.05, 0.1, 0.2, 0.4, 0.8] {
            let j = rate_of_area(&drifted(), a, &RateOptions::default()).unwrap().j_a;
            assert!(j > prev);
            prev = j;
        }
    }

    #[test]
    fn graph_gaussian_parabola() {
        for a in [0.25, 0.5, 1.0] {
            let sol = graph_trajectory(&gauss_graph(), a, 256).unwrap();
            assert!((sol.j_a - 6.0 * a * a).abs() < 1e-8 * (6.0 * a * a));
            assert!((sol.u_a - 6.0 * a).abs() < 1e-9);
            for (t, p) in sol.plus.times.iter().zip(&sol.plus.points) {
                assert!((p.y - 6.0 * a * (t * t - t)).abs() < 1e-8);
            }
            for (t, p) in sol.minus.times.iter().zip(&sol.minus.points) {
                assert!((p.y + 6.0 * a * (t * t - t)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn graph_simple_walk() {
        let m = pm1_graph();
        assert!(matches!(graph_trajectory(&m, 0.3, 64), Err(Error::OutOfRange { a_max, .. }) if a_max == 0.25));
        let sol = graph_trajectory(&m, 0.2, 1024).unwrap();
        assert!((sol.plus.end_point() - v(1.0, 0.0)).norm() < 1e-14);
        assert!(rel(sol.plus.hull_area(), 0.2) < 1e-6);
        let r1 = el_residual_1d(&m, &sol.plus, 2.0 * sol.u_a).unwrap();
        let r2 = el_residual_1d(&m, &sol.minus, -2.0 * sol.u_a).unwrap();
        assert!(r1.total() < 1e-8 && r2.total() < 1e-8);
        let near = graph_trajectory(&m, 0.2499, 1024).unwrap();
        assert!(near.j_a < 2f64.ln());
        let sup = near
            .plus
            .times
            .iter()
            .zip(&near.plus.points)
            .map(|(t, p)| (p.y + t.min(1.0 - t)).abs())
            .fold(0.0, f64::max);
        assert!(sup < 0.05, "{sup}");
    }

    #[test]
    fn el_residual_examples() {
        let g = std_gauss();
        let r = rate_of_area(&g, 1.0, &RateOptions::default()).unwrap();
        let c = &r.candidates[0];
        let res = el_residual(&g, &c.trajectory, c.multiplier).unwrap();
        assert!(res.total() <= 1e-6);
        assert!(res.is_candidate);
        let mut bent = c.trajectory.clone();
        bent.derivs[300].x += 0.1;
        assert!(el_residual(&g, &bent, c.multiplier).unwrap().total() > 0.05);
        let line = Trajectory::sample(64, |t| t * g.drift(), |_| g.drift());
        let res = el_residual(&g, &line, 0.0).unwrap();
        assert_eq!(res.total(), 0.0);
        assert!(!res.is_candidate);
    }

    #[test]
    fn degenerate_laws_need_regularization() {
        let two = IncrementModel::atoms(vec![v(1.0, 1.0), v(-1.0, -1.0)], vec![0.5, 0.5]).unwrap();
        assert_eq!(rate_of_area(&two, 0.1, &RateOptions::default()), Err(Error::NotFullPlane));
        let r = rate_of_area(&two, 0.1, &RateOptions { eps: 0.1, ..Default::default() }).unwrap();
        assert_eq!(r.eps, 0.1);
        assert!(r.j_a > 0.0);
    }

    #[test]
    fn ladder_stabilizes() {
        let corners = IncrementModel::uniform_atoms(vec![v(1.0, 1.0), v(-1.0, 1.0), v(-1.0, -1.0), v(1.0, -1.0)]).unwrap();
        let rungs = regularization_ladder(&corners, 0.05, &[1e-1, 1e-2, 1e-3], &RateOptions::default()).unwrap();
        let j: Vec<f64> = rungs.iter().map(|r| r.1.j_a).collect();
        assert!(j[0] < j[1] && j[1] < j[2]);
        assert!(rel(j[2], j[1]) < 0.02, "{j:?}");
        let direct = rate_of_area(&corners, 0.05, &RateOptions::default()).unwrap().j_a;
        assert!(rel(j[2], direct) < 0.002);
    }

    #[test]
    fn green_consistency_on_polyline() {
        let r = rate_of_area(&drifted(), 0.5, &RateOptions::default()).unwrap();
        for c in &r.candidates {
            let p = PolygonalLine::new(c.trajectory.points.clone()).unwrap();
            assert!(rel(signed_area_integral(&p).abs(), c.hull_area) < 1e-4);
        }
    }
}
