//! Random walks, their hull areas, and naive or exponentially tilted
//! estimates of `−(1/n) log P(A_n ≥ an²)`.
//!
//! Randomness is counter-based: ChaCha8 keyed by the seed, with the sample
//! index as stream and the step index selecting a disjoint block, so results
//! do not depend on thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::increments::{IncrementModel, Model1D, ModelKind};
use crate::legendre;
use crate::solver::{self, RateOptions};
use crate::{Mat2, Vec2};

pub use crate::hull::hull_area_points;

const BATCHES: usize = 10;
const STEP_BLOCK: u32 = 20;

/// One simulated walk `S₀ = 0, S₁, …, S_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkSample {
    pub n: usize,
    pub points: Vec<Vec2>,
    pub hull_area: f64,
    /// `log dP/dQ` of the path, `Q` the sampling law; zero without tilting.
    pub log_weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Naive,
    Tilted,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(Mode::Naive),
            "tilted" => Ok(Mode::Tilted),
            _ => Err(Error::InvalidArgument(format!("mode must be naive or tilted, got {s:?}"))),
        }
    }
}

/// Result of [`estimate_ldp`].
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    /// `−(1/n) log p̂`; `None` when no sample hit the event.
    pub rate_estimate: Option<f64>,
    /// Delta-method standard error of the rate, from batch means.
    pub stderr: Option<f64>,
    /// `p̂`, the (weighted) frequency of `{A_n ≥ an²}`.
    pub probability: f64,
    pub probability_stderr: f64,
    pub hits: usize,
    pub samples: usize,
}

impl Estimate {
    pub fn zero_hits(&self) -> bool {
        self.hits == 0
    }
}

/// Law of one increment under a fixed tilt, ready for sampling.
#[derive(Debug, Clone)]
enum StepLaw {
    Gaussian { mean: Vec2, chol: Mat2 },
    Atoms { points: Vec<Vec2>, cdf: Vec<f64> },
    Graph { mu1: f64, y: YLaw },
}

#[derive(Debug, Clone)]
enum YLaw {
    Gaussian { mean: f64, sd: f64 },
    Atoms { points: Vec<f64>, cdf: Vec<f64> },
}

#[derive(Debug, Clone)]
struct TiltedStep {
    law: StepLaw,
    /// Mean of the regularization noise, `εu`.
    noise_mean: Vec2,
    noise_sd: f64,
    tilt: Vec2,
    cumulant: f64,
}

fn psd_sqrt(cov: &Mat2) -> Mat2 {
    let eig = cov.symmetric_eigen();
    let d = Mat2::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
    eig.eigenvectors * d
}

fn tilted_cdf(log_weights: impl Iterator<Item = f64>) -> Vec<f64> {
    let lw: Vec<f64> = log_weights.collect();
    let m = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = lw.iter().map(|x| (x - m).exp()).collect();
    let z: f64 = w.iter().sum();
    let mut acc = 0.0;
    w.iter()
        .map(|x| {
            acc += x / z;
            acc
        })
        .collect()
}

impl TiltedStep {
    fn new(model: &IncrementModel, u: Vec2) -> Self {
        let eps = model.epsilon();
        let law = match model.kind() {
            ModelKind::Gaussian { mean, cov } => StepLaw::Gaussian { mean: mean + cov * u, chol: psd_sqrt(cov) },
            ModelKind::Atoms { points, probs } => {
                let cdf = if u == Vec2::zeros() {
                    let mut acc = 0.0;
                    probs
                        .iter()
                        .map(|p| {
                            acc += p;
                            acc
                        })
                        .collect()
                } else {
                    tilted_cdf(points.iter().zip(probs).map(|(p, q)| q.ln() + u.dot(p)))
                };
                StepLaw::Atoms { points: points.clone(), cdf }
            }
            ModelKind::Graph1D { mu1, y } => {
                let y = match y {
                    Model1D::Gaussian { mean, variance } => YLaw::Gaussian { mean: mean + variance * u.y, sd: variance.sqrt() },
                    Model1D::Atoms { points, probs } => {
                        let cdf = if u.y == 0.0 {
                            let mut acc = 0.0;
                            probs
                                .iter()
                                .map(|p| {
                                    acc += p;
                                    acc
                                })
                                .collect()
                        } else {
                            tilted_cdf(points.iter().zip(probs).map(|(p, q)| q.ln() + u.y * p))
                        };
                        YLaw::Atoms { points: points.clone(), cdf }
                    }
                };
                StepLaw::Graph { mu1: *mu1, y }
            }
        };
        Self { law, noise_mean: eps * u, noise_sd: eps.sqrt(), tilt: u, cumulant: model.cumulant(u) }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Vec2 {
        let pick = |cdf: &[f64], r: f64| cdf.iter().position(|c| r < *c).unwrap_or(cdf.len() - 1);
        let base = match &self.law {
            StepLaw::Gaussian { mean, chol } => {
                let z = Vec2::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
                mean + chol * z
            }
            StepLaw::Atoms { points, cdf } => points[pick(cdf, rng.random::<f64>())],
            StepLaw::Graph { mu1, y } => {
                let yv = match y {
                    YLaw::Gaussian { mean, sd } => mean + sd * rng.sample::<f64, _>(StandardNormal),
                    YLaw::Atoms { points, cdf } => points[pick(cdf, rng.random::<f64>())],
                };
                Vec2::new(*mu1, yv)
            }
        };
        if self.noise_sd > 0.0 {
            let z = Vec2::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
            base + self.noise_mean + self.noise_sd * z
        } else {
            base
        }
    }
}

fn run_walk(components: &[Vec<TiltedStep>], seed: u64, index: u64, weighted: bool) -> WalkSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let steps = &components[(index % components.len() as u64) as usize];
    let mut points = Vec::with_capacity(steps.len() + 1);
    let mut s = Vec2::zeros();
    points.push(s);
    // log dQ_k/dP of the path under each mixture component
    let mut log_lr = vec![0.0; if weighted { components.len() } else { 0 }];
    for (i, step) in steps.iter().enumerate() {
        rng.set_word_pos((i as u128) << STEP_BLOCK);
        let x = step.draw(&mut rng);
        for (l, comp) in log_lr.iter_mut().zip(components) {
            *l += comp[i].tilt.dot(&x) - comp[i].cumulant;
        }
        s += x;
        points.push(s);
    }
    let hull_area = hull_area_points(&points);
    let log_weight = match log_lr.len() {
        0 => 0.0,
        1 => -log_lr[0],
        m => {
            let top = log_lr.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = top + log_lr.iter().map(|l| (l - top).exp()).sum::<f64>().ln();
            (m as f64).ln() - lse
        }
    };
    WalkSample { n: steps.len(), points, hull_area, log_weight }
}

/// `n` untilted steps, stream `0` of `seed`.
pub fn simulate_walk(model: &IncrementModel, n: usize, seed: u64) -> WalkSample {
    let step = TiltedStep::new(model, Vec2::zeros());
    run_walk(&[vec![step; n]], seed, 0, false)
}

fn schedule_from(model: &IncrementModel, traj: &crate::Trajectory, n: usize) -> Result<Vec<Vec2>> {
    (1..=n)
        .map(|i| {
            let t = (i as f64 - 0.5) / n as f64;
            let k = traj.times.partition_point(|x| *x <= t).clamp(1, traj.len() - 1);
            let (t0, t1) = (traj.times[k - 1], traj.times[k]);
            let w = (t - t0) / (t1 - t0);
            let d = (1.0 - w) * traj.derivs[k - 1] + w * traj.derivs[k];
            match model.support_class() {
                crate::SupportClass::VerticalLine(_) => Ok(Vec2::new(0.0, legendre::rate_1d_gradient(model, d.y)?)),
                _ => legendre::rate_gradient(model, d),
            }
        })
        .collect()
}

/// Directions per orientation used for centrally symmetric laws, whose optimal curves
/// come in a one-parameter family of rotations.
pub const SYMMETRIC_DIRECTIONS: usize = 32;

/// Tilt schedules `uᵢ = ∇I(h'((i − ½)/n))`, one per optimal trajectory for area `a`.
///
/// Centrally symmetric laws are optimal along every direction `ℓ`; they get
/// [`SYMMETRIC_DIRECTIONS`] equally spaced directions on the circle, both sides each.
pub fn tilt_schedules(model: &IncrementModel, a: f64, n: usize, opts: &RateOptions) -> Result<Vec<Vec<Vec2>>> {
    let result = solver::rate_of_area(model, a, opts)?;
    let solved = if result.eps > model.epsilon() { model.regularize(result.eps - model.epsilon())? } else { model.clone() };
    let best: Vec<&solver::Candidate> = result.minimal_candidates().collect();
    if best.is_empty() {
        return Err(Error::NoCandidate { a });
    }
    match best[0].kind {
        solver::CandidateKind::Level { alpha, .. } if result.symmetric => {
            let grid: Vec<(Vec2, crate::Tau)> = (0..SYMMETRIC_DIRECTIONS)
                .flat_map(|k| {
                    let ell = crate::unit(std::f64::consts::TAU * k as f64 / SYMMETRIC_DIRECTIONS as f64);
                    [(ell, crate::Tau::Plus), (ell, crate::Tau::Minus)]
                })
                .collect();
            grid.par_iter()
                .map(|&(ell, tau)| schedule_from(&solved, &solver::build_trajectory(&solved, alpha, ell, tau, opts.samples)?, n))
                .collect()
        }
        _ => best.iter().map(|c| schedule_from(&solved, &c.trajectory, n)).collect(),
    }
}

/// Estimate `P(A_n ≥ c)` by sampling from an equal mixture of tilted laws,
/// one per schedule; each schedule holds the tilts of steps `1..=n`.
pub fn estimate_with_tilts(model: &IncrementModel, c: f64, schedules: &[Vec<Vec2>], samples: usize, seed: u64) -> Result<Estimate> {
    let n = schedules.first().map_or(0, Vec::len);
    if n == 0 || schedules.iter().any(|s| s.len() != n) {
        return Err(Error::InvalidArgument("tilt schedules must be non-empty and of equal length".into()));
    }
    estimate_inner(model, c, schedules, samples, seed, true)
}

fn estimate_inner(model: &IncrementModel, c: f64, schedules: &[Vec<Vec2>], samples: usize, seed: u64, weighted: bool) -> Result<Estimate> {
    if samples < BATCHES {
        return Err(Error::InvalidArgument(format!("need at least {BATCHES} samples")));
    }
    let n = schedules[0].len();
    let components: Vec<Vec<TiltedStep>> =
        schedules.iter().map(|tilts| tilts.iter().map(|u| TiltedStep::new(model, *u)).collect()).collect();
    let outcomes: Vec<(bool, f64)> = (0..samples as u64)
        .into_par_iter()
        .map(|j| {
            let w = run_walk(&components, seed, j, weighted);
            let hit = w.hull_area >= c;
            (hit, if hit { w.log_weight.exp() } else { 0.0 })
        })
        .collect();
    let hits = outcomes.iter().filter(|o| o.0).count();
    let probability = crate::compensated_sum(outcomes.iter().map(|o| o.1)) / samples as f64;
    let per = samples / BATCHES;
    let batch: Vec<f64> = (0..BATCHES)
        .map(|b| {
            let hi = if b == BATCHES - 1 { samples } else { (b + 1) * per };
            crate::compensated_sum(outcomes[b * per..hi].iter().map(|o| o.1)) / (hi - b * per) as f64
        })
        .collect();
    let mean = batch.iter().sum::<f64>() / BATCHES as f64;
    let var = batch.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (BATCHES - 1) as f64;
    let probability_stderr = (var / BATCHES as f64).sqrt();
    let (rate_estimate, stderr) = if hits > 0 && probability > 0.0 {
        (Some(-probability.ln() / n as f64), Some(probability_stderr / (n as f64 * probability)))
    } else {
        (None, None)
    };
    Ok(Estimate { rate_estimate, stderr, probability, probability_stderr, hits, samples })
}

/// Estimate `−(1/n) log P(A_n ≥ an²)`.
///
/// Tilted mode samples from the mixture of tilted laws given by
/// [`tilt_schedules`]. A naive run that never sees the event returns an
/// estimate with `hits == 0` and no rate.
pub fn estimate_ldp(model: &IncrementModel, a: f64, n: usize, samples: usize, mode: Mode, seed: u64, opts: &RateOptions) -> Result<Estimate> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::InvalidArgument(format!("target area must be positive and finite, got {a}")));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("walk needs at least one step".into()));
    }
    let c = a * (n * n) as f64;
    match mode {
        Mode::Naive => estimate_inner(model, c, &[vec![Vec2::zeros(); n]], samples, seed, false),
        Mode::Tilted => {
            let schedules = tilt_schedules(model, a, n, opts)?;
            estimate_with_tilts(model, c, &schedules, samples, seed)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64) -> Vec2 {
        Vec2::new(x, y)
    }

    fn brute_hull_area(pts: &[Vec2]) -> f64 {
        // largest-area triangulation bound via all hull edges: O(n³) extreme-edge test
        let n = pts.len();
        let mut area = 0.0;
        let c = pts.iter().sum::<Vec2>() / n as f64;
        for i in 0..n {
            for j in 0..n {
                if i == j || pts[i] == pts[j] {
                    continue;
                }
                let e = pts[j] - pts[i];
                if pts.iter().all(|p| crate::cross(e, p - pts[i]) >= 0.0) {
                    // drop edges that are not maximal along their line
                    let collinear_outside = pts.iter().any(|p| {
                        crate::cross(e, p - pts[i]) == 0.0 && (e.dot(&(p - pts[i])) < 0.0 || e.dot(&(p - pts[j])) > 0.0)
                    });
                    if !collinear_outside {
                        area += 0.5 * crate::cross(pts[i] - c, pts[j] - c);
                    }
                }
            }
        }
        area
    }

    #[test]
    fn hull_area_examples() {
        assert_eq!(hull_area_points(&[v(0.0, 0.0), v(1.0, 0.0), v(0.0, 1.0)]), 0.5);
        assert_eq!(hull_area_points(&[v(0.0, 0.0), v(1.0, 2.0), v(2.0, 4.0), v(-1.0, -2.0)]), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let pts: Vec<Vec2> = (0..10).map(|_| v(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            assert!((hull_area_points(&pts) - brute_hull_area(&pts)).abs() < 1e-12);
        }
    }

    #[test]
    fn walk_examples() {
        let g = IncrementModel::standard_gaussian(Vec2::zeros());
        let w = simulate_walk(&g, 0, 1);
        assert_eq!(w.points, vec![Vec2::zeros()]);
        assert_eq!(w.hull_area, 0.0);
        let two = IncrementModel::atoms(vec![v(1.0, 1.0), v(1.0, -1.0)], vec![0.5, 0.5]).unwrap();
        let w = simulate_walk(&two, 50, 9);
        for (i, p) in w.points.iter().enumerate() {
            assert_eq!(p.x, i as f64);
            assert_eq!(p.y.fract(), 0.0);
            assert_eq!((p.y as i64 + i as i64).rem_euclid(2), 0);
        }
        assert_eq!(simulate_walk(&two, 50, 9), w);
    }

    #[test]
    fn gaussian_increment_mean_clt() {
        let g = IncrementModel::standard_gaussian(Vec2::zeros());
        let n = 10_000;
        let mut inside = 0;
        for seed in 0..100 {
            let w = simulate_walk(&g, n, seed);
            let mean = w.points[n] / n as f64;
            if mean.x.abs() < 3.0 / (n as f64).sqrt() && mean.y.abs() < 3.0 / (n as f64).sqrt() {
                inside += 1;
            }
        }
        assert!(inside >= 99, "{inside}");
    }

    #[test]
    fn zero_tilt_matches_naive() {
        for m in [
            IncrementModel::standard_gaussian(v(0.2, 0.0)),
            IncrementModel::uniform_atoms(vec![v(1.0, 1.0), v(1.0, -1.0), v(-1.0, 0.0)]).unwrap(),
            IncrementModel::graph1d(1.0, Model1D::atoms(vec![1.0, -1.0], vec![0.5, 0.5]).unwrap()).unwrap(),
        ] {
            let n = 12;
            let c = 0.05 * (n * n) as f64;
            let naive = estimate_inner(&m, c, &[vec![Vec2::zeros(); n]], 2000, 5, false).unwrap();
            let tilted = estimate_with_tilts(&m, c, &[vec![Vec2::zeros(); n]], 2000, 5).unwrap();
            assert_eq!(naive, tilted);
        }
    }

    #[test]
    fn naive_zero_hits_beyond_max_area() {
        let m = IncrementModel::graph1d(1.0, Model1D::atoms(vec![1.0, -1.0], vec![0.5, 0.5]).unwrap()).unwrap();
        // hull area of n ±1 steps is at most n²/4
        let e = estimate_ldp(&m, 0.3, 10, 1000, Mode::Naive, 1, &RateOptions::default()).unwrap();
        assert!(e.zero_hits());
        assert_eq!(e.rate_estimate, None);
        assert_eq!(e.probability, 0.0);
    }

    #[test]
    fn duplicated_component_leaves_weights_unchanged() {
        let m = IncrementModel::standard_gaussian(v(0.3, 0.1));
        let tilts: Vec<Vec2> = (0..8).map(|i| v(0.1 * i as f64, -0.2)).collect();
        let one: Vec<Vec<TiltedStep>> = vec![tilts.iter().map(|u| TiltedStep::new(&m, *u)).collect()];
        let two = vec![one[0].clone(), one[0].clone()];
        for j in 0..20 {
            let a = run_walk(&one, 4, 2 * j, true);
            let b = run_walk(&two, 4, 2 * j, true);
            assert_eq!(a.points, b.points);
            assert!((a.log_weight - b.log_weight).abs() < 1e-12);
        }
    }

    #[test]
    fn schedules_cover_every_minimizer() {
        let opts = RateOptions::default();
        let iso = IncrementModel::standard_gaussian(Vec2::zeros());
        assert_eq!(tilt_schedules(&iso, 0.5, 10, &opts).unwrap().len(), 2 * SYMMETRIC_DIRECTIONS);
        let drifted = IncrementModel::standard_gaussian(v(1.0, 0.0));
        let s = tilt_schedules(&drifted, 0.5, 10, &opts).unwrap();
        assert_eq!(s.len(), 2);
        // mirror images across the drift axis
        for (p, q) in s[0].iter().zip(&s[1]) {
            assert!((p.x - q.x).abs() < 1e-6 && (p.y + q.y).abs() < 1e-6);
        }
        let graph = IncrementModel::graph1d(1.0, Model1D::gaussian(0.0, 1.0).unwrap()).unwrap();
        let s = tilt_schedules(&graph, 0.5, 10, &opts).unwrap();
        assert_eq!(s.len(), 2);
        // u₂ = 6a(2t − 1) on the parabola
        for (i, u) in s[0].iter().enumerate() {
            let t = (i as f64 + 0.5) / 10.0;
            assert!((u.y.abs() - (3.0 * (2.0 * t - 1.0)).abs()).abs() < 1e-3, "{u:?} at {t}");
        }
    }

    #[test]
    fn tilted_law_is_exact() {
        // mean of tilted atoms equals ∇K(u)
        let m = IncrementModel::uniform_atoms(vec![v(1.0, 1.0), v(1.0, -1.0), v(-1.0, 0.0)]).unwrap();
        let u = v(0.4, -0.7);
        let step = TiltedStep::new(&m, u);
        let StepLaw::Atoms { cdf, points } = &step.law else { panic!() };
        let mut prev = 0.0;
        let mut mean = Vec2::zeros();
        for (c, p) in cdf.iter().zip(points) {
            mean += (c - prev) * p;
            prev = *c;
        }
        assert!((mean - m.cumulant_gradient(u)).norm() < 1e-14);
    }
}
