//! Large-deviation rate of the convex-hull area of planar random walks.
//!
//! The pipeline goes from an increment law (its cumulant generating function
//! `K`) to the rate function `I = K*`, the level sets of `K`, and finally the
//! optimal trajectories whose hull area equals a prescribed `a`:
//!
//! - [`increments`]: increment laws, `K`, `∇K`, `Hess K`, support geometry.
//! - [`legendre`]: the rate function `I`, its gradient, and curve energies.
//! - [`polyline`]: convexification of polygonal lines and area functionals.
//! - [`levelset`]: tracing `K⁻¹(α)`, sub-level areas, arc masses, arc
//!   parametrizations.
//! - [`solver`]: the optimal curves, `𝒥_A(a)`, Euler–Lagrange residuals.
//! - [`oracle`]: a brute-force discretized variational minimizer.
//! - [`montecarlo`]: naive and exponentially tilted walk simulation.
//! - [`cli`]: the `ldp-hull` command-line front end.
//!
//! ```
//! use ldp_hull::{solver, IncrementModel, RateOptions, Vec2};
//!
//! let model = IncrementModel::standard_gaussian(Vec2::new(1.0, 0.0));
//! let res = solver::rate_of_area(&model, 1.0, &RateOptions::default())?;
//! for c in res.candidates.iter().filter(|c| c.minimal) {
//!     println!("{} {:?}", c.energy, c.trajectory.end_point());
//! }
//! # Ok::<(), ldp_hull::Error>(())
//! ```

pub mod cli;
pub mod error;
pub mod hull;
pub mod increments;
pub mod io;
pub mod legendre;
pub mod levelset;
pub mod montecarlo;
pub mod oracle;
pub mod polyline;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};
pub use increments::{IncrementModel, Model1D, ModelKind, SupportClass};
pub use legendre::Trajectory;
pub use levelset::{LevelArc, Region, Tau};
pub use oracle::DiscreteCurve;
pub use polyline::{Orientation, PolygonalLine};
pub use solver::{Candidate, CandidateKind, RateOptions, RateResult};

/// Planar vector.
pub type Vec2 = nalgebra::Vector2<f64>;
/// 2×2 matrix.
pub type Mat2 = nalgebra::Matrix2<f64>;

/// Counterclockwise rotation through π/2.
#[inline]
pub fn perp(v: Vec2) -> Vec2 {
    Vec2::new(-v.y, v.x)
}

/// Scalar cross product `a × b = a₁b₂ − a₂b₁`.
#[inline]
pub fn cross(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Unit vector at angle `theta`.
#[inline]
pub fn unit(theta: f64) -> Vec2 {
    Vec2::new(theta.cos(), theta.sin())
}

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    if sum.is_finite() {
        sum + comp
    } else {
        sum
    }
}
