//! Shared numerical kernels.
//!
//! Every closed form and every simulation in the crate goes through the
//! kernels here: adaptive Gauss–Kronrod quadrature with endpoint
//! substitutions, an embedded Runge–Kutta integrator with dense output,
//! bracketed root finding, power-series exponentiation, a couple of special
//! functions and the splittable random streams used by the Monte Carlo code.
//!
//! All kernels are pure functions of their arguments; the only state is what
//! the caller passes in explicitly (a [`RandomStream`] for instance).

mod ode;
mod quad;
mod rng;
mod root;
mod series;
mod special;

use thiserror::Error;

pub use ode::{DenseSolution, OdeSolver};
pub use quad::{adaptive_quad, Endpoint, QuadResult, Quadrature};
pub use rng::{RandomStream, StreamRng};
pub use root::{find_root_bracketed, RootResult, RootSolver};
pub use series::power_series_exp;
pub use special::{ein, expint_e1, log1p_exp};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum NumericsError {
    #[error(
        "quadrature did not converge: value {value:e}, error estimate {error_estimate:e} \
         after {evaluations} evaluations"
    )]
    QuadratureNonConvergence {
        value: f64,
        error_estimate: f64,
        evaluations: usize,
    },

    #[error("integrand is not finite at x = {x:e}")]
    NonFiniteIntegrand { x: f64 },

    #[error("ode step size underflow at t = {t:e} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("ode guard permanently violated at t = {t:e}")]
    GuardViolated { t: f64 },

    #[error("ode exceeded {max_steps} steps at t = {t:e}")]
    TooManySteps { t: f64, max_steps: usize },

    #[error("no sign change on [{lo:e}, {hi:e}]: g(lo) = {g_lo:e}, g(hi) = {g_hi:e}")]
    NoSignChange {
        lo: f64,
        hi: f64,
        g_lo: f64,
        g_hi: f64,
    },

    #[error("root finder did not converge within {iterations} iterations")]
    RootNonConvergence { iterations: usize },
}
