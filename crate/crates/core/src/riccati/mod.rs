//! The distinguished solution `w_q` of `y' = y² - q r²` and the extinction
//! transforms built from it.
//!
//! Everything is computed in a chart coordinate `x` (see [`chart`]) where
//! `g = e^{m} w` solves `g' = h g² + (ψ/c) g - q/c` with no exponentials.

mod chart;
mod expectation;
mod solve;
mod transforms;

pub use expectation::{expected_ta, ExpectedTa};
pub use solve::{
    solve_wq, Diagnostics, GridPoint, RiccatiOptions, RiccatiSolution, Schedule, ShotRecord,
};

use crate::mechanism::Mechanism;

/// `r(s)` from `r² = |φ'|² / (c φ (1 - φ))` (discrete) or `φ'² / (c φ)` (continuous).
pub fn r_func(mech: &Mechanism, s: f64, tol_phi: f64) -> crate::Result<f64> {
    mech.r_func(s, tol_phi)
}
