use crate::error::{domain, Result};
use crate::mechanism::DiscreteMechanism;
use crate::riccati::{expected_ta, ExpectedTa};

/// `E_∞(T_a)` for the integer-valued process (requires `d > 0`).
pub fn expected_ta_infinity(mech: &DiscreteMechanism, tol: f64) -> Result<ExpectedTa> {
    expected_ta(&mech.clone().into(), None, tol)
}

/// Probability that the next event from state `i` is a birth.
pub fn birth_before_death_prob(mech: &DiscreteMechanism, i: u64) -> Result<f64> {
    if i == 0 {
        return Err(domain("state 0 has no next event"));
    }
    let fi = i as f64;
    let rho = mech.rho();
    Ok(rho * fi / ((rho + mech.d()) * fi + mech.c() * fi * (fi - 1.0)))
}

/// Solution of `z' = b z - c z²` from `z0`.
pub fn logistic_ode(b: f64, c: f64, z0: f64, t: f64) -> f64 {
    if b == 0.0 {
        return z0 / (1.0 + c * z0 * t);
    }
    let e = (b * t).exp();
    if e.is_infinite() {
        return if z0 > 0.0 { b / c } else { 0.0 };
    }
    b * z0 * e / (b + c * z0 * (e - 1.0))
}
