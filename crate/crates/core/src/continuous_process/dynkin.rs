use serde::Serialize;

use super::lamperti::simulate_lamperti;
use crate::error::{domain, Result};
use crate::mechanism::ContinuousMechanism;
use crate::numerics::RandomStream;
use crate::stats::mean_and_stderr;
use crate::trajectory::replicate;

/// Monte Carlo estimate of
/// `E_x e^{-λZ_t} - e^{-λx} - E_x ∫_0^t (ψ(λ) Z_u + cλ Z_u²) e^{-λZ_u} du`,
/// which vanishes for the generator of the process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DynkinCheck {
    pub estimate: f64,
    pub std_error: f64,
    pub replicas: usize,
}

impl DynkinCheck {
    pub fn residual(&self) -> f64 {
        self.estimate.abs()
    }

    /// Residual measured in standard errors.
    pub fn z_score(&self) -> f64 {
        if self.std_error > 0.0 {
            self.residual() / self.std_error
        } else if self.residual() == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Generator check on exponential test functions along Lamperti-route paths.
pub fn dynkin_exponential_check(
    mech: &ContinuousMechanism,
    x0: f64,
    lambda: f64,
    t: f64,
    dt: f64,
    replicas: usize,
    stream: &RandomStream,
) -> Result<DynkinCheck> {
    if !(lambda >= 0.0 && t >= 0.0) {
        return Err(domain(format!(
            "need lambda >= 0 and t >= 0, got {lambda}, {t}"
        )));
    }
    if t == 0.0 || lambda == 0.0 {
        return Ok(DynkinCheck {
            estimate: 0.0,
            std_error: 0.0,
            replicas,
        });
    }
    let psi = mech.psi(lambda)?;
    let c = mech.c();
    let integrand = |z: f64| (psi * z + c * lambda * z * z) * (-lambda * z).exp();
    let samples = replicate(replicas, |i| -> Result<f64> {
        let path = simulate_lamperti(mech, x0, t, dt, &stream.split(i))?;
        let mut integral = 0.0;
        for w in path.records.windows(2) {
            integral += 0.5 * (w[1].0 - w[0].0) * (integrand(w[0].1) + integrand(w[1].1));
        }
        Ok((-lambda * path.state_at(t)).exp() - (-lambda * x0).exp() - integral)
    });
    let samples = samples.into_iter().collect::<Result<Vec<_>>>()?;
    let (estimate, std_error) = mean_and_stderr(samples);
    Ok(DynkinCheck {
        estimate,
        std_error,
        replicas,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_cases_vanish() {
        let mech = ContinuousMechanism::feller(1.0, 1.0, 1.0).unwrap();
        let s = RandomStream::new(1);
        assert_eq!(
            dynkin_exponential_check(&mech, 1.0, 1.0, 0.0, 1e-3, 10, &s)
                .unwrap()
                .residual(),
            0.0
        );
        assert_eq!(
            dynkin_exponential_check(&mech, 1.0, 0.0, 0.5, 1e-3, 10, &s)
                .unwrap()
                .residual(),
            0.0
        );
    }

    #[test]
    fn deterministic_flow_has_no_residual() {
        let mech = ContinuousMechanism::feller(0.5, 1e-12, 1.0).unwrap();
        let r =
            dynkin_exponential_check(&mech, 1.0, 1.0, 0.5, 1e-4, 4, &RandomStream::new(1)).unwrap();
        assert!(r.residual() < 1e-6, "{}", r.residual());
    }
}
