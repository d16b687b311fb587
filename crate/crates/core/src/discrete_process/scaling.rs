use crate::error::{invalid, Result};
use crate::mechanism::DiscreteMechanism;
use crate::numerics::RandomStream;

use super::chain::run;

/// Binary mechanism with `ρ_n = γ n²/2 + λ n`, `d_n = γ n²/2 + δ n`,
/// `c_n = c`, observed as `Z^(n)(t) = N(t/n) / n`.
///
/// With these rates the drift and variance of `N/n` are both `n` times those
/// of `dZ = (λ - δ) Z dt - c Z² dt + sqrt(γ Z) dB`, so the clock runs `n`
/// times slower to match.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledFamily {
    pub n: u32,
    pub mechanism: DiscreteMechanism,
}

impl ScaledFamily {
    pub fn new(n: u32, lambda: f64, delta: f64, gamma: f64, c: f64) -> Result<Self> {
        if n == 0 || !(lambda > 0.0 && delta > 0.0 && gamma > 0.0 && c > 0.0) {
            return Err(invalid("scaled family needs n ≥ 1 and positive λ, δ, γ, c"));
        }
        let nf = n as f64;
        let mechanism = DiscreteMechanism::binary(
            gamma / 2.0 * nf * nf + lambda * nf,
            gamma / 2.0 * nf * nf + delta * nf,
            c,
        )?;
        Ok(Self { n, mechanism })
    }

    /// Mass of one individual.
    pub fn state_scale(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Chain time elapsed per unit of `Z^(n)` time.
    pub fn time_scale(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Rate of `+1/n` moves at rescaled state `z` in chain time.
    pub fn upward_rate(&self, z: f64) -> f64 {
        self.mechanism.rho() * self.n as f64 * z
    }

    /// Rate of `-1/n` moves at rescaled state `z` in chain time.
    pub fn downward_rate(&self, z: f64) -> f64 {
        let i = self.n as f64 * z;
        self.mechanism.d() * i + self.mechanism.c() * i * (i - 1.0)
    }

    /// One draw of `Z^(n)_t` from `Z^(n)_0 = z0` (rounded to the lattice).
    pub fn sample(&self, z0: f64, t: f64, stream: &RandomStream) -> f64 {
        let x0 = (z0 * self.n as f64).round() as u64;
        let mut rng = stream.rng();
        let end = run(
            &self.mechanism,
            x0,
            0,
            t * self.time_scale(),
            f64::INFINITY,
            &mut rng,
            |_, _| {},
        );
        end.z as f64 * self.state_scale()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_n_is_plain_binary() {
        let f = ScaledFamily::new(1, 1.0, 0.5, 1.0, 1.0).unwrap();
        assert_eq!(
            f.mechanism,
            DiscreteMechanism::binary(1.5, 1.0, 1.0).unwrap()
        );
    }

    #[test]
    fn rule_check() {
        let (n, lambda, gamma) = (30u32, 1.0, 1.0);
        let f = ScaledFamily::new(n, lambda, 0.5, gamma, 1.0).unwrap();
        let nf = n as f64;
        for z in [0.1, 1.0, 2.5] {
            let want = (gamma * nf / 2.0 + lambda) * nf * nf * z;
            assert!((f.upward_rate(z) - want).abs() < 1e-9 * want);
        }
    }

    // Drift and variance of Z^(n) per unit rescaled time approach those of the
    // limiting diffusion.
    #[test]
    fn generator_moments() {
        let (lambda, delta, gamma, c) = (1.0, 0.5, 1.0, 1.0);
        let z = 0.8;
        for n in [10u32, 100, 1000] {
            let f = ScaledFamily::new(n, lambda, delta, gamma, c).unwrap();
            let (up, down) = (f.upward_rate(z), f.downward_rate(z));
            let h = f.state_scale();
            let drift = (up - down) * h * f.time_scale();
            let var = (up + down) * h * h * f.time_scale();
            let want_drift = (lambda - delta) * z - c * z * z;
            assert!(
                (drift - want_drift).abs() < 1.5 / n as f64,
                "{drift} {want_drift}"
            );
            assert!((var - gamma * z).abs() < 3.0 / n as f64, "{var}");
        }
    }
}
