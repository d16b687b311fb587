use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{domain, Result};
use crate::numerics::{RandomStream, StreamRng};
use crate::trajectory::Trajectory;

/// Euler–Maruyama scheme for `dZ = (bZ - cZ²) dt + √(γZ) dB`, absorbed at 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FellerLogistic {
    pub b: f64,
    pub c: f64,
    pub gamma: f64,
}

impl FellerLogistic {
    pub fn new(b: f64, c: f64, gamma: f64) -> Result<Self> {
        if !(b.is_finite() && c > 0.0 && c.is_finite() && gamma > 0.0 && gamma.is_finite()) {
            return Err(domain(format!(
                "Feller-logistic parameters need finite b, c > 0 and gamma > 0, got ({b}, {c}, {gamma})"
            )));
        }
        Ok(Self { b, c, gamma })
    }

    // Steps from (0, x0) until t_end or absorption, reporting each accepted
    // state. Returns the final state and the absorption time.
    fn run(
        &self,
        x0: f64,
        t_end: f64,
        dt: f64,
        rng: &mut StreamRng,
        mut on_step: impl FnMut(f64, f64),
    ) -> (f64, Option<f64>) {
        let n = (t_end / dt - 1e-9).ceil().max(0.0) as u64;
        let mut z = x0;
        let mut t = 0.0;
        for k in 1..=n {
            let t_next = if k == n { t_end } else { k as f64 * dt };
            let h = t_next - t;
            let noise: f64 = rng.sample(StandardNormal);
            let z_next = z
                + (self.b * z - self.c * z * z) * h
                + (self.gamma * z.max(0.0) * h).sqrt() * noise;
            if z_next <= 0.0 {
                let hit = t + h * z / (z - z_next);
                on_step(hit, 0.0);
                return (0.0, Some(hit));
            }
            z = z_next;
            t = t_next;
            on_step(t, z);
        }
        (z, None)
    }

    /// Path on `[0, t_end]` recorded at every step.
    pub fn simulate(&self, x0: f64, t_end: f64, dt: f64, stream: &RandomStream) -> Trajectory {
        let mut traj = Trajectory::start(x0);
        let (_, hit) = self.run(x0, t_end, dt, &mut stream.rng(), |t, z| {
            traj.records.push((t, z))
        });
        traj.absorbed_at = hit;
        traj
    }

    /// `Z_t` without storing the path.
    pub fn marginal(&self, x0: f64, t: f64, dt: f64, stream: &RandomStream) -> f64 {
        self.run(x0, t, dt, &mut stream.rng(), |_, _| {}).0
    }

    /// Absorption time, or `None` if the path survives to `t_max`.
    pub fn absorption_time(
        &self,
        x0: f64,
        t_max: f64,
        dt: f64,
        stream: &RandomStream,
    ) -> Option<f64> {
        self.run(x0, t_max, dt, &mut stream.rng(), |_, _| {}).1
    }
}

/// Euler–Maruyama path of the Feller diffusion with logistic growth.
pub fn simulate_feller_logistic(
    b: f64,
    c: f64,
    gamma: f64,
    x0: f64,
    t_end: f64,
    dt: f64,
    stream: &RandomStream,
) -> Result<Trajectory> {
    if !(x0 > 0.0 && x0.is_finite()) {
        return Err(domain(format!("initial state {x0} must be positive")));
    }
    Ok(FellerLogistic::new(b, c, gamma)?.simulate(x0, t_end, dt, stream))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete_process::logistic_ode;

    #[test]
    fn small_noise_tracks_the_ode() {
        let z = simulate_feller_logistic(1.0, 1.0, 1e-8, 0.3, 5.0, 1e-3, &RandomStream::new(5))
            .unwrap();
        let sup = z
            .records
            .iter()
            .map(|&(t, v)| (v - logistic_ode(1.0, 1.0, 0.3, t)).abs())
            .fold(0.0, f64::max);
        assert!(sup < 1e-3, "{sup}");
        assert!((z.last().0 - 5.0).abs() < 1e-12);
    }

    #[test]
    fn absorption_is_final() {
        let f = FellerLogistic::new(-1.0, 1.0, 2.0).unwrap();
        let z = f.simulate(0.2, 100.0, 1e-3, &RandomStream::new(2));
        let ta = z.absorbed_at.unwrap();
        assert_eq!(z.last(), (ta, 0.0));
        assert!(z.records[..z.records.len() - 1].iter().all(|r| r.1 > 0.0));
        assert_eq!(
            f.absorption_time(0.2, 100.0, 1e-3, &RandomStream::new(2)),
            Some(ta)
        );
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(FellerLogistic::new(1.0, 1.0, 0.0).is_err());
        assert!(
            simulate_feller_logistic(1.0, 1.0, 1.0, 0.0, 1.0, 1e-3, &RandomStream::new(1)).is_err()
        );
    }
}
