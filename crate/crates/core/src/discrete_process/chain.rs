use std::io::Write;

use rand::Rng;
use rand_distr::Exp1;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{invalid, regime, Result};
use crate::mechanism::DiscreteMechanism;
use crate::numerics::{RandomStream, StreamRng};
use crate::trajectory::{replicate, Trajectory};

/// Outgoing transitions `(j, q_ij)` from state `i`; empty at the absorbing state 0.
pub fn rates(mech: &DiscreteMechanism, i: u64) -> Vec<(u64, f64)> {
    if i == 0 {
        return Vec::new();
    }
    let fi = i as f64;
    let mut out: Vec<(u64, f64)> = mech
        .pi()
        .iter()
        .filter(|(_, &p)| p > 0.0)
        .map(|(&k, &p)| (i + k as u64, fi * p))
        .collect();
    let death = mech.d() * fi + mech.c() * fi * (fi - 1.0);
    if death > 0.0 {
        out.push((i - 1, death));
    }
    out
}

/// Precomputed litter-size sampler.
struct Births {
    sizes: Vec<u64>,
    cumulative: Vec<f64>,
}

impl Births {
    fn new(mech: &DiscreteMechanism) -> Self {
        let mut acc = 0.0;
        let (sizes, cumulative) = mech
            .pi()
            .iter()
            .filter(|(_, &p)| p > 0.0)
            .map(|(&k, &p)| {
                acc += p;
                (k as u64, acc)
            })
            .unzip();
        Self { sizes, cumulative }
    }

    fn pick(&self, u: f64) -> u64 {
        let i = self.cumulative.partition_point(|&c| c <= u);
        self.sizes[i.min(self.sizes.len() - 1)]
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct RunEnd {
    pub t: f64,
    pub z: u64,
    pub absorbed: bool,
    pub cap_hit: bool,
}

/// Gillespie loop from `x0` until the state drops to `floor` (absorption
/// when `floor = 0`), time `t_max` or a state above `z_cap`;
/// `on_jump(t, z)` sees every new state.
pub(crate) fn run(
    mech: &DiscreteMechanism,
    x0: u64,
    floor: u64,
    t_max: f64,
    z_cap: f64,
    rng: &mut StreamRng,
    mut on_jump: impl FnMut(f64, u64),
) -> RunEnd {
    let births = Births::new(mech);
    let (d, c, rho) = (mech.d(), mech.c(), mech.rho());
    let mut t = 0.0;
    let mut z = x0;
    loop {
        if z <= floor {
            return RunEnd {
                t,
                z,
                absorbed: true,
                cap_hit: false,
            };
        }
        let fz = z as f64;
        let birth = fz * rho;
        let total = birth + fz * (d + c * (fz - 1.0));
        if total <= 0.0 {
            return RunEnd {
                t: t_max,
                z,
                absorbed: false,
                cap_hit: true,
            };
        }
        let hold: f64 = rng.sample::<f64, _>(Exp1) / total;
        if t + hold > t_max {
            return RunEnd {
                t: t_max,
                z,
                absorbed: false,
                cap_hit: true,
            };
        }
        t += hold;
        let u = rng.random::<f64>() * total;
        if u < birth {
            z += births.pick(u / fz);
        } else {
            z -= 1;
        }
        on_jump(t, z);
        if z as f64 > z_cap {
            return RunEnd {
                t,
                z,
                absorbed: false,
                cap_hit: true,
            };
        }
    }
}

/// One exact sample path from `x0`, recorded at every jump.
pub fn simulate(
    mech: &DiscreteMechanism,
    x0: u64,
    cfg: &RunConfig,
    stream: &RandomStream,
) -> Trajectory {
    let mut traj = Trajectory::start(x0 as f64);
    let mut rng = stream.rng();
    let end = run(mech, x0, 0, cfg.t_max, cfg.z_cap, &mut rng, |t, z| {
        traj.records.push((t, z as f64))
    });
    if end.absorbed {
        traj.absorbed_at = Some(end.t);
    }
    traj.cap_hit = end.cap_hit;
    traj
}

/// Time-weighted occupation frequencies over `[burn_in, t_max]`, pooled over
/// `cfg.replicas` independent runs; entry `i` is the fraction of time in state `i`.
pub fn occupation_distribution(
    mech: &DiscreteMechanism,
    x0: u64,
    cfg: &RunConfig,
    stream: &RandomStream,
) -> Result<Vec<f64>> {
    if mech.d() != 0.0 {
        return Err(regime(
            "occupation measures converge to a stationary law only when d = 0 (the process is then positive recurrent)",
        ));
    }
    if x0 == 0 {
        return Err(invalid("state 0 is absorbing; start from x0 ≥ 1"));
    }
    let per_replica = replicate(cfg.replicas, |r| {
        let mut rng = stream.split(r).rng();
        let mut occ: Vec<f64> = Vec::new();
        let mut add = |z: u64, a: f64, b: f64| {
            let (a, b) = (a.max(cfg.burn_in), b.min(cfg.t_max));
            if b > a {
                let z = z as usize;
                if occ.len() <= z {
                    occ.resize(z + 1, 0.0);
                }
                occ[z] += b - a;
            }
        };
        let (mut last_t, mut last_z) = (0.0, x0);
        let end = run(mech, x0, 0, cfg.t_max, cfg.z_cap, &mut rng, |t, z| {
            add(last_z, last_t, t);
            last_t = t;
            last_z = z;
        });
        add(last_z, last_t, end.t.max(last_t));
        occ
    });
    let mut total: Vec<f64> = Vec::new();
    for occ in per_replica {
        if total.len() < occ.len() {
            total.resize(occ.len(), 0.0);
        }
        for (a, b) in total.iter_mut().zip(occ) {
            *a += b;
        }
    }
    let mass: f64 = total.iter().sum();
    Ok(total.into_iter().map(|v| v / mass).collect())
}

/// Absorption times of independent replicas; runs reaching `t_max` are censored.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtinctionSamples {
    pub times: Vec<f64>,
    pub censored: Vec<bool>,
}

impl ExtinctionSamples {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn censored_count(&self) -> usize {
        self.censored.iter().filter(|&&c| c).count()
    }

    pub fn censored_fraction(&self) -> f64 {
        self.censored_count() as f64 / self.len() as f64
    }

    /// Mean and standard error of `f(T_a)` over the uncensored samples.
    pub fn mean_of(&self, f: impl Fn(f64) -> f64) -> (f64, f64) {
        crate::stats::mean_and_stderr(
            self.times
                .iter()
                .zip(&self.censored)
                .filter(|(_, &c)| !c)
                .map(|(&t, _)| f(t)),
        )
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "replica,T_a,censored")?;
        for (i, (t, c)) in self.times.iter().zip(&self.censored).enumerate() {
            writeln!(out, "{i},{t},{c}")?;
        }
        Ok(())
    }
}

/// Absorption times from `x0` for `cfg.replicas` replicas.
pub fn extinction_samples(
    mech: &DiscreteMechanism,
    x0: u64,
    cfg: &RunConfig,
    stream: &RandomStream,
) -> Result<ExtinctionSamples> {
    if mech.d() == 0.0 {
        return Err(regime(
            "with d = 0 a single individual never dies, so the process is never absorbed",
        ));
    }
    let runs = replicate(cfg.replicas, |r| {
        let mut rng = stream.split(r).rng();
        let end = run(mech, x0, 0, cfg.t_max, cfg.z_cap, &mut rng, |_, _| {});
        (end.t, !end.absorbed)
    });
    let (times, censored) = runs.into_iter().unzip();
    Ok(ExtinctionSamples { times, censored })
}

/// First time the chain started at `from` reaches `to < from`, or `None` if
/// that takes longer than `t_max`. Deaths remove one individual at a time,
/// so the chain passes through every intermediate state on the way down.
pub fn descent_time(
    mech: &DiscreteMechanism,
    from: u64,
    to: u64,
    t_max: f64,
    stream: &RandomStream,
) -> Option<f64> {
    let end = run(
        mech,
        from,
        to,
        t_max,
        f64::INFINITY,
        &mut stream.rng(),
        |_, _| {},
    );
    end.absorbed.then_some(end.t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_table() {
        let m = DiscreteMechanism::binary(1.0, 1.0, 1.0).unwrap();
        assert!(rates(&m, 0).is_empty());
        assert_eq!(rates(&m, 3), vec![(4, 3.0), (2, 9.0)]);
        let m0 = DiscreteMechanism::binary(1.0, 0.0, 1.0).unwrap();
        assert_eq!(rates(&m0, 1), vec![(2, 1.0)]);
    }

    #[test]
    fn start_at_zero_is_absorbed() {
        let m = DiscreteMechanism::binary(1.0, 1.0, 1.0).unwrap();
        let t = simulate(&m, 0, &RunConfig::default(), &RandomStream::new(1));
        assert_eq!(t.records, vec![(0.0, 0.0)]);
        assert_eq!(t.absorbed_at, Some(0.0));
        let s = extinction_samples(
            &m,
            0,
            &RunConfig {
                replicas: 5,
                ..Default::default()
            },
            &RandomStream::new(1),
        )
        .unwrap();
        assert!(s.times.iter().all(|&t| t == 0.0));
    }

    #[test]
    fn reproducible() {
        let m = DiscreteMechanism::new(0.5, 1.0, [(1, 1.0), (3, 0.2)]).unwrap();
        let cfg = RunConfig::default();
        let a = simulate(&m, 10, &cfg, &RandomStream::new(4).split(2));
        let b = simulate(&m, 10, &cfg, &RandomStream::new(4).split(2));
        assert_eq!(a, b);
        assert!(a.records.windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn no_absorption_without_death() {
        let m = DiscreteMechanism::binary(1.0, 0.0, 1.0).unwrap();
        let cfg = RunConfig {
            t_max: 200.0,
            ..Default::default()
        };
        for r in 0..20 {
            let t = simulate(&m, 1, &cfg, &RandomStream::new(2).split(r));
            assert!(t.absorbed_at.is_none());
            assert!(t.records.iter().all(|r| r.1 >= 1.0));
        }
        assert!(extinction_samples(&m, 1, &cfg, &RandomStream::new(1)).is_err());
    }

    #[test]
    fn descent_splits_extinction() {
        let m = DiscreteMechanism::binary(1.0, 1.0, 1.0).unwrap();
        let s = RandomStream::new(3);
        assert_eq!(descent_time(&m, 5, 5, 10.0, &s), Some(0.0));
        let t = descent_time(&m, 50, 10, 100.0, &s).unwrap();
        assert!(t > 0.0);
        assert_eq!(descent_time(&m, 50, 10, t * 0.5, &s), None);
    }
}
