use super::ou::{OuPath, OuSimulator};
use crate::discrete_process::logistic_ode;
use crate::error::{domain, Error, Result};
use crate::mechanism::ContinuousMechanism;
use crate::numerics::RandomStream;
use crate::trajectory::Trajectory;

/// Output times: `k dt` for `k < n` and then `t_end`, or an explicit list.
enum Times {
    Uniform { dt: f64, n: usize, t_end: f64 },
    List(Vec<f64>),
}

impl Times {
    fn uniform(t_end: f64, dt: f64) -> Self {
        let n = ((t_end / dt) - 1e-9).ceil().max(0.0) as usize;
        Times::Uniform { dt, n, t_end }
    }

    fn get(&self, k: usize) -> Option<f64> {
        match self {
            Times::Uniform { dt, n, t_end } => match k.cmp(n) {
                std::cmp::Ordering::Less => Some(k as f64 * dt),
                std::cmp::Ordering::Equal => Some(*t_end),
                std::cmp::Ordering::Greater => None,
            },
            Times::List(v) => v.get(k).copied(),
        }
    }

    fn len(&self) -> usize {
        match self {
            Times::Uniform { n, .. } => n + 1,
            Times::List(v) => v.len(),
        }
    }

    fn last(&self) -> f64 {
        self.get(self.len() - 1).expect("at least one output time")
    }

    fn min_spacing(&self) -> f64 {
        match self {
            Times::Uniform { dt, t_end, .. } => dt.min(t_end.max(f64::MIN_POSITIVE)),
            Times::List(v) => v
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(v.last().unwrap().max(f64::MIN_POSITIVE), f64::min),
        }
    }
}

/// Builds `Z = R ∘ C` segment by segment, where `C` inverts
/// `η_s = ∫_0^s du / R_u`, and records `Z` at the output times plus both
/// sides of every jump.
struct Forward {
    gamma: f64,
    drift: f64,
    c: f64,
    times: Times,
    // Smallest output spacing, the scale for the coarse-grid check.
    resolution: f64,
    t_end: f64,
    eta: f64,
    next: usize,
    traj: Trajectory,
    done: bool,
}

impl Forward {
    fn new(path: &OuPath, times: Times) -> Self {
        let t_end = times.last();
        let resolution = times.min_spacing();
        Self {
            gamma: path.gamma,
            drift: path.drift,
            c: path.c,
            times,
            resolution,
            t_end,
            eta: 0.0,
            next: 0,
            traj: Trajectory {
                records: Vec::new(),
                absorbed_at: None,
                cap_hit: false,
            },
            done: false,
        }
    }

    // Emits every pending output time below `eta + width` using `state(offset)`.
    fn emit(&mut self, width: f64, state: impl Fn(f64) -> f64) {
        while let Some(t) = self.times.get(self.next) {
            if t >= self.eta + width {
                break;
            }
            self.traj.records.push((t, state(t - self.eta)));
            self.next += 1;
        }
        if self.next == self.times.len() {
            self.done = true;
        }
    }

    fn segment(&mut self, (sa, ra): (f64, f64), (sb, rb): (f64, f64)) {
        let h = sb - sa;
        if self.gamma > 0.0 {
            let width = 0.5 * h * (1.0 / ra + 1.0 / rb);
            self.emit(width, |off| ra + (rb - ra) * off / width);
            self.eta += width;
        } else {
            let width = self.eta_exact(ra, h);
            let flow = self.flow();
            self.emit(width, |off| flow(ra, off));
            self.eta += width;
        }
    }

    fn jump(&mut self, before: f64, after: f64) {
        if self.done {
            return;
        }
        if self.eta <= self.t_end {
            self.traj.records.push((self.eta, before));
            self.traj.records.push((self.eta, after));
        }
    }

    // The last segment, from (sa, ra) to the zero of R at s0.
    fn terminal(&mut self, (sa, ra): (f64, f64), s0: f64) {
        if self.gamma > 0.0 {
            // Near a zero of a diffusive path R ~ ra √((s0 - s)/Δ), which gives
            // η-width 2Δ/ra and R linear in η.
            let width = 2.0 * (s0 - sa) / ra;
            self.emit(width, |off| ra * (1.0 - off / width));
            self.eta += width;
            if !self.done {
                self.traj.records.push((self.eta, 0.0));
                self.traj.absorbed_at = Some(self.eta);
                self.done = true;
            }
        } else {
            // η diverges at the zero: Z follows the deterministic flow forever.
            let flow = self.flow();
            self.emit(f64::INFINITY, |off| flow(ra, off));
        }
    }

    // ∫_0^h ds / R_s for R_s = B + (r - B) e^{-cs}, B = b/c.
    fn eta_exact(&self, r: f64, h: f64) -> f64 {
        let big_b = self.drift / self.c;
        let x = (self.c * h).exp_m1();
        if big_b == 0.0 {
            return x / (self.c * r);
        }
        (big_b * x / r).ln_1p() / (self.c * big_b)
    }

    // Between jumps with γ = 0, Z solves z' = bz - cz² in its own clock.
    fn flow(&self) -> impl Fn(f64, f64) -> f64 {
        let (b, c) = (self.drift, self.c);
        move |r, width| logistic_ode(b, c, r, width)
    }

    // Consumes path points `from..` (point `from - 1` already processed).
    fn feed(&mut self, path: &OuPath, from: usize) -> Result<()> {
        let pts = &path.points;
        for i in from.max(1)..pts.len() {
            if self.done {
                break;
            }
            let (a, b) = (pts[i - 1], pts[i]);
            if b.0 == a.0 {
                self.jump(a.1, b.1);
            } else if path.t0.is_some() && i + 1 == pts.len() {
                if self.gamma > 0.0
                    && (b.0 - a.0) * self.gamma > a.1 * a.1
                    && 2.0 * (b.0 - a.0) / a.1 > 0.1 * self.resolution
                {
                    return Err(Error::InvalidParameters(format!(
                        "grid too coarse near the zero of R: step {} at R = {}",
                        b.0 - a.0,
                        a.1
                    )));
                }
                self.terminal(a, b.0);
            } else {
                self.segment(a, b);
            }
        }
        Ok(())
    }
}

/// Lamperti time change of a recorded OU-type path, sampled on
/// `[0, t_end]` at spacing `dt_out`.
///
/// `Z` is absorbed when `η` reaches the zero of `R` in finite time. When the
/// path ends before `η` reaches `t_end` the result is truncated and flagged
/// with `cap_hit`.
pub fn lamperti_forward(path: &OuPath, t_end: f64, dt_out: f64) -> Result<Trajectory> {
    check_path(path, t_end, dt_out)?;
    let mut fw = Forward::new(path, Times::uniform(t_end, dt_out));
    fw.feed(path, 1)?;
    if !fw.done && path.t0.is_none() {
        // Include the final recorded state.
        let last = *path.points.last().unwrap();
        if fw.traj.records.last().is_none_or(|r| r.0 < fw.eta) {
            fw.traj.records.push((fw.eta, last.1));
        }
        fw.traj.cap_hit = true;
    }
    Ok(fw.traj)
}

fn check_path(path: &OuPath, t_end: f64, dt_out: f64) -> Result<()> {
    if !(path.points.first().is_some_and(|p| p.1 > 0.0)) {
        return Err(domain("the OU path must start at a positive state"));
    }
    if !(t_end >= 0.0 && dt_out > 0.0) {
        return Err(domain(format!(
            "invalid output grid: t_end {t_end}, dt {dt_out}"
        )));
    }
    Ok(())
}

/// Inverse time change: `C_t = ∫_0^t Z_u du` and `R(C_t) = Z_t`, returned as
/// `(C_t, Z_t)` pairs (trapezoid rule on the records).
pub fn lamperti_inverse(traj: &Trajectory) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(traj.records.len());
    let mut clock = 0.0;
    let mut prev = traj.records[0];
    out.push((0.0, prev.1));
    for &(t, z) in &traj.records[1..] {
        clock += 0.5 * (t - prev.0) * (z + prev.1);
        out.push((clock, z));
        prev = (t, z);
    }
    out
}

/// Continuous-state process by the Lamperti route on `[0, t_end]`, recorded
/// every `dt` (the OU step) and at jumps.
pub fn simulate_lamperti(
    mech: &ContinuousMechanism,
    x0: f64,
    t_end: f64,
    dt: f64,
    stream: &RandomStream,
) -> Result<Trajectory> {
    if !(t_end >= 0.0 && dt > 0.0) {
        return Err(domain(format!(
            "invalid output grid: t_end {t_end}, dt {dt}"
        )));
    }
    Ok(run_lamperti(mech, x0, Times::uniform(t_end, dt), dt, stream)?.0)
}

/// As [`simulate_lamperti`], also returning the underlying OU path.
pub fn simulate_lamperti_with_path(
    mech: &ContinuousMechanism,
    x0: f64,
    t_end: f64,
    dt: f64,
    stream: &RandomStream,
) -> Result<(Trajectory, OuPath)> {
    if !(t_end >= 0.0 && dt > 0.0) {
        return Err(domain(format!(
            "invalid output grid: t_end {t_end}, dt {dt}"
        )));
    }
    run_lamperti(mech, x0, Times::uniform(t_end, dt), dt, stream)
}

/// Lamperti route recorded only at the increasing output `times` (and at
/// jumps), with OU step `dt`.
///
/// The OU path is extended in chunks until the time change covers the last
/// output time or `R` hits 0.
pub fn simulate_lamperti_at(
    mech: &ContinuousMechanism,
    x0: f64,
    times: Vec<f64>,
    dt: f64,
    stream: &RandomStream,
) -> Result<Trajectory> {
    if times.is_empty() || times[0] < 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(domain(
            "output times must be nonnegative and strictly increasing",
        ));
    }
    Ok(run_lamperti(mech, x0, Times::List(times), dt, stream)?.0)
}

fn run_lamperti(
    mech: &ContinuousMechanism,
    x0: f64,
    times: Times,
    dt: f64,
    stream: &RandomStream,
) -> Result<(Trajectory, OuPath)> {
    if !(x0 > 0.0 && x0.is_finite()) {
        return Err(domain(format!("initial state {x0} must be positive")));
    }
    let t_end = times.last();
    let mut sim = OuSimulator::new(mech.levy(), mech.c(), x0, dt, stream);
    let mut fw = Forward::new(sim.path(), times);
    let mut fed = 1;
    // The OU clock runs at rate Z; start small since Z may decay fast.
    let mut horizon = (x0 * t_end).min(1.0).max(dt);
    loop {
        while sim.time() < horizon && sim.step(horizon) {}
        let path = sim.path();
        fw.feed(path, fed)?;
        fed = path.points.len();
        if fw.done || sim.hit_zero() {
            break;
        }
        horizon = sim.time() + (0.25 * sim.time()).max(100.0 * dt);
    }
    Ok((fw.traj, sim.into_path()))
}

/// `Z_t` by the Lamperti route (`0` once absorbed).
pub fn lamperti_marginal(
    mech: &ContinuousMechanism,
    x0: f64,
    t: f64,
    dt: f64,
    stream: &RandomStream,
) -> Result<f64> {
    Ok(simulate_lamperti_at(mech, x0, vec![t], dt, stream)?.state_at(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continuous_process::ou::simulate_ou;
    use crate::mechanism::LevyMechanism;

    fn constant_path(a: f64, n: usize) -> OuPath {
        OuPath {
            points: (0..=n).map(|i| (i as f64 * 0.1, a)).collect(),
            jumps: vec![],
            t0: None,
            drift: 0.0,
            gamma: 1.0,
            c: 1.0,
        }
    }

    #[test]
    fn constant_path_runs_at_rate_one_over_a() {
        let a = 2.5;
        let z = lamperti_forward(&constant_path(a, 100), 3.0, 0.01).unwrap();
        assert!(z.records.iter().all(|r| (r.1 - a).abs() < 1e-12));
        assert!((z.last().0 - 3.0).abs() < 1e-12);
        assert!(!z.cap_hit);
        let r = lamperti_inverse(&z);
        assert!((r.last().unwrap().0 - a * 3.0).abs() < 1e-9);
        let short = lamperti_forward(&constant_path(a, 10), 3.0, 0.01).unwrap();
        assert!(short.cap_hit);
        assert!((short.last().0 - 1.0 / a).abs() < 1e-12);
    }

    #[test]
    fn deterministic_flow_is_the_logistic_ode() {
        for b in [-0.7, 0.0, 1.3] {
            let mech =
                ContinuousMechanism::new(LevyMechanism::brownian(b, 0.0).unwrap(), 0.8).unwrap();
            let z = simulate_lamperti(&mech, 1.5, 6.0, 0.01, &RandomStream::new(1)).unwrap();
            assert!(z.absorbed_at.is_none());
            for &(t, v) in &z.records {
                let exact = logistic_ode(b, 0.8, 1.5, t);
                assert!(
                    (v - exact).abs() < 1e-9 * (1.0 + exact),
                    "b={b} t={t}: {v} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn round_trip_recovers_r() {
        let levy = LevyMechanism::from_drift(0.5, 1.0, vec![(0.7, 1.0)], None).unwrap();
        let path = simulate_ou(&levy, 1.0, 2.0, 1.0, 1e-3, &RandomStream::new(4));
        let z = lamperti_forward(&path, 50.0, 1e-4).unwrap();
        let back = lamperti_inverse(&z);
        let interp = |s: f64| {
            let i = path
                .points
                .partition_point(|p| p.0 <= s)
                .clamp(1, path.points.len() - 1);
            let (a, b) = (path.points[i - 1], path.points[i]);
            if b.0 == a.0 {
                b.1
            } else {
                a.1 + (b.1 - a.1) * (s - a.0) / (b.0 - a.0)
            }
        };
        for &(s, r) in back.iter().step_by(97) {
            if s < path.points.last().unwrap().0 - 1e-3 && r > 0.05 {
                assert!((interp(s) - r).abs() < 0.03, "s={s}: {} vs {r}", interp(s));
            }
        }
    }

    #[test]
    fn diffusive_paths_get_absorbed() {
        let mech = ContinuousMechanism::feller(-1.0, 1.0, 1.0).unwrap();
        let z = simulate_lamperti(&mech, 0.5, 200.0, 1e-3, &RandomStream::new(9)).unwrap();
        let ta = z.absorbed_at.expect("absorbed");
        assert_eq!(z.last(), (ta, 0.0));
        assert!(z.records.iter().all(|r| r.1 >= 0.0));
        assert!(z.records.windows(2).all(|w| w[0].0 <= w[1].0));
    }

    #[test]
    fn pure_drift_killing_never_absorbs() {
        let levy = LevyMechanism::from_drift(-2.0, 0.0, vec![(1.0, 0.5)], None).unwrap();
        let mech = ContinuousMechanism::new(levy, 1.0).unwrap();
        for i in 0..20 {
            let z =
                simulate_lamperti(&mech, 1.0, 30.0, 1e-2, &RandomStream::new(2).split(i)).unwrap();
            assert!(z.absorbed_at.is_none());
            assert!(z.records.iter().all(|r| r.1 > 0.0));
            assert!((z.last().0 - 30.0).abs() < 1e-9);
        }
    }
}
