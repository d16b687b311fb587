use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::Serialize;

use crate::mechanism::LevyMechanism;
use crate::numerics::{RandomStream, StreamRng};

/// Path of `dR = dX - c R dt` sampled on a grid, at jump times and on a
/// refined grid where `R` is small.
///
/// A jump appears as two points with the same time, before and after.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OuPath {
    pub points: Vec<(f64, f64)>,
    pub jumps: Vec<(f64, f64)>,
    /// First passage of `R` to 0.
    pub t0: Option<f64>,
    /// Uncompensated linear drift `b`, Gaussian coefficient `γ` and rate `c`.
    pub drift: f64,
    pub gamma: f64,
    pub c: f64,
}

/// Incremental exact-transition sampler for the OU-type process.
pub struct OuSimulator<'a> {
    levy: &'a LevyMechanism,
    drift: f64,
    gamma: f64,
    c: f64,
    rate: f64,
    dt: f64,
    rng: StreamRng,
    next_jump: f64,
    path: OuPath,
}

// Steps near 0 shrink so that R moves by about this fraction of itself.
const REFINE: f64 = 0.05;
const MIN_STEP_FRACTION: f64 = 1e-10;

impl<'a> OuSimulator<'a> {
    pub fn new(levy: &'a LevyMechanism, c: f64, x0: f64, dt: f64, stream: &RandomStream) -> Self {
        let mut rng = stream.rng();
        let rate = levy.total_rate();
        let next_jump = if rate > 0.0 {
            rng.sample::<f64, _>(Exp1) / rate
        } else {
            f64::INFINITY
        };
        Self {
            levy,
            drift: levy.drift(),
            gamma: levy.gamma(),
            c,
            rate,
            dt,
            rng,
            next_jump,
            path: OuPath {
                points: vec![(0.0, x0)],
                jumps: Vec::new(),
                t0: if x0 <= 0.0 { Some(0.0) } else { None },
                drift: levy.drift(),
                gamma: levy.gamma(),
                c,
            },
        }
    }

    pub fn time(&self) -> f64 {
        self.path.points.last().unwrap().0
    }

    pub fn state(&self) -> f64 {
        self.path.points.last().unwrap().1
    }

    pub fn hit_zero(&self) -> bool {
        self.path.t0.is_some()
    }

    pub fn path(&self) -> &OuPath {
        &self.path
    }

    pub fn into_path(self) -> OuPath {
        self.path
    }

    fn mean_after(&self, r: f64, h: f64) -> f64 {
        let e = (-self.c * h).exp();
        r * e + self.drift / self.c * (-(-self.c * h).exp_m1())
    }

    fn var_after(&self, h: f64) -> f64 {
        self.gamma * (-(-2.0 * self.c * h).exp_m1()) / (2.0 * self.c)
    }

    fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    fn uniform(&mut self) -> f64 {
        self.rng.random()
    }

    // Value at tm given values at ta and tb (Gaussian OU bridge).
    fn bridge(&mut self, ta: f64, ra: f64, tm: f64, tb: f64, rb: f64) -> f64 {
        let mu = self.drift / self.c;
        let (h1, h2) = (tm - ta, tb - tm);
        let (e1, e2) = ((-self.c * h1).exp(), (-self.c * h2).exp());
        let (v1, v2) = (self.var_after(h1), self.var_after(h2));
        let prec = 1.0 / v1 + e2 * e2 / v2;
        let mean = ((ra - mu) * e1 / v1 + (rb - mu) * e2 / v2) / prec + mu;
        mean + self.normal() / prec.sqrt()
    }

    fn crossing_prob(&self, a: f64, b: f64, h: f64) -> f64 {
        if a <= 0.0 || b <= 0.0 {
            1.0
        } else {
            (-2.0 * a * b / (self.gamma * h)).exp()
        }
    }

    // First zero in (ta, tb] given that one occurs there, by bridge bisection.
    fn locate_crossing(&mut self, mut ta: f64, mut ra: f64, mut tb: f64, mut rb: f64) -> f64 {
        for _ in 0..80 {
            if tb - ta <= 1e-13 * tb.max(1.0) {
                break;
            }
            let tm = 0.5 * (ta + tb);
            let rm = self.bridge(ta, ra, tm, tb, rb);
            if rm <= 0.0 {
                tb = tm;
                rb = rm;
                continue;
            }
            let pl = self.crossing_prob(ra, rm, tm - ta);
            let pr = self.crossing_prob(rm, rb, tb - tm);
            if self.uniform() * (pl + (1.0 - pl) * pr) < pl {
                tb = tm;
                rb = rm;
            } else {
                ta = tm;
                ra = rm;
            }
        }
        0.5 * (ta + tb)
    }

    /// Advances by one grid step (or to the next jump, or to `limit`).
    /// Returns `false` once `R` has hit 0.
    pub fn step(&mut self, limit: f64) -> bool {
        if self.hit_zero() {
            return false;
        }
        let (t, r) = (self.time(), self.state());
        let mut h = self.dt;
        if self.gamma > 0.0 {
            h = h.min((REFINE * r * r / self.gamma).max(self.dt * MIN_STEP_FRACTION));
        }
        let t_next = (t + h).min(self.next_jump).min(limit);
        let h = t_next - t;
        if h <= 0.0 {
            return true;
        }
        if self.gamma > 0.0 {
            let r_next = self.mean_after(r, h) + self.var_after(h).sqrt() * self.normal();
            let crossed = r_next <= 0.0 || self.uniform() < self.crossing_prob(r, r_next, h);
            if crossed {
                let t0 = self.locate_crossing(t, r, t_next, r_next);
                self.path.points.push((t0, 0.0));
                self.path.t0 = Some(t0);
                return false;
            }
            self.path.points.push((t_next, r_next));
        } else {
            let b = self.drift / self.c;
            if b < 0.0 {
                // R(s) = b + (r - b) e^{-cs} reaches 0 at s* = ln((r - b)/(-b)) / c.
                let s_star = ((r - b) / -b).ln() / self.c;
                if s_star <= h {
                    self.path.points.push((t + s_star, 0.0));
                    self.path.t0 = Some(t + s_star);
                    return false;
                }
            }
            self.path.points.push((t_next, self.mean_after(r, h)));
        }
        if t_next == self.next_jump {
            let size = self.jump_size();
            let r_after = self.state() + size;
            self.path.points.push((t_next, r_after));
            self.path.jumps.push((t_next, size));
            self.next_jump = t_next + self.rng.sample::<f64, _>(Exp1) / self.rate;
        }
        true
    }

    fn jump_size(&mut self) -> f64 {
        let mut u = self.uniform() * self.rate;
        for &(size, rate) in self.levy.atoms() {
            if u < rate {
                return size;
            }
            u -= rate;
        }
        match self.levy.exp_jumps() {
            Some(e) => e.mean * self.rng.sample::<f64, _>(Exp1),
            None => self.levy.atoms().last().map_or(0.0, |a| a.0),
        }
    }
}

/// Samples `R` on `[0, horizon]`, stopping early at its first zero.
pub fn simulate_ou(
    levy: &LevyMechanism,
    c: f64,
    x0: f64,
    horizon: f64,
    dt: f64,
    stream: &RandomStream,
) -> OuPath {
    let mut sim = OuSimulator::new(levy, c, x0, dt, stream);
    while sim.time() < horizon && sim.step(horizon) {}
    sim.into_path()
}
