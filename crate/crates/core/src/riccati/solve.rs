use serde::Serialize;

use super::chart::Chart;
use crate::error::{Error, Result};
use crate::mechanism::{Mechanism, Setting};
use crate::numerics::{find_root_bracketed, DenseSolution, OdeSolver, Quadrature};

/// Left end of the integration range in chart coordinates (`h ≈ 1.7e-15`).
pub(crate) const X_END: f64 = -34.0;
// Right-end caps: continuous runs stop pushing T once ψ/c exceeds this
// (explicit steps shrink like c/ψ), discrete runs stop near u = 1e-304.
const STIFFNESS_CAP: f64 = 1e6;
const X_CAP_DISCRETE: f64 = 700.0;
const ENVELOPE_SAFETY: f64 = 10.0;
const TAIL_SPAN: f64 = 40.0;
const COMPARISON_POINTS: usize = 401;

/// Sequence of shooting endpoints `T_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Schedule {
    /// Continuous: `λ_T = λ_0 2^k`; discrete: `x_T = x_0 + 2^k - 1`.
    Primary,
    /// Continuous: `λ_T = 1.5 λ_0 3^k`; discrete: `x_T = x_0 + 0.5 + 0.7 (3^k - 1)`.
    Alternate,
}

#[derive(Debug, Clone, Copy)]
pub struct RiccatiOptions {
    /// Change between successive shooting runs that ends the search, as
    /// `sup |Δw| / (1 + |w|)` on the comparison grid.
    pub tol_w: f64,
    pub rtol: f64,
    pub atol: f64,
    pub k_max: usize,
    pub schedule: Schedule,
}

impl Default for RiccatiOptions {
    fn default() -> Self {
        Self {
            tol_w: 1e-8,
            rtol: 1e-11,
            atol: 1e-14,
            k_max: 40,
            schedule: Schedule::Primary,
        }
    }
}

impl RiccatiOptions {
    pub fn with_schedule(mut self, schedule: Schedule) -> Self {
        self.schedule = schedule;
        self
    }
}

/// One shooting run, as recorded in the convergence history.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ShotRecord {
    /// Endpoint `T` as a chart coordinate and as a mechanism argument.
    pub x_t: f64,
    pub p_t: f64,
    /// Sup-norm change of `w` on the comparison grid, relative to `1 + |w|`
    /// (NaN for the first run).
    pub sup_change: f64,
    /// Estimate of `∫_0^ξ w`.
    pub total: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    /// Largest relative residual `|w' - w² + q r²| / (w² + q r²)` at step midpoints.
    pub max_residual: f64,
    pub history: Vec<ShotRecord>,
    pub positive: bool,
    /// `w < sqrt(q) r` on the outermost tenth of the grid at both ends.
    pub endpoint_domination: bool,
    /// `w` decreasing on the outermost tenth of the grid at both ends.
    pub endpoint_decrease: bool,
    pub steps: usize,
}

/// A grid point of the Riccati solution.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GridPoint {
    /// Chart coordinate.
    pub x: f64,
    /// Mechanism argument (`λ` or `u`).
    pub p: f64,
    /// Riccati variable `s = θ(p)`; `+∞` once `θ` overflows.
    pub s: f64,
    pub w: f64,
    /// `W(s) = ∫_0^s w`.
    pub big_w: f64,
}

#[derive(Debug, Clone)]
struct Shot {
    x_t: f64,
    sol: DenseSolution,
    w_at_t: f64,
}

/// The distinguished solution `w_q` of `y' = y² - q r²` on `(0, ξ)` vanishing at `ξ`.
#[derive(Debug, Clone)]
pub struct RiccatiSolution {
    chart: Chart,
    q: f64,
    xi: f64,
    x0: f64,
    shot: Shot,
    g_end: f64,
    // Beyond x_T: boundary-layer correction and cumulative quasi-static tail.
    layer: f64,
    tail: Option<DenseSolution>,
    total: f64,
    grid: Vec<GridPoint>,
    diagnostics: Diagnostics,
}

fn field(chart: &Chart, q: f64) -> impl Fn(f64, &[f64], &mut [f64]) + '_ {
    let c = chart.c();
    move |x, y, dy| {
        let h = chart.h(x);
        let g = y[0];
        dy[0] = h * g * g + chart.psi(x) / c * g - q / c;
        dy[1] = -g * h;
    }
}

fn shoot(chart: &Chart, q: f64, x_t: f64, x0: f64, opts: &RiccatiOptions) -> Result<Shot> {
    let c = chart.c();
    let stiff = (chart.psi(x_t) / c).abs() + 1.0;
    let solver = OdeSolver {
        rtol: opts.rtol,
        atol: opts.atol,
        h_init: Some((0.1 / stiff).min(1e-2)),
        max_steps: 2_000_000,
    };
    let guard = |x: f64, y: &[f64]| {
        let g = y[0];
        if !g.is_finite() || g < -1e-12 {
            return false;
        }
        let in_zone = x <= -10.0 || x >= x0;
        !in_zone || g <= ENVELOPE_SAFETY * (q / (c * chart.h(x))).sqrt()
    };
    let sol = solver
        .solve(field(chart, q), x_t, &[0.0, 0.0], X_END, guard)
        .map_err(|e| Error::Riccati(format!("shooting from x = {x_t}: {e}")))?;
    let end = sol.node(sol.steps());
    let head = chart.h(X_END) * (end[0] + q / c);
    Ok(Shot {
        x_t,
        w_at_t: head + end[1],
        sol,
    })
}

// Quasi-static far-field expansion g ≈ G0 + G1 with G0 = q/ψ.
fn quasi_static(chart: &Chart, q: f64, x: f64) -> f64 {
    let c = chart.c();
    let psi = chart.psi(x);
    let h = chart.h(x);
    let g0 = q / psi;
    let dg0 = -q * chart.psi_prime(x) * chart.sigma() * h / (psi * psi);
    g0 + c / psi * (dg0 - h * g0 * g0)
}

fn endpoint(chart: &Chart, x0: f64, schedule: Schedule, k: usize) -> f64 {
    let k = k as i32;
    match (chart.setting(), schedule) {
        (Setting::Continuous, Schedule::Primary) => x0 + k as f64 * std::f64::consts::LN_2,
        (Setting::Continuous, Schedule::Alternate) => x0 + 1.5f64.ln() + k as f64 * 3f64.ln(),
        (Setting::Discrete, Schedule::Primary) => x0 + 2f64.powi(k) - 1.0,
        (Setting::Discrete, Schedule::Alternate) => x0 + 0.5 + 0.7 * (3f64.powi(k) - 1.0),
    }
}

fn beyond_cap(chart: &Chart, x_t: f64) -> bool {
    match chart.setting() {
        Setting::Continuous => chart.psi(x_t) / chart.c() > STIFFNESS_CAP,
        Setting::Discrete => x_t > X_CAP_DISCRETE,
    }
}

fn comparison_grid(x0: f64) -> Vec<f64> {
    (0..COMPARISON_POINTS)
        .map(|i| X_END + (x0 - X_END) * i as f64 / (COMPARISON_POINTS - 1) as f64)
        .collect()
}

impl RiccatiSolution {
    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn setting(&self) -> Setting {
        self.chart.setting()
    }

    pub fn mechanism(&self) -> Mechanism {
        self.chart.mechanism()
    }

    pub(crate) fn chart(&self) -> &Chart {
        &self.chart
    }

    /// Domain endpoint `ξ` of the Riccati variable.
    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn grid(&self) -> &[GridPoint] {
        &self.grid
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diagnostics
    }

    /// Chart coordinate of the last shooting endpoint.
    pub fn x_t(&self) -> f64 {
        self.shot.x_t
    }

    /// Chart coordinate where the far field (ψ > 0 and growing) starts.
    pub fn x_far(&self) -> f64 {
        self.x0
    }

    /// `e^{m} w` at chart coordinate `x`.
    pub(crate) fn g(&self, x: f64) -> f64 {
        if x < X_END {
            self.g_end + self.q / self.chart.c() * (X_END - x)
        } else if x <= self.shot.x_t {
            self.shot.sol.eval(x, 0).unwrap_or(0.0)
        } else {
            quasi_static(&self.chart, self.q, x)
        }
    }

    /// `w_q` at chart coordinate `x`.
    pub fn w_at_x(&self, x: f64) -> f64 {
        (-self.chart.m(x)).exp() * self.g(x)
    }

    /// `W = ∫_0^{θ(p(x))} w_q` at chart coordinate `x`.
    pub fn big_w_at_x(&self, x: f64) -> f64 {
        if x == f64::NEG_INFINITY {
            return 0.0;
        }
        if x == f64::INFINITY {
            return self.total;
        }
        if x < X_END {
            return self.chart.h(x) * (self.g(x) + self.q / self.chart.c());
        }
        if x <= self.shot.x_t {
            let wt = self.shot.sol.eval(x, 1).unwrap_or(0.0);
            return self.shot.w_at_t - wt;
        }
        let base = self.shot.w_at_t + self.layer;
        let tail = self.tail.as_ref().expect("tail is always computed");
        if x <= tail.t_end() {
            base + tail.eval(x, 0).unwrap_or(0.0)
        } else if self.total.is_finite() {
            self.total
        } else {
            let extra = Quadrature::new(1e-10)
                .integrate(
                    |z| quasi_static(&self.chart, self.q, z) * self.chart.h(z),
                    tail.t_end(),
                    x,
                )
                .map(|r| r.value)
                .unwrap_or(f64::INFINITY);
            base + tail.node(tail.steps())[0] + extra
        }
    }

    /// `∫_0^ξ w_q`; infinite when the process dies out without absorption.
    pub fn total_integral(&self) -> f64 {
        self.total
    }

    /// `W` at mechanism argument `p` (`λ ∈ [0, ∞]` or `u ∈ [0, 1]`).
    pub fn integral_to_arg(&self, p: f64) -> f64 {
        match self.chart.setting() {
            Setting::Continuous if p <= 0.0 => 0.0,
            Setting::Continuous if p == f64::INFINITY => self.total,
            Setting::Discrete if p >= 1.0 => 0.0,
            Setting::Discrete if p <= 0.0 => self.total,
            _ => self.big_w_at_x(self.chart.x_of_p(p)),
        }
    }

    /// `∫_0^upper w_q` for `upper` in the Riccati variable.
    pub fn integral_wq(&self, upper: f64) -> Result<f64> {
        if upper <= 0.0 {
            return Ok(0.0);
        }
        if upper >= self.xi {
            return Ok(self.total);
        }
        let tol = 1e-13;
        let g = |x: f64| {
            self.chart
                .theta(x, tol)
                .map(|t| t - upper)
                .unwrap_or(f64::NAN)
        };
        let mut lo = X_END;
        while g(lo) > 0.0 {
            lo -= 10.0;
        }
        let mut hi = lo + 1.0;
        while g(hi) < 0.0 {
            hi += 1.0;
        }
        let x = find_root_bracketed(g, lo, hi, 1e-14)?;
        Ok(self.big_w_at_x(x))
    }

    /// Writes the grid as CSV `s,w,W` preceded by `# key=value` metadata lines.
    /// Points whose `s` overflowed are omitted.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# q={}", self.q)?;
        writeln!(out, "# xi={}", self.xi)?;
        writeln!(out, "# max_residual={:e}", self.diagnostics.max_residual)?;
        writeln!(out, "# W_xi={}", self.total)?;
        writeln!(out, "s,w,W")?;
        for p in self.grid.iter().filter(|p| p.s.is_finite()) {
            writeln!(out, "{},{},{}", p.s, p.w, p.big_w)?;
        }
        Ok(())
    }

    /// Largest `|w_self - w_other|` on the comparison grid.
    pub fn sup_distance(&self, other: &RiccatiSolution) -> f64 {
        comparison_grid(self.x0)
            .into_iter()
            .map(|x| (self.w_at_x(x) - other.w_at_x(x)).abs())
            .fold(0.0, f64::max)
    }
}

/// Builds `w_q` as the increasing limit of the solutions `κ_T` vanishing at
/// `T`, pushing `T` toward `ξ` along the chosen schedule.
pub fn solve_wq(mech: &Mechanism, q: f64, opts: &RiccatiOptions) -> Result<RiccatiSolution> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(crate::error::domain(format!("q must be positive, got {q}")));
    }
    let chart = Chart::new(mech)?;
    let x0 = chart.far_field_start();
    let grid_x = comparison_grid(x0);
    let mut history: Vec<ShotRecord> = Vec::new();
    let mut prev: Option<(Vec<f64>, f64)> = None;

    for k in 0..=opts.k_max {
        let x_t = endpoint(&chart, x0, opts.schedule, k);
        if k > 0 && beyond_cap(&chart, x_t) {
            break;
        }
        let shot = shoot(&chart, q, x_t, x0, opts)?;
        let sol_ref = &shot.sol;
        let w_vals: Vec<f64> = grid_x
            .iter()
            .map(|&x| (-chart.m(x)).exp() * sol_ref.eval(x, 0).unwrap_or(0.0))
            .collect();
        let (layer, tail) = far_tail(&chart, q, x_t, opts)?;
        let total = if chart.absorbs() {
            shot.w_at_t + layer + tail_total(&chart, q, &tail)?
        } else {
            f64::INFINITY
        };

        let mut sup_change = f64::NAN;
        let mut converged = false;
        if let Some((pw, ptotal)) = &prev {
            let mut sup = 0.0f64;
            for (a, b) in w_vals.iter().zip(pw) {
                if *a < *b - 1e-9 * (1.0 + b.abs()) {
                    return Err(Error::Riccati(format!(
                        "shooting solutions decreased when T moved to x = {x_t}: {a} < {b}"
                    )));
                }
                sup = sup.max((a - b).abs() / (1.0 + b.abs()));
            }
            sup_change = sup;
            let total_ok = if total.is_finite() {
                (total - ptotal).abs() < opts.tol_w * (1.0 + total)
            } else {
                true
            };
            converged = sup < opts.tol_w && total_ok;
        }
        history.push(ShotRecord {
            x_t,
            p_t: chart.p(x_t),
            sup_change,
            total,
        });
        if converged {
            return finish(chart, q, x0, shot, layer, tail, total, history);
        }
        prev = Some((w_vals, total));
    }
    Err(Error::Riccati(format!(
        "shooting did not converge within {} refinements (last changes: {:?})",
        history.len(),
        history
            .iter()
            .rev()
            .take(3)
            .map(|h| h.sup_change)
            .collect::<Vec<_>>()
    )))
}

// Boundary-layer correction at x_T plus the cumulative quasi-static tail.
fn far_tail(
    chart: &Chart,
    q: f64,
    x_t: f64,
    opts: &RiccatiOptions,
) -> Result<(f64, DenseSolution)> {
    let layer = match chart.setting() {
        // κ_T falls short of w_q by about G(x_T) over a layer of width c/ψ.
        Setting::Continuous => {
            let a = chart.psi(x_t) / chart.c();
            quasi_static(chart, q, x_t) * chart.h(x_t) / (a + 1.0)
        }
        Setting::Discrete => 0.0,
    };
    let tail = OdeSolver {
        rtol: opts.rtol,
        atol: opts.atol,
        h_init: Some(1e-2),
        max_steps: 200_000,
    }
    .solve(
        |x, _, dy| dy[0] = quasi_static(chart, q, x) * chart.h(x),
        x_t,
        &[0.0],
        x_t + TAIL_SPAN,
        |_, _| true,
    )?;
    Ok((layer, tail))
}

fn tail_total(chart: &Chart, q: f64, tail: &DenseSolution) -> Result<f64> {
    // Only called when ∫ dλ/ψ converges; beyond x = 300 the remainder is
    // below e^{-300} while ψ itself would overflow.
    let end = tail.t_end().max(300.0);
    let rest = Quadrature::new(1e-14)
        .integrate(
            |x| quasi_static(chart, q, x) * chart.h(x),
            tail.t_end(),
            end,
        )?
        .value;
    Ok(tail.node(tail.steps())[0] + rest)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    chart: Chart,
    q: f64,
    x0: f64,
    shot: Shot,
    layer: f64,
    tail: DenseSolution,
    total: f64,
    history: Vec<ShotRecord>,
) -> Result<RiccatiSolution> {
    let c = chart.c();
    let xi = match &chart {
        Chart::Discrete(m) => m.xi(1e-12)?,
        Chart::Continuous(_) => f64::INFINITY,
    };
    let sol = &shot.sol;
    let n = sol.steps();
    let g_end = sol.node(n)[0];

    // Grid in increasing x.
    let mut grid = Vec::with_capacity(n + 1);
    let times = sol.times();
    let mut s = chart.theta(X_END, 1e-13)?;
    for i in (0..=n).rev() {
        let x = times[i];
        if i < n {
            s = if s.is_finite() && chart.m(x) < 700.0 {
                s + chart.theta_increment(times[i + 1], x, 1e-12)?
            } else {
                f64::INFINITY
            };
        }
        let node = sol.node(i);
        grid.push(GridPoint {
            x,
            p: chart.p(x),
            s,
            w: (-chart.m(x)).exp() * node[0],
            big_w: shot.w_at_t - node[1],
        });
    }

    // Relative residual of the g-equation at step midpoints. Since
    // w' - w² + q r² = e^{-2m} R / h with R the g-residual, dividing by
    // w² + q r² gives |R| / (h g² + q/c).
    let mut max_residual = 0.0f64;
    for i in 0..n {
        let xm = 0.5 * (times[i] + times[i + 1]);
        let g = sol.eval(xm, 0).unwrap();
        let dg = sol.eval_derivative(xm, 0).unwrap();
        let h = chart.h(xm);
        let r = dg - (h * g * g + chart.psi(xm) / c * g - q / c);
        max_residual = max_residual.max(r.abs() / (h * g * g + q / c));
    }

    // Checks run on g = e^{m} w, which carries the same sign and envelope
    // information without underflowing where m is large.
    let nodes: Vec<(f64, f64, f64)> = (0..=n)
        .rev()
        .map(|i| {
            let x = times[i];
            let g = sol.node(i)[0];
            let dw = sol.eval_derivative(x, 0).unwrap_or(0.0) - chart.psi(x) / c * g;
            (x, g, dw)
        })
        .collect();
    let positive = nodes[..n].iter().all(|&(_, g, _)| g > 0.0);
    // Outermost tenth of the chart range at each end.
    let span = 0.1 * (shot.x_t - X_END);
    let in_zone = |x: f64| x <= X_END + span || x >= shot.x_t - span;
    let zones: Vec<_> = nodes.iter().filter(|p| in_zone(p.0)).collect();
    let endpoint_domination = zones
        .iter()
        .all(|&&(x, g, _)| g < (q / (c * chart.h(x))).sqrt());
    let endpoint_decrease = zones.iter().all(|&&(_, _, dw)| dw <= 0.0);

    let diagnostics = Diagnostics {
        max_residual,
        history,
        positive,
        endpoint_domination,
        endpoint_decrease,
        steps: n,
    };
    Ok(RiccatiSolution {
        chart,
        q,
        xi,
        x0,
        shot,
        g_end,
        layer,
        tail: Some(tail),
        total,
        grid,
        diagnostics,
    })
}
