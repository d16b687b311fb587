use super::solve::{RiccatiSolution, X_END};
use crate::error::{regime, Error, Result};
use crate::mechanism::Setting;
use crate::numerics::{DenseSolution, OdeSolver, Quadrature};

// Below this chart coordinate h < 1e-26 and every outer integrand is negligible.
const X_LOW: f64 = -60.0;
const FAR_SPAN: f64 = 40.0;

/// Kernel `J(α) = ∫_α^∞ (q/c) F(β) e^{m(α) - m(β) - (W(β) - W(α))} dβ`
/// of the resolvent and extinction transforms, stored through the
/// difference `D = g - J`, which solves
/// `D' = (ψ/c + g h) D - (q/c)(1 - F)` and is tiny in the far field.
struct Kernel<'a> {
    sol: &'a RiccatiSolution,
    x0: Option<f64>,
    diff: Option<DenseSolution>,
}

impl<'a> Kernel<'a> {
    fn new(sol: &'a RiccatiSolution, x0: Option<f64>) -> Result<Self> {
        if x0.is_none() {
            return Ok(Self {
                sol,
                x0,
                diff: None,
            });
        }
        let chart = sol.chart();
        let c = chart.c();
        let q = sol.q();
        let x_t = sol.x_t();
        let stiff = (chart.psi(x_t) / c).abs() + 1.0;
        let d_t = Self::quasi_static(sol, x0, x_t);
        let diff = OdeSolver {
            rtol: 1e-11,
            atol: 1e-15,
            h_init: Some((0.1 / stiff).min(1e-2)),
            max_steps: 2_000_000,
        }
        .solve(
            |x, y, dy| {
                let h = chart.h(x);
                let g = sol.g(x);
                dy[0] = (chart.psi(x) / c + g * h) * y[0] - q / c * chart.co_weight(x, x0);
            },
            x_t,
            &[d_t],
            X_END,
            |_, y| y[0].is_finite(),
        )
        .map_err(|e| Error::Riccati(format!("transform kernel: {e}")))?;
        Ok(Self {
            sol,
            x0,
            diff: Some(diff),
        })
    }

    fn quasi_static(sol: &RiccatiSolution, x0: Option<f64>, x: f64) -> f64 {
        let chart = sol.chart();
        let c = chart.c();
        let a = chart.psi(x) / c + sol.g(x) * chart.h(x);
        sol.q() / c * chart.co_weight(x, x0) / a
    }

    fn d(&self, x: f64) -> f64 {
        let Some(diff) = &self.diff else { return 0.0 };
        if x > self.sol.x_t() {
            Self::quasi_static(self.sol, self.x0, x)
        } else {
            diff.eval(x.max(X_END), 0).unwrap_or(0.0)
        }
    }

    fn j(&self, x: f64) -> f64 {
        self.sol.g(x) - self.d(x)
    }
}

fn breakpoints(lo: f64, hi: f64, sol: &RiccatiSolution) -> Vec<f64> {
    let mut pts = vec![lo];
    for b in [X_END, -10.0, 0.0, sol.x_far(), sol.x_t()] {
        if b > lo && b < hi {
            pts.push(b);
        }
    }
    pts.push(hi);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

fn integrate_pieces(f: impl Fn(f64) -> f64, pts: &[f64], tol: f64) -> Result<f64> {
    let quad = Quadrature::new(tol).max_evals(2_000_000);
    let mut total = 0.0;
    for w in pts.windows(2) {
        total += quad.integrate(&f, w[0], w[1])?.value;
    }
    Ok(total)
}

impl RiccatiSolution {
    fn require_absorbing(&self) -> Result<()> {
        if self.chart().absorbs() {
            Ok(())
        } else {
            Err(regime(
                "∫ dλ/ψ diverges: the process dies out without being absorbed, so T_a = ∞",
            ))
        }
    }

    /// Entrance law from infinity: `E_∞ e^{-λ Z_τ}` (continuous, argument `λ`)
    /// or `E_∞ s^{Z_τ}` (discrete, argument `s`), with `τ ~ Exp(q)`.
    pub fn entrance_law(&self, arg: f64) -> Result<f64> {
        let ok = match self.setting() {
            Setting::Continuous => arg >= 0.0,
            Setting::Discrete => (0.0..=1.0).contains(&arg),
        };
        if !ok || arg.is_nan() {
            return Err(crate::error::domain(format!(
                "entrance-law argument {arg} out of range"
            )));
        }
        Ok((-self.integral_to_arg(arg)).exp())
    }

    /// `E_∞ e^{-q T_a} = exp(-∫_0^ξ w_q)`.
    pub fn laplace_ta_infinity(&self) -> Result<f64> {
        self.require_absorbing()?;
        Ok((-self.total_integral()).exp())
    }

    /// `q G_{q,x}(λ) = q E_x ∫_0^∞ e^{-qt} e^{-λ Z_t} dt` (continuous) or its
    /// generating-function analogue with argument `s` (discrete).
    pub fn resolvent(&self, x0: f64, arg: f64) -> Result<f64> {
        if !(x0 >= 0.0) {
            return Err(crate::error::domain(format!(
                "initial state {x0} must be nonnegative"
            )));
        }
        let x_arg = match self.setting() {
            Setting::Continuous if arg >= 0.0 => {
                if arg == 0.0 {
                    return Ok(1.0);
                }
                self.chart().x_of_p(arg)
            }
            Setting::Discrete if (0.0..=1.0).contains(&arg) => {
                if arg == 1.0 {
                    return Ok(1.0);
                }
                self.chart().x_of_p(arg)
            }
            _ => {
                return Err(crate::error::domain(format!(
                    "resolvent argument {arg} out of range"
                )))
            }
        };
        if x0 == 0.0 {
            return Ok(1.0);
        }
        if x_arg == f64::INFINITY {
            return self.laplace_ta_from(x0);
        }
        self.one_minus_outer(Some(x0), x_arg)
    }

    /// `E_x e^{-q T_a}` for a finite initial state `x0`.
    pub fn laplace_ta_from(&self, x0: f64) -> Result<f64> {
        self.require_absorbing()?;
        if !(x0 >= 0.0) || x0.is_infinite() {
            return Err(crate::error::domain(format!(
                "initial state {x0} must be finite and nonnegative"
            )));
        }
        if x0 == 0.0 {
            return Ok(1.0);
        }
        self.one_minus_outer(Some(x0), f64::INFINITY)
    }

    // 1 - ∫_{-∞}^{x_arg} h(α) e^{-(W(x_arg) - W(α))} J(α) dα
    fn one_minus_outer(&self, x0: Option<f64>, x_arg: f64) -> Result<f64> {
        let kernel = Kernel::new(self, x0)?;
        let chart = self.chart();
        let upper = if x_arg.is_finite() {
            x_arg
        } else {
            self.x_t() + FAR_SPAN
        };
        let w_top = self.big_w_at_x(x_arg);
        let f = |a: f64| chart.h(a) * (self.big_w_at_x(a) - w_top).exp() * kernel.j(a);
        let lo = X_LOW.min(upper - 1.0);
        let outer = integrate_pieces(f, &breakpoints(lo, upper, self), 1e-12)?;
        Ok(1.0 - outer)
    }

    /// Both sides of the integration-by-parts identity
    /// `∫_{-∞}^{x_λ} h e^{W} J_1 = e^{W(x_λ)} - 1`, where `J_1` (the kernel
    /// with `F = 1`) is evaluated by direct quadrature rather than through
    /// the Riccati equation.
    pub fn integration_by_parts_check(&self, arg: f64) -> Result<(f64, f64)> {
        let chart = self.chart();
        let x_arg = chart.x_of_p(arg);
        let q = self.q();
        let c = chart.c();
        let j1 = |a: f64| -> f64 {
            let wa = self.big_w_at_x(a);
            let f = |b: f64| q / c * chart.decay(a, b) * (wa - self.big_w_at_x(b)).exp();
            let end = chart.x_max().max(a + 1.0);
            let pts = breakpoints(a, end, self);
            integrate_pieces(f, &pts, 1e-13).unwrap_or(f64::NAN)
        };
        let outer = |a: f64| chart.h(a) * self.big_w_at_x(a).exp() * j1(a);
        let lhs = integrate_pieces(outer, &breakpoints(X_LOW, x_arg, self), 1e-11)?;
        let rhs = self.big_w_at_x(x_arg).exp_m1();
        Ok((lhs, rhs))
    }
}
