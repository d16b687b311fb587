use crate::error::{regime, Result};
use crate::mechanism::{
    AbsorptionRegime, ContinuousMechanism, DiscreteMechanism, Mechanism, Setting,
};
use crate::numerics::{log1p_exp, Quadrature};

/// A single real coordinate `x` covering the whole Riccati domain in both
/// settings, with the Riccati variable `θ(p(x))` increasing in `x`:
///
/// * discrete: `u = 1 / (1 + e^x)`, so `x → -∞` is `u → 1` and `x → ∞` is `u → 0`;
/// * continuous: `λ = e^x`.
///
/// In both cases `|dp/dx| = h(x)` with `h = u(1 - u)` or `h = λ`, and
/// `dm/dx = ψ/c`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Chart {
    Discrete(DiscreteMechanism),
    Continuous(ContinuousMechanism),
}

impl Chart {
    pub fn new(mech: &Mechanism) -> Result<Self> {
        match mech {
            Mechanism::Discrete(m) => {
                if m.d() == 0.0 {
                    return Err(regime(
                        "with d = 0 the process never dies out; the Riccati kernel needs d > 0",
                    ));
                }
                Ok(Chart::Discrete(m.clone()))
            }
            Mechanism::Continuous(m) => {
                if m.levy().is_subordinator() {
                    return Err(regime(
                        "the Lévy process is a subordinator, so the process never dies out \
                         and the Riccati kernel is undefined",
                    ));
                }
                Ok(Chart::Continuous(m.clone()))
            }
        }
    }

    pub fn setting(&self) -> Setting {
        match self {
            Chart::Discrete(_) => Setting::Discrete,
            Chart::Continuous(_) => Setting::Continuous,
        }
    }

    pub fn mechanism(&self) -> Mechanism {
        match self {
            Chart::Discrete(m) => m.clone().into(),
            Chart::Continuous(m) => m.clone().into(),
        }
    }

    pub fn c(&self) -> f64 {
        match self {
            Chart::Discrete(m) => m.c(),
            Chart::Continuous(m) => m.c(),
        }
    }

    /// Whether the process hits 0 in finite time.
    pub fn absorbs(&self) -> bool {
        match self {
            Chart::Discrete(_) => true,
            Chart::Continuous(m) => {
                m.levy().absorption_regime() == AbsorptionRegime::ExtinctionWithAbsorption
            }
        }
    }

    /// Generating-function or Laplace argument at `x`.
    pub fn p(&self, x: f64) -> f64 {
        match self {
            Chart::Discrete(_) => 1.0 / (1.0 + x.exp()),
            Chart::Continuous(_) => x.exp(),
        }
    }

    pub fn x_of_p(&self, p: f64) -> f64 {
        match self {
            Chart::Discrete(_) => (-p).ln_1p() - p.ln(),
            Chart::Continuous(_) => p.ln(),
        }
    }

    pub fn h(&self, x: f64) -> f64 {
        match self {
            Chart::Discrete(_) => 1.0 / (2.0 + 2.0 * x.cosh()),
            Chart::Continuous(_) => x.exp(),
        }
    }

    /// Sign of `dp/dx`.
    pub fn sigma(&self) -> f64 {
        match self {
            Chart::Discrete(_) => -1.0,
            Chart::Continuous(_) => 1.0,
        }
    }

    /// `m(p(x))`.
    pub fn m(&self, x: f64) -> f64 {
        match self {
            Chart::Discrete(m) => m.m_of_log(log1p_exp(x)),
            Chart::Continuous(m) => m.m_unchecked(x.exp()),
        }
    }

    /// `ψ(p(x))`.
    pub fn psi(&self, x: f64) -> f64 {
        match self {
            Chart::Discrete(m) => {
                let u = 1.0 / (1.0 + x.exp());
                let one_minus = 1.0 / (1.0 + (-x).exp());
                one_minus * (m.d() - m.tail_poly(u))
            }
            Chart::Continuous(m) => m.levy().psi_unchecked(x.exp()),
        }
    }

    /// `ψ'(p)` at `p = p(x)`.
    pub fn psi_prime(&self, x: f64) -> f64 {
        match self {
            Chart::Discrete(m) => m.psi_prime(self.p(x)),
            Chart::Continuous(m) => m.levy().psi_prime(x.exp()),
        }
    }

    /// `1 - F` for the initial-state weight `F = 1 - e^{-x0 λ}` or `1 - u^{x0}`;
    /// `None` means start at infinity.
    pub fn co_weight(&self, x: f64, x0: Option<f64>) -> f64 {
        let Some(x0) = x0 else { return 0.0 };
        match self {
            Chart::Discrete(_) => (-x0 * log1p_exp(x)).exp(),
            Chart::Continuous(_) => (-x0 * x.exp()).exp(),
        }
    }

    /// `dh/dx`.
    pub fn h_prime(&self, x: f64) -> f64 {
        match self {
            Chart::Discrete(_) => -self.h(x) * (2.0 / (1.0 + x.exp()) - 1.0),
            Chart::Continuous(_) => x.exp(),
        }
    }

    /// `d(ψ/c)/dx`.
    pub fn rate_prime(&self, x: f64) -> f64 {
        self.psi_prime(x) * self.sigma() * self.h(x) / self.c()
    }

    /// `dF/dx` for the weight below.
    pub fn weight_prime(&self, x: f64, x0: Option<f64>) -> f64 {
        let Some(x0) = x0 else { return 0.0 };
        let co = self.co_weight(x, x0.into());
        match self {
            Chart::Discrete(_) => x0 * co / (1.0 + (-x).exp()),
            Chart::Continuous(_) => x0 * x.exp() * co,
        }
    }

    /// `F` itself, without cancellation where it is small.
    pub fn weight(&self, x: f64, x0: Option<f64>) -> f64 {
        let Some(x0) = x0 else { return 1.0 };
        match self {
            Chart::Discrete(_) => -(-x0 * log1p_exp(x)).exp_m1(),
            Chart::Continuous(_) => -(-x0 * x.exp()).exp_m1(),
        }
    }

    /// `e^{m(x_from) - m(x_to)}`, zero once `m(x_to)` overflows.
    pub fn decay(&self, from: f64, to: f64) -> f64 {
        let b = self.m(to);
        if b == f64::INFINITY {
            return 0.0;
        }
        (self.m(from) - b).exp()
    }

    /// Largest chart coordinate at which `ψ` and `m` stay finite.
    pub fn x_max(&self) -> f64 {
        match self {
            Chart::Discrete(_) => 700.0,
            Chart::Continuous(_) => 300.0,
        }
    }

    /// `θ(p(x))`, possibly `+∞` after overflow.
    pub fn theta(&self, x: f64, tol: f64) -> Result<f64> {
        match self {
            Chart::Discrete(m) => m.theta_of_log(log1p_exp(x), tol),
            Chart::Continuous(m) => m.theta(x.exp(), tol),
        }
    }

    /// `∫_a^b e^{m} h dx`, the increment of `θ` between two chart points.
    pub fn theta_increment(&self, a: f64, b: f64, tol: f64) -> Result<f64> {
        let f = |x: f64| (self.m(x)).exp() * self.h(x);
        Ok(Quadrature::new(tol).integrate(f, a, b)?.value)
    }

    /// `x` beyond which `ψ > 0` and `ψ/c ≥ 1`, the start of the far field.
    pub fn far_field_start(&self) -> f64 {
        let c = self.c();
        match self {
            Chart::Discrete(m) => {
                let mut x = 0.0;
                while self.psi(x) <= 0.5 * m.d() && x < 700.0 {
                    x += 1.0;
                }
                x
            }
            Chart::Continuous(_) => {
                let mut x = 0.0;
                while self.psi(x) < c && x < 200.0 {
                    x += std::f64::consts::LN_2;
                }
                x
            }
        }
    }
}
