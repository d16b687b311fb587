use serde::{Deserialize, Serialize};

use super::AbsorptionRegime;
use crate::error::{domain, invalid, regime, Result};
use crate::numerics::{ein, find_root_bracketed, Quadrature};

/// Exponentially distributed jumps: total rate `rate`, mean size `mean`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpJumps {
    pub rate: f64,
    pub mean: f64,
}

impl ExpJumps {
    pub fn kappa(&self) -> f64 {
        1.0 / self.mean
    }

    // ∫_0^1 r Π_e(dr), the part removed by the compensator.
    fn small_jump_mean(&self) -> f64 {
        let k = self.kappa();
        self.rate * (1.0 - (-k).exp() * (1.0 + k)) / k
    }
}

/// Spectrally positive Lévy process with finite-activity jumps.
///
/// Stored in the compensated Lévy–Khinchin form
/// `ψ(λ) = αλ + γλ²/2 + ∫ (e^{-λr} - 1 + λr 1_{r<1}) Π(dr)`,
/// with `Π` a finite sum of atoms plus at most one exponential density.
#[derive(Debug, Clone, PartialEq)]
pub struct LevyMechanism {
    alpha: f64,
    gamma: f64,
    atoms: Vec<(f64, f64)>,
    exp_jumps: Option<ExpJumps>,
}

impl LevyMechanism {
    /// From the compensated drift `alpha`.
    pub fn new(
        alpha: f64,
        gamma: f64,
        atoms: Vec<(f64, f64)>,
        exp_jumps: Option<ExpJumps>,
    ) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(invalid(format!("drift must be finite, got {alpha}")));
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(invalid(format!(
                "Gaussian coefficient must be nonnegative, got {gamma}"
            )));
        }
        for &(r, rate) in &atoms {
            if !(r > 0.0 && r.is_finite() && rate > 0.0 && rate.is_finite()) {
                return Err(invalid(format!(
                    "jump atoms need positive size and rate, got ({r}, {rate})"
                )));
            }
        }
        if let Some(e) = exp_jumps {
            if !(e.rate > 0.0 && e.rate.is_finite() && e.mean > 0.0 && e.mean.is_finite()) {
                return Err(invalid(format!(
                    "exponential jumps need positive rate and mean, got ({}, {})",
                    e.rate, e.mean
                )));
            }
        }
        Ok(Self {
            alpha,
            gamma,
            atoms,
            exp_jumps,
        })
    }

    /// From the uncompensated linear drift `b`, so that
    /// `ψ(λ) = -bλ + γλ²/2 + ∫ (e^{-λr} - 1) Π(dr)`.
    pub fn from_drift(
        b: f64,
        gamma: f64,
        atoms: Vec<(f64, f64)>,
        exp_jumps: Option<ExpJumps>,
    ) -> Result<Self> {
        let comp = compensator(&atoms, exp_jumps.as_ref());
        Self::new(-b - comp, gamma, atoms, exp_jumps)
    }

    /// Brownian motion with drift `b` and variance rate `gamma`.
    pub fn brownian(b: f64, gamma: f64) -> Result<Self> {
        Self::from_drift(b, gamma, Vec::new(), None)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn exp_jumps(&self) -> Option<ExpJumps> {
        self.exp_jumps
    }

    /// Uncompensated linear drift `b`.
    pub fn drift(&self) -> f64 {
        -self.alpha - compensator(&self.atoms, self.exp_jumps.as_ref())
    }

    /// Total jump rate `ρ = Π((0, ∞))`.
    pub fn total_rate(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum::<f64>() + self.exp_jumps.map_or(0.0, |e| e.rate)
    }

    /// `Π̄(y) = Π([y, ∞))`.
    pub fn levy_tail(&self, y: f64) -> f64 {
        let atoms: f64 = self.atoms.iter().filter(|a| a.0 >= y).map(|a| a.1).sum();
        atoms
            + self
                .exp_jumps
                .map_or(0.0, |e| e.rate * (-e.kappa() * y.max(0.0)).exp())
    }

    /// `∫^∞ log(r) Π(dr) < ∞`; true for every representable measure.
    pub fn condition_l(&self) -> bool {
        let atoms: f64 = self
            .atoms
            .iter()
            .map(|&(r, rate)| rate * r.ln().max(0.0))
            .sum();
        atoms.is_finite()
    }

    fn check_arg(lambda: f64) -> Result<()> {
        if lambda >= 0.0 {
            Ok(())
        } else {
            Err(domain(format!(
                "Laplace argument must be nonnegative, got {lambda}"
            )))
        }
    }

    /// Laplace exponent, `E e^{-λX_t} = e^{tψ(λ)}`.
    pub fn psi(&self, lambda: f64) -> Result<f64> {
        Self::check_arg(lambda)?;
        Ok(self.psi_unchecked(lambda))
    }

    pub(crate) fn psi_unchecked(&self, lambda: f64) -> f64 {
        let mut v = -self.drift() * lambda + 0.5 * self.gamma * lambda * lambda;
        for &(r, rate) in &self.atoms {
            v += rate * (-lambda * r).exp_m1();
        }
        if let Some(e) = self.exp_jumps {
            let k = e.kappa();
            v -= e.rate * lambda / (k + lambda);
        }
        v
    }

    /// `ψ'(λ)`.
    pub fn psi_prime(&self, lambda: f64) -> f64 {
        let mut v = -self.drift() + self.gamma * lambda;
        for &(r, rate) in &self.atoms {
            v -= rate * r * (-lambda * r).exp();
        }
        if let Some(e) = self.exp_jumps {
            let k = e.kappa();
            v -= e.rate * k / ((k + lambda) * (k + lambda));
        }
        v
    }

    /// The compensated Lévy–Khinchin integral evaluated term by term, with the
    /// exponential density integrated numerically.
    pub fn psi_canonical(&self, lambda: f64, tol: f64) -> Result<f64> {
        Self::check_arg(lambda)?;
        let mut v = self.alpha * lambda + 0.5 * self.gamma * lambda * lambda;
        for &(r, rate) in &self.atoms {
            let comp = if r < 1.0 { lambda * r } else { 0.0 };
            v += rate * ((-lambda * r).exp_m1() + comp);
        }
        if let Some(e) = self.exp_jumps {
            let k = e.kappa();
            let f = |r: f64| {
                let comp = if r < 1.0 { lambda * r } else { 0.0 };
                ((-lambda * r).exp_m1() + comp) * k * (-k * r).exp()
            };
            let q = Quadrature::new(tol);
            v += e.rate
                * (q.integrate(f, 0.0, 1.0)?.value + q.integrate(f, 1.0, f64::INFINITY)?.value);
        }
        Ok(v)
    }

    /// No Gaussian part and nonnegative uncompensated drift.
    pub fn is_subordinator(&self) -> bool {
        self.gamma == 0.0 && self.drift() >= 0.0
    }

    /// Drift `δ` of the subordinator form, when `X` is a subordinator.
    pub fn subordinator_drift(&self) -> Option<f64> {
        self.is_subordinator().then(|| self.drift())
    }

    /// `-δλ - ∫ (1 - e^{-λr}) Π(dr)`.
    pub fn psi_subordinator_form(&self, lambda: f64) -> Result<f64> {
        let delta = self
            .subordinator_drift()
            .ok_or_else(|| regime("subordinator form requested for a non-subordinator"))?;
        Self::check_arg(lambda)?;
        let mut v = -delta * lambda;
        for &(r, rate) in &self.atoms {
            v -= rate * -(-lambda * r).exp_m1();
        }
        if let Some(e) = self.exp_jumps {
            v -= e.rate * lambda / (e.kappa() + lambda);
        }
        Ok(v)
    }

    /// Grey-type classification: subordinators are recurrent; otherwise
    /// absorption happens iff `∫^∞ dλ/ψ(λ)` converges, i.e. iff `γ > 0` for
    /// finite-activity jumps.
    pub fn absorption_regime(&self) -> AbsorptionRegime {
        if self.is_subordinator() {
            AbsorptionRegime::Recurrent
        } else if self.gamma > 0.0 {
            AbsorptionRegime::ExtinctionWithAbsorption
        } else {
            AbsorptionRegime::ExtinctionWithoutAbsorption
        }
    }
}

fn compensator(atoms: &[(f64, f64)], exp_jumps: Option<&ExpJumps>) -> f64 {
    let small: f64 = atoms.iter().filter(|a| a.0 < 1.0).map(|a| a.0 * a.1).sum();
    small + exp_jumps.map_or(0.0, ExpJumps::small_jump_mean)
}

/// A Lévy mechanism together with the competition rate `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousMechanism {
    levy: LevyMechanism,
    c: f64,
}

impl ContinuousMechanism {
    pub fn new(levy: LevyMechanism, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(invalid(format!(
                "competition rate c must be positive, got {c}"
            )));
        }
        Ok(Self { levy, c })
    }

    /// Feller diffusion with logistic growth: drift `b`, noise `gamma`.
    pub fn feller(b: f64, gamma: f64, c: f64) -> Result<Self> {
        Self::new(LevyMechanism::brownian(b, gamma)?, c)
    }

    pub fn levy(&self) -> &LevyMechanism {
        &self.levy
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn psi(&self, lambda: f64) -> Result<f64> {
        self.levy.psi(lambda)
    }

    /// `m(λ) = ∫_0^λ ψ(s) / (c s) ds`, in closed form.
    pub fn m(&self, lambda: f64) -> Result<f64> {
        LevyMechanism::check_arg(lambda)?;
        Ok(self.m_unchecked(lambda))
    }

    pub(crate) fn m_unchecked(&self, lambda: f64) -> f64 {
        let c = self.c;
        let l = &self.levy;
        let b = l.drift();
        // Skip vanishing coefficients so that λ = ∞ gives ±∞ rather than NaN.
        let mut v = 0.0;
        if b != 0.0 {
            v -= b * lambda / c;
        }
        if l.gamma != 0.0 {
            v += l.gamma * lambda * lambda / (4.0 * c);
        }
        for &(r, rate) in &l.atoms {
            v -= rate / c * ein(lambda * r);
        }
        if let Some(e) = l.exp_jumps {
            v -= e.rate / c * (lambda * e.mean).ln_1p();
        }
        v
    }

    /// `m'(λ) = ψ(λ) / (c λ)`.
    pub fn m_prime(&self, lambda: f64) -> f64 {
        if lambda == 0.0 {
            return self.levy.psi_prime(0.0) / self.c;
        }
        self.levy.psi_unchecked(lambda) / (self.c * lambda)
    }

    pub fn exp_m(&self, lambda: f64) -> Result<f64> {
        self.m(lambda).map(f64::exp)
    }

    /// `m` from the compensated exponent: drift and Gaussian parts in closed
    /// form, jump parts by quadrature.
    pub fn m_quadrature(&self, lambda: f64, tol: f64) -> Result<f64> {
        LevyMechanism::check_arg(lambda)?;
        let c = self.c;
        let l = &self.levy;
        let mut v = l.alpha * lambda / c + l.gamma * lambda * lambda / (4.0 * c);
        let q = Quadrature::new(tol);
        for &(r, rate) in &l.atoms {
            let comp = if r < 1.0 { r } else { 0.0 };
            let f = |s: f64| {
                if s == 0.0 {
                    return -r + comp;
                }
                ((-s * r).exp_m1() + s * comp) / s
            };
            v += rate / c * q.integrate(f, 0.0, lambda)?.value;
        }
        if let Some(e) = l.exp_jumps {
            let k = e.kappa();
            let comp = e.small_jump_mean() / e.rate;
            let f = |s: f64| -1.0 / (k + s) + comp;
            v += e.rate / c * q.integrate(f, 0.0, lambda)?.value;
        }
        Ok(v)
    }

    /// `m` through the Lévy tail:
    /// `-m(λ) = δλ/c + ∫ (1 - e^{-λr}) Π̄(r) / (c r) dr` (subordinators only).
    pub fn m_tail_form(&self, lambda: f64, tol: f64) -> Result<f64> {
        let delta = self
            .levy
            .subordinator_drift()
            .ok_or_else(|| regime("the Lévy-tail form of m holds for subordinators only"))?;
        LevyMechanism::check_arg(lambda)?;
        let c = self.c;
        let f = |r: f64| {
            if r == 0.0 {
                return lambda * self.levy.levy_tail(0.0) / c;
            }
            -(-lambda * r).exp_m1() * self.levy.levy_tail(r) / (c * r)
        };
        let mut cuts: Vec<f64> = self.levy.atoms.iter().map(|a| a.0).collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let q = Quadrature::new(tol);
        let mut acc = 0.0;
        let mut lo = 0.0;
        for &hi in &cuts {
            acc += q.integrate(f, lo, hi)?.value;
            lo = hi;
        }
        if self.levy.exp_jumps.is_some() {
            acc += q.integrate(f, lo, f64::INFINITY)?.value;
        }
        Ok(-(delta * lambda / c + acc))
    }

    /// `θ(λ) = ∫_0^λ e^{m(s)} ds`.
    pub fn theta(&self, lambda: f64, tol: f64) -> Result<f64> {
        LevyMechanism::check_arg(lambda)?;
        let f = |s: f64| self.m_unchecked(s).exp();
        Ok(Quadrature::new(tol).integrate(f, 0.0, lambda)?.value)
    }

    /// The range endpoint of `θ`; always `+∞` in the continuous setting.
    pub fn xi(&self) -> f64 {
        f64::INFINITY
    }

    /// Inverse of `θ`.
    pub fn phi(&self, t: f64, tol_phi: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(domain(format!("phi needs a nonnegative argument, got {t}")));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        let qtol = 0.1 * tol_phi;
        let mut hi = 1.0;
        while self.theta(hi, qtol)? <= t {
            hi *= 2.0;
            if hi > 1e12 {
                return Err(domain(format!(
                    "theta stays below {t}; phi is undefined there"
                )));
            }
        }
        let g = |x: f64| self.theta(x, qtol).map(|v| v - t).unwrap_or(f64::NAN);
        Ok(find_root_bracketed(g, 0.0, hi, 1e-15)?)
    }

    /// `r(θ(λ))² = e^{-2m(λ)} / (c λ)`.
    pub(crate) fn r_squared_at(&self, lambda: f64) -> f64 {
        (-2.0 * self.m_unchecked(lambda)).exp() / (self.c * lambda)
    }

    /// `r(s) = φ'(s) / sqrt(c φ(s))`.
    pub fn r_func(&self, s: f64, tol_phi: f64) -> Result<f64> {
        if !(s > 0.0) {
            return Err(domain(format!("r is defined on (0, ∞), got {s}")));
        }
        let lambda = self.phi(s, tol_phi)?;
        Ok(self.r_squared_at(lambda).sqrt())
    }

    /// Laplace transform of `ν`, which is `exp(m(λ))` (subordinators only).
    pub fn nu_laplace(&self, lambda: f64) -> Result<f64> {
        if !self.levy.is_subordinator() {
            return Err(regime(
                "nu exists only when the Lévy process is a subordinator",
            ));
        }
        self.exp_m(lambda)
    }

    /// Positive-recurrence criterion for subordinators: `δ ≠ 0` or `c < ρ`.
    pub fn condition_partial(&self) -> Result<bool> {
        let delta = self
            .levy
            .subordinator_drift()
            .ok_or_else(|| regime("the recurrence criterion applies to subordinators only"))?;
        Ok(delta != 0.0 || self.c < self.levy.total_rate())
    }

    // ∫_a^∞ e^{m}, a > 0, in the variable y = ln λ.
    fn exp_m_tail_integral(&self, a: f64, tol: f64) -> Result<f64> {
        let f = |y: f64| (self.m_unchecked(y.exp()) + y).exp();
        Ok(Quadrature::new(tol)
            .integrate(f, a.ln(), f64::INFINITY)?
            .value)
    }

    fn stationary_normalizer(&self, tol: f64) -> Result<f64> {
        if !self.levy.is_subordinator() {
            return Err(regime(
                "a stationary law exists only for subordinators; otherwise the process dies out",
            ));
        }
        if !self.condition_partial()? {
            return Err(regime(format!(
                "∫ e^m diverges (drift 0, jump rate {} ≤ c = {}): null-recurrent, \
                 no stationary law",
                self.levy.total_rate(),
                self.c
            )));
        }
        Ok(self.theta(1.0, tol)? + self.exp_m_tail_integral(1.0, tol)?)
    }

    /// Mean of the stationary law, `(∫_0^∞ e^{m})^{-1}`.
    pub fn stationary_mean(&self, tol: f64) -> Result<f64> {
        Ok(1.0 / self.stationary_normalizer(tol)?)
    }

    /// Laplace transform of the stationary law, `∫_λ^∞ e^{m} / ∫_0^∞ e^{m}`.
    pub fn stationary_laplace(&self, lambda: f64, tol: f64) -> Result<f64> {
        LevyMechanism::check_arg(lambda)?;
        let total = self.stationary_normalizer(tol)?;
        if lambda == 0.0 {
            return Ok(1.0);
        }
        Ok(self.exp_m_tail_integral(lambda, tol)? / total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jumpy() -> LevyMechanism {
        LevyMechanism::from_drift(
            0.3,
            0.0,
            vec![(0.5, 0.7), (2.0, 0.2)],
            Some(ExpJumps {
                rate: 0.4,
                mean: 1.5,
            }),
        )
        .unwrap()
    }

    #[test]
    fn brownian_psi() {
        let l = LevyMechanism::brownian(1.0, 1.0).unwrap();
        for &x in &[0.0, 0.5, 3.0] {
            assert!((l.psi(x).unwrap() - (0.5 * x * x - x)).abs() < 1e-15);
        }
        assert_eq!(l.psi(0.0).unwrap(), 0.0);
        assert!(l.psi(-1.0).is_err());
    }

    #[test]
    fn canonical_and_subordinator_forms_agree() {
        let l = jumpy();
        assert!(l.is_subordinator());
        for &x in &[0.0, 0.1, 1.0, 7.0, 40.0] {
            let a = l.psi(x).unwrap();
            let b = l.psi_canonical(x, 1e-13).unwrap();
            let c = l.psi_subordinator_form(x).unwrap();
            assert!((a - b).abs() < 1e-11 * (1.0 + a.abs()), "x={x}");
            assert!((a - c).abs() < 1e-12 * (1.0 + a.abs()), "x={x}");
        }
    }

    #[test]
    fn tail_values() {
        let l = LevyMechanism::from_drift(
            0.0,
            0.0,
            vec![],
            Some(ExpJumps {
                rate: 2.0,
                mean: 1.0,
            }),
        )
        .unwrap();
        for &y in &[0.1, 1.0, 3.0] {
            assert!((l.levy_tail(y) - 2.0 * (-y).exp()).abs() < 1e-15);
        }
        assert_eq!(jumpy().levy_tail(0.0), jumpy().total_rate());
    }

    #[test]
    fn m_feller_closed_form() {
        let m = ContinuousMechanism::feller(1.0, 1.0, 1.0).unwrap();
        for &x in &[0.0, 0.3, 2.0, 10.0] {
            assert!((m.m(x).unwrap() - (x * x / 4.0 - x)).abs() < 1e-13);
        }
    }

    #[test]
    fn m_three_routes() {
        let m = ContinuousMechanism::new(jumpy(), 0.8).unwrap();
        for &x in &[0.01, 0.5, 3.0, 25.0] {
            let a = m.m(x).unwrap();
            let b = m.m_quadrature(x, 1e-12).unwrap();
            let c = m.m_tail_form(x, 1e-12).unwrap();
            assert!((a - b).abs() < 1e-9, "x={x} {a} {b}");
            assert!((a - c).abs() < 1e-9, "x={x} {a} {c}");
        }
    }

    #[test]
    fn pure_drift_subordinator() {
        let m = ContinuousMechanism::new(
            LevyMechanism::from_drift(1.0, 0.0, vec![], None).unwrap(),
            1.0,
        )
        .unwrap();
        assert!((m.exp_m(2.0).unwrap() - (-2.0f64).exp()).abs() < 1e-15);
        assert_eq!(m.nu_laplace(0.0).unwrap(), 1.0);
        assert!((m.stationary_mean(1e-12).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn recurrence_criterion() {
        let atom = |rho: f64, b: f64| {
            ContinuousMechanism::new(
                LevyMechanism::from_drift(b, 0.0, vec![(1.0, rho)], None).unwrap(),
                1.0,
            )
            .unwrap()
        };
        assert!(atom(0.5, 0.1).condition_partial().unwrap());
        assert!(atom(2.0, 0.0).condition_partial().unwrap());
        assert!(!atom(0.5, 0.0).condition_partial().unwrap());
        assert!(!atom(1.0, 0.0).condition_partial().unwrap());
        assert!(matches!(
            atom(0.5, 0.0).stationary_mean(1e-10),
            Err(crate::Error::Regime(_))
        ));
        assert!(ContinuousMechanism::feller(1.0, 1.0, 1.0)
            .unwrap()
            .condition_partial()
            .is_err());
    }

    #[test]
    fn regimes() {
        assert_eq!(
            LevyMechanism::brownian(1.0, 1.0)
                .unwrap()
                .absorption_regime(),
            AbsorptionRegime::ExtinctionWithAbsorption
        );
        let l = LevyMechanism::from_drift(-1.0, 0.0, vec![(0.5, 1.0)], None).unwrap();
        assert_eq!(
            l.absorption_regime(),
            AbsorptionRegime::ExtinctionWithoutAbsorption
        );
        let l = LevyMechanism::from_drift(1.0, 0.0, vec![], None).unwrap();
        assert_eq!(l.absorption_regime(), AbsorptionRegime::Recurrent);
    }

    #[test]
    fn theta_phi_inverse() {
        let m = ContinuousMechanism::feller(1.0, 1.0, 1.0).unwrap();
        for &x in &[0.01, 0.5, 2.0, 6.0] {
            let t = m.theta(x, 1e-13).unwrap();
            let back = m.phi(t, 1e-12).unwrap();
            assert!((back - x).abs() < 1e-10 * (1.0 + x), "x={x} back={back}");
        }
    }
}
