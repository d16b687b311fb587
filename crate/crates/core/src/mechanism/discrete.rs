use std::collections::BTreeMap;

use crate::error::{domain, invalid, regime, Result};
use crate::numerics::{find_root_bracketed, power_series_exp, Quadrature};

/// Integer-state branching mechanism with pairwise competition.
///
/// Each individual dies at rate `d`, gives birth to a litter of `k` at rate
/// `pi[k]`, and each ordered pair of individuals kills one of the two at rate
/// `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMechanism {
    d: f64,
    c: f64,
    pi: BTreeMap<u32, f64>,
    // tails[k - 1] = Σ_{i ≥ k} π_i
    tails: Vec<f64>,
}

impl DiscreteMechanism {
    pub fn new(d: f64, c: f64, pi: impl IntoIterator<Item = (u32, f64)>) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(invalid(format!(
                "competition rate c must be positive, got {c}"
            )));
        }
        if !(d >= 0.0 && d.is_finite()) {
            return Err(invalid(format!(
                "death rate d must be nonnegative, got {d}"
            )));
        }
        let mut map = BTreeMap::new();
        for (k, rate) in pi {
            if k == 0 {
                return Err(invalid("litter sizes start at 1"));
            }
            if !(rate >= 0.0 && rate.is_finite()) {
                return Err(invalid(format!(
                    "birth rate pi[{k}] must be nonnegative, got {rate}"
                )));
            }
            if rate > 0.0 {
                *map.entry(k).or_insert(0.0) += rate;
            }
        }
        let kmax = map.keys().next_back().copied().unwrap_or(0) as usize;
        let mut tails = vec![0.0; kmax];
        let mut acc = 0.0;
        for k in (1..=kmax).rev() {
            acc += map.get(&(k as u32)).copied().unwrap_or(0.0);
            tails[k - 1] = acc;
        }
        if d == 0.0 && acc == 0.0 {
            return Err(invalid(
                "at least one of d and the total birth rate must be positive",
            ));
        }
        Ok(Self {
            d,
            c,
            pi: map,
            tails,
        })
    }

    /// Binary splitting: litters of size one at rate `rho`.
    pub fn binary(rho: f64, d: f64, c: f64) -> Result<Self> {
        Self::new(d, c, [(1, rho)])
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn pi(&self) -> &BTreeMap<u32, f64> {
        &self.pi
    }

    /// Total per-capita birth rate.
    pub fn rho(&self) -> f64 {
        self.tails.first().copied().unwrap_or(0.0)
    }

    /// Largest litter size with positive rate (0 when there are no births).
    pub fn max_litter(&self) -> u32 {
        self.tails.len() as u32
    }

    /// `Σ_{i ≥ k} π_i` for `k ≥ 1`.
    pub fn tail(&self, k: u32) -> f64 {
        assert!(k >= 1, "tail index starts at 1");
        self.tails.get(k as usize - 1).copied().unwrap_or(0.0)
    }

    /// Log-moment condition `Σ π_i log i < ∞`; holds for every finite support.
    pub fn condition_l(&self) -> bool {
        self.pi
            .iter()
            .map(|(&k, &p)| p * (k as f64).ln())
            .sum::<f64>()
            .is_finite()
    }

    fn check_unit(s: f64) -> Result<()> {
        if (0.0..=1.0).contains(&s) {
            Ok(())
        } else {
            Err(domain(format!(
                "generating-function argument must lie in [0, 1], got {s}"
            )))
        }
    }

    /// `ψ(s) = (1 - s)(d - Σ_k π̄_k s^k)` on `[0, 1]`.
    pub fn psi(&self, s: f64) -> Result<f64> {
        Self::check_unit(s)?;
        Ok((1.0 - s) * (self.d - self.tail_poly(s)))
    }

    /// `d - (ρ + d)s + Σ π_i s^{i+1}`, the unfactored polynomial.
    pub fn psi_expanded(&self, s: f64) -> f64 {
        let births: f64 = self
            .pi
            .iter()
            .map(|(&i, &p)| p * s.powi(i as i32 + 1))
            .sum();
        self.d - (self.rho() + self.d) * s + births
    }

    /// `ψ'(s)`.
    pub fn psi_prime(&self, s: f64) -> f64 {
        let births: f64 = self
            .pi
            .iter()
            .map(|(&i, &p)| (i + 1) as f64 * p * s.powi(i as i32))
            .sum();
        births - (self.rho() + self.d)
    }

    // Σ_k π̄_k s^k by Horner.
    pub(crate) fn tail_poly(&self, s: f64) -> f64 {
        self.tails.iter().rev().fold(0.0, |acc, &t| (acc + t) * s)
    }

    /// `log β = -Σ_k π̄_k / (c k)`.
    pub fn log_beta(&self) -> f64 {
        -self
            .tails
            .iter()
            .enumerate()
            .map(|(i, &t)| t / (self.c * (i + 1) as f64))
            .sum::<f64>()
    }

    /// `m` as a function of `y = -ln s`; smooth for all `y ≥ 0`.
    pub(crate) fn m_of_log(&self, y: f64) -> f64 {
        let mut acc = self.d / self.c * y;
        for (i, &t) in self.tails.iter().enumerate() {
            let k = (i + 1) as f64;
            acc += t * (-k * y).exp_m1() / (self.c * k);
        }
        acc
    }

    /// `m(s) = ∫_s^1 ψ(v) / (c v (1 - v)) dv` for `s ∈ (0, 1]`.
    pub fn m(&self, s: f64) -> Result<f64> {
        if !(s > 0.0 && s <= 1.0) {
            return Err(domain(format!("m is defined on (0, 1], got {s}")));
        }
        Ok(self.m_of_log(-s.ln()))
    }

    /// `dm/ds = -(d - Σ π̄_k s^k) / (c s)`.
    pub fn m_prime(&self, s: f64) -> f64 {
        -(self.d - self.tail_poly(s)) / (self.c * s)
    }

    pub fn exp_m(&self, s: f64) -> Result<f64> {
        self.m(s).map(f64::exp)
    }

    /// `ξ = ∞` exactly when `d ≥ c`.
    pub fn xi_is_finite(&self) -> bool {
        self.d < self.c
    }

    // θ(e^{-y}) = ∫_0^y exp(m_of_log(z) - z) dz
    pub(crate) fn theta_of_log(&self, y: f64, tol: f64) -> Result<f64> {
        let f = |z: f64| (self.m_of_log(z) - z).exp();
        Ok(Quadrature::new(tol).integrate(f, 0.0, y)?.value)
    }

    /// `θ(s) = ∫_s^1 e^{m(v)} dv`, decreasing from `ξ` at `0+` to 0 at 1.
    pub fn theta(&self, s: f64, tol: f64) -> Result<f64> {
        if !(s > 0.0 && s <= 1.0) {
            return Err(domain(format!("theta is defined on (0, 1], got {s}")));
        }
        self.theta_of_log(-s.ln(), tol)
    }

    /// `ξ = ∫_0^1 e^{m}`; `+∞` when `d ≥ c`.
    pub fn xi(&self, tol: f64) -> Result<f64> {
        if !self.xi_is_finite() {
            return Ok(f64::INFINITY);
        }
        self.theta_of_log(f64::INFINITY, tol)
    }

    /// `-ln φ(t)`; the log coordinate keeps `1 - φ` accurate near `t = 0`.
    pub(crate) fn phi_log(&self, t: f64, tol_phi: f64) -> Result<f64> {
        if t < 0.0 || t.is_nan() {
            return Err(domain(format!("phi is defined on [0, xi), got {t}")));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        if self.xi_is_finite() {
            let xi = self.xi(0.1 * tol_phi)?;
            if t >= xi {
                return Err(domain(format!(
                    "phi is defined on [0, xi) with xi = {xi}, got {t}"
                )));
            }
        }
        let qtol = 0.1 * tol_phi;
        let mut hi = 1.0;
        while self.theta_of_log(hi, qtol)? <= t {
            hi *= 2.0;
            if hi > 1e6 {
                return Err(domain(format!(
                    "phi({t}) lies beyond the representable range"
                )));
            }
        }
        let g = |y: f64| {
            self.theta_of_log(y, qtol)
                .map(|v| v - t)
                .unwrap_or(f64::NAN)
        };
        Ok(find_root_bracketed(g, 0.0, hi, 1e-15)?)
    }

    /// Inverse of `θ` on `[0, ξ)`.
    pub fn phi(&self, t: f64, tol_phi: f64) -> Result<f64> {
        self.phi_log(t, tol_phi).map(|y| (-y).exp())
    }

    /// `r(θ(u))² = e^{-2m(u)} / (c u (1 - u))`, written in terms of `y = -ln u`.
    pub(crate) fn r_squared_of_log(&self, y: f64) -> f64 {
        let u = (-y).exp();
        let one_minus = -(-y).exp_m1();
        (-2.0 * self.m_of_log(y)).exp() / (self.c * u * one_minus)
    }

    /// `r(s) = |φ'(s)| / sqrt(c φ(s)(1 - φ(s)))` on `(0, ξ)`.
    pub fn r_func(&self, s: f64, tol_phi: f64) -> Result<f64> {
        if !(s > 0.0) {
            return Err(domain(format!("r is defined on (0, xi), got {s}")));
        }
        let y = self.phi_log(s, tol_phi)?;
        Ok(self.r_squared_of_log(y).sqrt())
    }

    /// Power-series coefficients `ν_1..ν_n` of `exp(m(s)) = Σ ν_i s^{i-1}` (requires `d = 0`).
    pub fn nu(&self, n: usize) -> Result<Vec<f64>> {
        if self.d != 0.0 {
            return Err(regime(
                "the series for exp(m) needs d = 0 (stationary regime)",
            ));
        }
        let mut g = vec![0.0; self.tails.len() + 1];
        for (i, &t) in self.tails.iter().enumerate() {
            g[i + 1] = t / (self.c * (i + 1) as f64);
        }
        let beta = self.log_beta().exp();
        Ok(power_series_exp(&g, n)
            .into_iter()
            .map(|a| beta * a)
            .collect())
    }

    /// Stationary law `μ_i ∝ ν_i / i` for `i = 1..=n` (requires `d = 0`).
    ///
    /// Fails when the neglected mass of `ν` beyond `n` exceeds `tol`.
    pub fn mu(&self, n: usize, tol: f64) -> Result<Vec<f64>> {
        let nu = self.nu(n)?;
        let deficit = 1.0 - nu.iter().sum::<f64>();
        if deficit > tol {
            return Err(invalid(format!(
                "truncation at {n} drops mass {deficit:e} of nu, above tolerance {tol:e}"
            )));
        }
        let weights: Vec<f64> = nu
            .iter()
            .enumerate()
            .map(|(i, v)| v / (i + 1) as f64)
            .collect();
        let norm: f64 = weights.iter().sum();
        Ok(weights.into_iter().map(|w| w / norm).collect())
    }
}

/// Poisson(ρ/c) conditioned to be positive, evaluated at `i ≥ 1`.
pub fn mu_binary(rho: f64, c: f64, i: u64) -> f64 {
    if i == 0 {
        return 0.0;
    }
    let a = rho / c;
    let log_fact: f64 = (2..=i).map(|k| (k as f64).ln()).sum();
    (-a + i as f64 * a.ln() - log_fact).exp() / -(-a).exp_m1()
}

#[cfg(test)]
mod tests {
    use super::*;

    const E: f64 = std::f64::consts::E;

    #[test]
    fn psi_examples() {
        let m = DiscreteMechanism::binary(1.0, 0.0, 1.0).unwrap();
        assert!((m.psi(0.5).unwrap() + 0.25).abs() < 1e-15);
        assert_eq!(m.psi(1.0).unwrap(), 0.0);
        assert!(m.psi(1.5).is_err());
        let m = DiscreteMechanism::new(0.7, 1.0, [(1, 0.5), (3, 0.25)]).unwrap();
        assert_eq!(m.psi(0.0).unwrap(), 0.7);
    }

    #[test]
    fn tails() {
        let m = DiscreteMechanism::new(0.0, 1.0, [(1, 0.5), (3, 0.5)]).unwrap();
        assert_eq!(m.tail(1), 1.0);
        assert_eq!(m.tail(2), 0.5);
        assert_eq!(m.tail(3), 0.5);
        assert_eq!(m.tail(4), 0.0);
        assert_eq!(m.rho(), 1.0);
        assert!(m.condition_l());
    }

    #[test]
    fn exp_m_examples() {
        let m = DiscreteMechanism::binary(1.0, 0.0, 1.0).unwrap();
        assert!((m.exp_m(0.5).unwrap() - (-0.5f64).exp()).abs() < 1e-15);
        let m = DiscreteMechanism::binary(1.0, 1.0, 1.0).unwrap();
        for &s in &[0.01, 0.3, 0.9, 1.0] {
            let want = (s - 1.0f64).exp() / s;
            assert!((m.exp_m(s).unwrap() - want).abs() < 1e-14 * want);
        }
    }

    #[test]
    fn xi_and_phi() {
        let m = DiscreteMechanism::binary(1.0, 0.0, 1.0).unwrap();
        assert!((m.xi(1e-12).unwrap() - (1.0 - 1.0 / E)).abs() < 1e-12);
        let m = DiscreteMechanism::binary(1.0, 1.0, 1.0).unwrap();
        assert_eq!(m.xi(1e-12).unwrap(), f64::INFINITY);
        let m = DiscreteMechanism::new(0.4, 1.0, [(1, 0.6), (2, 0.3)]).unwrap();
        for &s in &[0.999, 0.7, 0.2, 1e-3, 1e-8] {
            let t = m.theta(s, 1e-13).unwrap();
            let back = m.phi(t, 1e-12).unwrap();
            assert!((back - s).abs() < 1e-9 * s, "s={s} back={back}");
        }
    }

    #[test]
    fn r_spot_value() {
        // d = 0, ρ = c = 1: at s = θ(1/2), r² = e / (1/4).
        let m = DiscreteMechanism::binary(1.0, 0.0, 1.0).unwrap();
        let s = m.theta(0.5, 1e-13).unwrap();
        let r = m.r_func(s, 1e-12).unwrap();
        assert!((r * r - 4.0 * E).abs() < 1e-8);
    }

    #[test]
    fn nu_series() {
        let m = DiscreteMechanism::binary(1.0, 0.0, 1.0).unwrap();
        let nu = m.nu(3).unwrap();
        assert!((nu[0] - 1.0 / E).abs() < 1e-15);
        assert!((nu[1] - 1.0 / E).abs() < 1e-15);
        assert!((nu[2] - 0.5 / E).abs() < 1e-15);
        let m = DiscreteMechanism::binary(1.0, 0.0, 2.0).unwrap();
        let nu = m.nu(10).unwrap();
        let mut fact = 1.0;
        for (i, &v) in nu.iter().enumerate() {
            if i > 0 {
                fact *= i as f64;
            }
            let want = (-0.5f64).exp() * 0.5f64.powi(i as i32) / fact;
            assert!((v - want).abs() < 1e-15);
        }
        assert!(DiscreteMechanism::binary(1.0, 0.1, 1.0)
            .unwrap()
            .nu(5)
            .is_err());
    }

    #[test]
    fn mu_binary_values() {
        assert!((mu_binary(1.0, 1.0, 1) - 1.0 / (E - 1.0)).abs() < 1e-15);
        assert!((mu_binary(1.0, 1.0, 2) - 0.5 / (E - 1.0)).abs() < 1e-15);
        assert!((mu_binary(1.0, 1.0, 3) - 1.0 / (6.0 * (E - 1.0))).abs() < 1e-15);
    }

    #[test]
    fn mu_requires_enough_terms() {
        let m = DiscreteMechanism::binary(5.0, 0.0, 1.0).unwrap();
        assert!(m.mu(3, 1e-10).is_err());
        let mu = m.mu(60, 1e-10).unwrap();
        assert!((mu.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(DiscreteMechanism::binary(1.0, 0.0, 0.0).is_err());
        assert!(DiscreteMechanism::binary(-1.0, 0.0, 1.0).is_err());
        assert!(DiscreteMechanism::new(0.0, 1.0, []).is_err());
        assert!(DiscreteMechanism::new(0.0, 1.0, [(0, 1.0)]).is_err());
    }
}
