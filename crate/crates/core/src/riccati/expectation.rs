use serde::Serialize;

use super::chart::Chart;
use crate::error::{domain, regime, Error, Result};
use crate::mechanism::Mechanism;
use crate::numerics::Quadrature;

const X_LOW: f64 = -60.0;
const SPLIT: f64 = 40.0;
// Above this value of ψ/c the inner integrals are replaced by two terms of
// their boundary-layer expansion (relative error below 1e-12), because
// differences of m lose all precision there.
const LAYER_RATE: f64 = 1e4;

/// Expected absorption time computed along two quadrature routes.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExpectedTa {
    pub value: f64,
    /// `(1/c) ∫ F(x) e^{-m(x)} θ(x) dx`, with `θ` as the inner integral.
    pub m_form: f64,
    /// The same double integral with the order of integration exchanged.
    pub fubini_form: f64,
}

/// `E_x(T_a)` for initial state `x0` (`None` for the entrance law from infinity).
///
/// Fails when the two routes disagree by more than `10 tol` relative.
pub fn expected_ta(mech: &Mechanism, x0: Option<f64>, tol: f64) -> Result<ExpectedTa> {
    let chart = Chart::new(mech)?;
    if !chart.absorbs() {
        return Err(regime(
            "∫ dλ/ψ diverges: the process dies out without being absorbed, so T_a = ∞",
        ));
    }
    if let Some(x0) = x0 {
        if !(x0 >= 0.0 && x0.is_finite()) {
            return Err(domain(format!(
                "initial state {x0} must be finite and nonnegative"
            )));
        }
        if x0 == 0.0 {
            return Ok(ExpectedTa {
                value: 0.0,
                m_form: 0.0,
                fubini_form: 0.0,
            });
        }
    }
    let m_form = m_form(&chart, x0, tol)?;
    let fubini_form = fubini_form(&chart, x0, tol)?;
    if (m_form - fubini_form).abs() > 10.0 * tol * m_form.abs().max(1.0) {
        return Err(Error::Riccati(format!(
            "quadrature routes for E(T_a) disagree: {m_form} vs {fubini_form}"
        )));
    }
    Ok(ExpectedTa {
        value: 0.5 * (m_form + fubini_form),
        m_form,
        fubini_form,
    })
}

fn pieces(chart: &Chart, lo: f64, hi: f64) -> Vec<f64> {
    let mut pts = vec![lo];
    for b in [-10.0, 0.0, chart.far_field_start()] {
        if b > lo && b < hi {
            pts.push(b);
        }
    }
    pts.push(hi);
    pts
}

fn integrate(f: impl Fn(f64) -> f64, pts: &[f64], tol: f64) -> Result<f64> {
    let quad = Quadrature::new(tol).max_evals(2_000_000);
    let mut sum = 0.0;
    for w in pts.windows(2) {
        if w[1] > w[0] {
            sum += quad.integrate(&f, w[0], w[1])?.value;
        }
    }
    Ok(sum)
}

// Breakpoints at geometrically growing distances from `anchor` in direction
// `dir`, starting at the local decay length `c/ψ` of `e^{±m}`.
fn layers(chart: &Chart, anchor: f64, dir: f64, reach: f64) -> Vec<f64> {
    let rate = chart.psi(anchor) / chart.c();
    let mut pts = Vec::new();
    if rate > 1.0 {
        let mut dist = 1.0 / rate;
        while dist < reach {
            pts.push(anchor + dir * dist);
            dist *= 8.0;
        }
    }
    pts
}

fn with_points(mut pts: Vec<f64>, extra: Vec<f64>) -> Vec<f64> {
    let (lo, hi) = (pts[0], *pts.last().unwrap());
    pts.extend(extra.into_iter().filter(|&p| p > lo && p < hi));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

fn m_form(chart: &Chart, x0: Option<f64>, tol: f64) -> Result<f64> {
    let inner_tol = tol * 1e-2;
    // e^{-m(x)} θ(x) = ∫_{-∞}^x e^{m(y) - m(x)} h(y) dy
    let damped_theta = |x: f64| -> f64 {
        let a = chart.psi(x) / chart.c();
        if a > LAYER_RATE {
            let ha = chart.h(x) / a;
            let ha_prime = (chart.h_prime(x) - ha * chart.rate_prime(x)) / a;
            return ha - ha_prime / a;
        }
        let f = |y: f64| chart.decay(y, x) * chart.h(y);
        let lo = X_LOW.min(x - 1.0);
        let mut extra = layers(chart, x, -1.0, SPLIT);
        extra.push(x - SPLIT);
        let pts = with_points(pieces(chart, lo, x), extra);
        integrate(f, &pts, inner_tol).unwrap_or(f64::NAN)
    };
    let outer = |x: f64| chart.weight(x, x0) * damped_theta(x);
    let value = integrate(outer, &pieces(chart, X_LOW, chart.x_max()), tol)?;
    if !value.is_finite() {
        return Err(Error::Riccati(
            "E(T_a) quadrature produced a non-finite value".into(),
        ));
    }
    Ok(value / chart.c())
}

fn fubini_form(chart: &Chart, x0: Option<f64>, tol: f64) -> Result<f64> {
    let inner_tol = tol * 1e-2;
    // e^{m(y)} ∫_y^∞ e^{-m(x)} F(x) dx
    let damped_tail = |y: f64| -> f64 {
        let a = chart.psi(y) / chart.c();
        if a > LAYER_RATE {
            let fa = chart.weight(y, x0) / a;
            let fa_prime = (chart.weight_prime(y, x0) - fa * chart.rate_prime(y)) / a;
            return fa + fa_prime / a;
        }
        let f = |x: f64| chart.decay(y, x) * chart.weight(x, x0);
        let far = chart.far_field_start().max(y);
        let hi = chart.x_max().max(far + SPLIT);
        let mut extra = layers(chart, y, 1.0, SPLIT);
        extra.extend([far, far + SPLIT]);
        let pts = with_points(vec![y, hi], extra);
        integrate(f, &pts, inner_tol).unwrap_or(f64::NAN)
    };
    let outer = |y: f64| chart.h(y) * damped_tail(y);
    let value = integrate(outer, &pieces(chart, X_LOW, chart.x_max()), tol)?;
    if !value.is_finite() {
        return Err(Error::Riccati(
            "E(T_a) quadrature produced a non-finite value".into(),
        ));
    }
    Ok(value / chart.c())
}
