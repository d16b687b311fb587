const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Entire exponential integral `Ein(z) = ∫_0^z (1 - e^{-t})/t dt`, `z ≥ 0`.
pub fn ein(z: f64) -> f64 {
    if z < 1.0 {
        // Alternating series; terms shrink fast for z < 1.
        let mut term = z;
        let mut sum = z;
        let mut k = 1.0;
        while term.abs() > 1e-17 * sum.abs() {
            term *= -z * k / ((k + 1.0) * (k + 1.0));
            sum += term;
            k += 1.0;
        }
        sum
    } else {
        expint_e1(z) + z.ln() + EULER_GAMMA
    }
}

/// Exponential integral `E_1(z) = ∫_z^∞ e^{-t}/t dt`, `z > 0`.
pub fn expint_e1(z: f64) -> f64 {
    if z < 1.0 {
        return ein(z) - z.ln() - EULER_GAMMA;
    }
    if z > 740.0 {
        return 0.0;
    }
    // Modified Lentz on the continued fraction e^{-z}/(z+1-1/(z+3-4/(z+5-...))).
    let tiny = 1e-300;
    let mut b = z + 1.0;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h * (-z).exp()
}

/// `ln(1 + e^x)` without overflow.
pub fn log1p_exp(x: f64) -> f64 {
    if x > 35.0 {
        x + (-x).exp()
    } else if x < -35.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Quadrature;

    #[test]
    fn e1_reference_values() {
        // Abramowitz & Stegun table 5.1.
        assert!((expint_e1(1.0) - 0.219_383_934_395_520_3).abs() < 1e-15);
        assert!((expint_e1(0.5) - 0.559_773_594_776_160_8).abs() < 1e-15);
        assert!((expint_e1(5.0) - 0.001_148_295_591_275_326).abs() < 1e-17);
    }

    #[test]
    fn ein_matches_quadrature() {
        for &z in &[1e-8, 0.01, 0.3, 0.99, 1.0, 2.5, 10.0, 60.0] {
            let q = Quadrature::new(1e-13)
                .integrate(
                    |t: f64| if t == 0.0 { 1.0 } else { -(-t).exp_m1() / t },
                    0.0,
                    z,
                )
                .unwrap();
            assert!((ein(z) - q.value).abs() < 2e-13 * (1.0 + q.value), "z={z}");
        }
    }

    #[test]
    fn ein_large_argument_is_logarithmic() {
        let z = 1e12;
        assert!((ein(z) - (z.ln() + EULER_GAMMA)).abs() < 1e-12);
    }

    #[test]
    fn log1p_exp_is_stable() {
        assert_eq!(log1p_exp(1000.0), 1000.0);
        assert!((log1p_exp(0.0) - 2f64.ln()).abs() < 1e-16);
        assert!(log1p_exp(-1000.0) == 0.0);
    }
}
