/// Coefficients of `exp(g(s))` for a power series `g(s) = Σ_{k≥1} g[k] s^k`.
///
/// `g[0]` is ignored (a constant term only rescales the result). Returns
/// `a[0..n]` with `a[0] = 1`, using `n a_n = Σ_{k=1}^{n} k g_k a_{n-k}`.
pub fn power_series_exp(g: &[f64], n: usize) -> Vec<f64> {
    let mut a = vec![0.0; n];
    if n == 0 {
        return a;
    }
    a[0] = 1.0;
    for m in 1..n {
        let top = m.min(g.len().saturating_sub(1));
        let mut acc = 0.0;
        for k in 1..=top {
            acc += k as f64 * g[k] * a[m - k];
        }
        a[m] = acc / m as f64;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_of_linear_is_poisson_weights() {
        let a = power_series_exp(&[0.0, 2.0], 12);
        let mut fact = 1.0;
        for (n, &an) in a.iter().enumerate() {
            if n > 0 {
                fact *= n as f64;
            }
            assert!((an - 2f64.powi(n as i32) / fact).abs() < 1e-13);
        }
    }

    #[test]
    fn exp_of_log_series() {
        // exp(-ln(1-s)) = 1/(1-s): every coefficient is 1.
        let g: Vec<f64> = (0..30)
            .map(|k| if k == 0 { 0.0 } else { 1.0 / k as f64 })
            .collect();
        for an in power_series_exp(&g, 30) {
            assert!((an - 1.0).abs() < 1e-12);
        }
    }
}
