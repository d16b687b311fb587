use super::NumericsError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootResult {
    pub root: f64,
    pub iterations: usize,
}

/// Bracketed scalar root finder: Illinois-modified regula falsi with a
/// bisection step whenever the secant update stalls.
#[derive(Debug, Clone, Copy)]
pub struct RootSolver {
    pub xtol: f64,
    pub max_iter: usize,
}

impl Default for RootSolver {
    fn default() -> Self {
        Self {
            xtol: 1e-14,
            max_iter: 200,
        }
    }
}

impl RootSolver {
    pub fn new(xtol: f64) -> Self {
        Self {
            xtol,
            ..Self::default()
        }
    }

    pub fn solve<F: FnMut(f64) -> f64>(
        &self,
        mut g: F,
        lo: f64,
        hi: f64,
    ) -> Result<RootResult, NumericsError> {
        let (mut a, mut b) = (lo, hi);
        let (mut fa, mut fb) = (g(a), g(b));
        if fa == 0.0 {
            return Ok(RootResult {
                root: a,
                iterations: 0,
            });
        }
        if fb == 0.0 {
            return Ok(RootResult {
                root: b,
                iterations: 0,
            });
        }
        if !(fa.signum() != fb.signum()) || fa.is_nan() || fb.is_nan() {
            return Err(NumericsError::NoSignChange {
                lo,
                hi,
                g_lo: fa,
                g_hi: fb,
            });
        }
        // side: which end was retained on the previous step (-1 a, +1 b).
        let mut side = 0i8;
        for it in 1..=self.max_iter {
            let width = (b - a).abs();
            let tol = self.xtol * (1.0 + a.abs().min(b.abs()));
            if width <= tol {
                return Ok(RootResult {
                    root: if fa.abs() < fb.abs() { a } else { b },
                    iterations: it - 1,
                });
            }
            let mut x = (a * fb - b * fa) / (fb - fa);
            let (lo_x, hi_x) = (a.min(b), a.max(b));
            if !x.is_finite() || x <= lo_x || x >= hi_x || it % 8 == 0 {
                x = 0.5 * (a + b);
            }
            let fx = g(x);
            if fx == 0.0 {
                return Ok(RootResult {
                    root: x,
                    iterations: it,
                });
            }
            if fx.is_nan() {
                return Err(NumericsError::RootNonConvergence { iterations: it });
            }
            if fx.signum() == fb.signum() {
                b = x;
                fb = fx;
                if side == -1 {
                    fa *= 0.5;
                }
                side = -1;
            } else {
                a = x;
                fa = fx;
                if side == 1 {
                    fb *= 0.5;
                }
                side = 1;
            }
        }
        Err(NumericsError::RootNonConvergence {
            iterations: self.max_iter,
        })
    }
}

/// Root of `g` in `[lo, hi]` given a sign change there.
pub fn find_root_bracketed<F: FnMut(f64) -> f64>(
    g: F,
    lo: f64,
    hi: f64,
    xtol: f64,
) -> Result<f64, NumericsError> {
    RootSolver::new(xtol).solve(g, lo, hi).map(|r| r.root)
}
