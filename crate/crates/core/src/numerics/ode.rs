use super::NumericsError;

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Continuous extension (Hairer, Nørsett & Wanner, dense output of DOPRI5).
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Adaptive explicit Runge–Kutta (Dormand–Prince 5(4)) with dense output.
///
/// Integration may run in either direction. A guard predicate is consulted on
/// every trial step; a rejected step is retried with a quarter of the step
/// size, and repeated rejection down to the minimum step is reported as
/// [`NumericsError::GuardViolated`].
#[derive(Debug, Clone, Copy)]
pub struct OdeSolver {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: Option<f64>,
    pub max_steps: usize,
}

impl Default for OdeSolver {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            h_init: None,
            max_steps: 200_000,
        }
    }
}

impl OdeSolver {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            ..Self::default()
        }
    }

    pub fn solve<F, G>(
        &self,
        mut field: F,
        t0: f64,
        y0: &[f64],
        t1: f64,
        mut guard: G,
    ) -> Result<DenseSolution, NumericsError>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
        G: FnMut(f64, &[f64]) -> bool,
    {
        let dim = y0.len();
        let span = t1 - t0;
        let dir = if span >= 0.0 { 1.0 } else { -1.0 };
        let mut sol = DenseSolution {
            dim,
            t: vec![t0],
            y: y0.to_vec(),
            coeffs: Vec::new(),
        };
        if span == 0.0 {
            return Ok(sol);
        }

        let mut k = vec![vec![0.0; dim]; 7];
        let mut ytmp = vec![0.0; dim];
        let mut ynew = vec![0.0; dim];
        let mut y = y0.to_vec();
        let mut t = t0;
        field(t, &y, &mut k[0]);

        let mut h = self
            .h_init
            .map(|h| h.abs())
            .unwrap_or(span.abs() * 1e-3)
            .min(span.abs())
            * dir;
        let mut steps = 0usize;
        let mut last_guard_reject = false;

        while (t1 - t) * dir > 0.0 {
            if steps >= self.max_steps {
                return Err(NumericsError::TooManySteps {
                    t,
                    max_steps: self.max_steps,
                });
            }
            let h_min = 1e-14 * t.abs().max(1.0);
            if h.abs() < h_min {
                return Err(if last_guard_reject {
                    NumericsError::GuardViolated { t }
                } else {
                    NumericsError::StepSizeUnderflow { t, h }
                });
            }
            if ((t + h) - t1) * dir > 0.0 {
                h = t1 - t;
            }

            // Stages.
            let stage = |ytmp: &mut [f64], coef: &[(usize, f64)], k: &[Vec<f64>]| {
                for i in 0..dim {
                    let mut acc = y[i];
                    for &(j, a) in coef {
                        acc += h * a * k[j][i];
                    }
                    ytmp[i] = acc;
                }
            };
            stage(&mut ytmp, &[(0, A21)], &k);
            let (head, tail) = k.split_at_mut(1);
            field(t + C2 * h, &ytmp, &mut tail[0]);
            let _ = head;
            stage(&mut ytmp, &[(0, A31), (1, A32)], &k);
            field(t + C3 * h, &ytmp, &mut k[2]);
            stage(&mut ytmp, &[(0, A41), (1, A42), (2, A43)], &k);
            field(t + C4 * h, &ytmp, &mut k[3]);
            stage(&mut ytmp, &[(0, A51), (1, A52), (2, A53), (3, A54)], &k);
            field(t + C5 * h, &ytmp, &mut k[4]);
            stage(
                &mut ytmp,
                &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)],
                &k,
            );
            field(t + h, &ytmp, &mut k[5]);
            stage(
                &mut ynew,
                &[(0, A71), (2, A73), (3, A74), (4, A75), (5, A76)],
                &k,
            );
            field(t + h, &ynew, &mut k[6]);
            steps += 1;

            let mut err = 0.0;
            let mut finite = true;
            for i in 0..dim {
                let e = h
                    * (E1 * k[0][i]
                        + E3 * k[2][i]
                        + E4 * k[3][i]
                        + E5 * k[4][i]
                        + E6 * k[5][i]
                        + E7 * k[6][i]);
                let sc = self.atol + self.rtol * y[i].abs().max(ynew[i].abs());
                err += (e / sc).powi(2);
                finite &= ynew[i].is_finite() && k[6][i].is_finite();
            }
            let err = (err / dim as f64).sqrt();

            if !finite || !err.is_finite() {
                last_guard_reject = false;
                h *= 0.25;
                continue;
            }
            if err > 1.0 {
                last_guard_reject = false;
                h *= (0.9 * err.powf(-0.2)).max(0.2);
                continue;
            }
            if !guard(t + h, &ynew) {
                last_guard_reject = true;
                h *= 0.25;
                continue;
            }
            last_guard_reject = false;

            for i in 0..dim {
                let r2 = ynew[i] - y[i];
                let r3 = h * k[0][i] - r2;
                let r4 = r2 - h * k[6][i] - r3;
                let r5 = h
                    * (D1 * k[0][i]
                        + D3 * k[2][i]
                        + D4 * k[3][i]
                        + D5 * k[4][i]
                        + D6 * k[5][i]
                        + D7 * k[6][i]);
                sol.coeffs.extend_from_slice(&[y[i], r2, r3, r4, r5]);
            }
            t += h;
            if (t1 - t) * dir <= 0.0 {
                t = t1;
            }
            y.copy_from_slice(&ynew);
            sol.t.push(t);
            sol.y.extend_from_slice(&y);
            k.swap(0, 6);

            let fac = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h *= fac;
        }
        Ok(sol)
    }
}

/// Piecewise quartic dense output of an [`OdeSolver`] run.
///
/// Nodes are stored in integration order, so `t` is decreasing for a
/// backward run.
#[derive(Debug, Clone)]
pub struct DenseSolution {
    dim: usize,
    t: Vec<f64>,
    y: Vec<f64>,
    // Per step and component: r1..r5.
    coeffs: Vec<f64>,
}

impl DenseSolution {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn steps(&self) -> usize {
        self.t.len() - 1
    }

    pub fn t_start(&self) -> f64 {
        self.t[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.t.last().unwrap()
    }

    pub fn times(&self) -> &[f64] {
        &self.t
    }

    /// State at node `i`.
    pub fn node(&self, i: usize) -> &[f64] {
        &self.y[i * self.dim..(i + 1) * self.dim]
    }

    pub fn contains(&self, t: f64) -> bool {
        let (lo, hi) = self.bounds();
        t >= lo && t <= hi
    }

    fn bounds(&self) -> (f64, f64) {
        let (a, b) = (self.t_start(), self.t_end());
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }

    fn locate(&self, t: f64) -> Option<(usize, f64)> {
        if self.steps() == 0 || !self.contains(t) {
            return None;
        }
        let forward = self.t_end() >= self.t_start();
        // First node strictly past t in integration order.
        let idx = self
            .t
            .partition_point(|&ti| if forward { ti <= t } else { ti >= t });
        let seg = idx.saturating_sub(1).min(self.steps() - 1);
        let h = self.t[seg + 1] - self.t[seg];
        Some((seg, (t - self.t[seg]) / h))
    }

    /// Component `comp` at time `t` (`None` outside the integrated range).
    pub fn eval(&self, t: f64, comp: usize) -> Option<f64> {
        let (seg, th) = self.locate(t)?;
        let c = &self.coeffs[(seg * self.dim + comp) * 5..(seg * self.dim + comp) * 5 + 5];
        Some(c[0] + th * (c[1] + (1.0 - th) * (c[2] + th * (c[3] + (1.0 - th) * c[4]))))
    }

    /// Time derivative of the dense interpolant.
    pub fn eval_derivative(&self, t: f64, comp: usize) -> Option<f64> {
        let (seg, th) = self.locate(t)?;
        let h = self.t[seg + 1] - self.t[seg];
        let c = &self.coeffs[(seg * self.dim + comp) * 5..(seg * self.dim + comp) * 5 + 5];
        let d = c[1]
            + (1.0 - 2.0 * th) * c[2]
            + th * (2.0 - 3.0 * th) * c[3]
            + 2.0 * th * (1.0 - th) * (1.0 - 2.0 * th) * c[4];
        Some(d / h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn accept_all(_: f64, _: &[f64]) -> bool {
        true
    }

    #[test]
    fn exponential_growth() {
        let sol = OdeSolver::new(1e-12, 1e-14)
            .solve(|_, y, dy| dy[0] = y[0], 0.0, &[1.0], 1.0, accept_all)
            .unwrap();
        let y1 = sol.node(sol.steps())[0];
        assert!((y1 - std::f64::consts::E).abs() < 1e-10);
    }

    #[test]
    fn gaussian_decay() {
        let sol = OdeSolver::new(1e-12, 1e-14)
            .solve(
                |t, y, dy| dy[0] = -2.0 * t * y[0],
                0.0,
                &[1.0],
                1.0,
                accept_all,
            )
            .unwrap();
        assert!((sol.node(sol.steps())[0] - (-1.0f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn riccati_stable_branch_matches_tanh() {
        // y' = y^2 - 1, y(0) = 0 has y = -tanh t, tending to the stable root -1.
        let sol = OdeSolver::new(1e-12, 1e-14)
            .solve(
                |_, y, dy| dy[0] = y[0] * y[0] - 1.0,
                0.0,
                &[0.0],
                40.0,
                accept_all,
            )
            .unwrap();
        for &t in &[0.3, 1.0, 2.5, 7.0, 40.0] {
            let y = sol.eval(t, 0).unwrap();
            assert!((y + t.tanh()).abs() < 1e-9, "t={t} y={y}");
        }
        assert!((sol.eval(40.0, 0).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn backward_integration_and_dense_output() {
        let sol = OdeSolver::new(1e-11, 1e-13)
            .solve(
                |_, y, dy| dy[0] = y[0],
                2.0,
                &[2.0f64.exp()],
                0.0,
                accept_all,
            )
            .unwrap();
        assert!(sol.t_end() == 0.0);
        for i in 0..50 {
            let t = 2.0 * i as f64 / 49.0;
            let y = sol.eval(t, 0).unwrap();
            assert!((y - t.exp()).abs() < 1e-9 * t.exp(), "t={t}");
            let dy = sol.eval_derivative(t, 0).unwrap();
            assert!((dy - t.exp()).abs() < 1e-7 * t.exp(), "t={t} dy={dy}");
        }
        assert!(sol.eval(2.5, 0).is_none());
    }

    #[test]
    fn dense_interpolant_is_fourth_order() {
        // Halving a fixed step should cut the midpoint error by ~2^5.
        let mid_err = |h: f64| {
            let s = OdeSolver {
                rtol: 1.0,
                atol: 1.0,
                h_init: Some(h),
                max_steps: 10,
            };
            let sol = s
                .solve(|_, y, dy| dy[0] = y[0], 0.0, &[1.0], h, accept_all)
                .unwrap();
            (sol.eval(0.5 * h, 0).unwrap() - (0.5 * h).exp()).abs()
        };
        let ratio = mid_err(0.2) / mid_err(0.1);
        assert!(ratio > 20.0, "ratio {ratio}");
    }

    #[test]
    fn guard_rejection_shrinks_steps_then_fails() {
        let err = OdeSolver::default()
            .solve(|_, _, dy| dy[0] = 1.0, 0.0, &[0.0], 2.0, |_, y| y[0] < 1.0)
            .unwrap_err();
        assert!(
            matches!(err, NumericsError::GuardViolated { .. }),
            "{err:?}"
        );
    }

    #[test]
    fn vector_system() {
        // Harmonic oscillator over one period.
        let sol = OdeSolver::new(1e-12, 1e-14)
            .solve(
                |_, y, dy| {
                    dy[0] = y[1];
                    dy[1] = -y[0];
                },
                0.0,
                &[1.0, 0.0],
                2.0 * std::f64::consts::PI,
                accept_all,
            )
            .unwrap();
        let end = sol.node(sol.steps());
        assert!((end[0] - 1.0).abs() < 1e-9 && end[1].abs() < 1e-9);
    }
}
