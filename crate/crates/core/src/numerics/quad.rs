use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::NumericsError;

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// Behaviour of an integrand near one endpoint of the interval.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Endpoint {
    #[default]
    Regular,
    /// Integrable envelope `|x - e|^exponent`, `exponent > -1`. Negative
    /// exponents trigger the substitution `x = e ± (b - a) t^p` with
    /// `p = 1 / (1 + exponent)`, which makes the transformed integrand bounded.
    /// Logarithmic singularities are handled well by any negative exponent.
    Power(f64),
}

impl Endpoint {
    fn substitution_power(self) -> Option<f64> {
        match self {
            Endpoint::Power(alpha) if alpha < 0.0 => Some(1.0 / (1.0 + alpha.max(-0.95))),
            _ => None,
        }
    }
}

/// Globally adaptive Gauss–Kronrod quadrature.
///
/// Converged when the summed error estimate is at most
/// `max(abs_tol, rel_tol * |value|)`. An infinite upper limit is mapped to
/// `[0, 1)` with `x = a + t / (1 - t)`.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_evals: usize,
    pub left: Endpoint,
    pub right: Endpoint,
}

impl Quadrature {
    pub fn new(tol: f64) -> Self {
        Self {
            abs_tol: tol,
            rel_tol: tol,
            max_evals: 400_000,
            left: Endpoint::Regular,
            right: Endpoint::Regular,
        }
    }

    pub fn left(mut self, e: Endpoint) -> Self {
        self.left = e;
        self
    }

    pub fn right(mut self, e: Endpoint) -> Self {
        self.right = e;
        self
    }

    pub fn rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn max_evals(mut self, n: usize) -> Self {
        self.max_evals = n;
        self
    }

    pub fn integrate<F>(&self, mut f: F, a: f64, b: f64) -> Result<QuadResult, NumericsError>
    where
        F: FnMut(f64) -> f64,
    {
        self.integrate_dyn(&mut f, a, b)
    }

    fn integrate_dyn(
        &self,
        f: &mut dyn FnMut(f64) -> f64,
        a: f64,
        b: f64,
    ) -> Result<QuadResult, NumericsError> {
        if a == b {
            return Ok(QuadResult {
                value: 0.0,
                error_estimate: 0.0,
                evaluations: 0,
            });
        }
        if b < a {
            let flipped = Quadrature {
                left: self.right,
                right: self.left,
                ..*self
            };
            let r = flipped.integrate_dyn(f, b, a)?;
            return Ok(QuadResult {
                value: -r.value,
                ..r
            });
        }
        if b.is_infinite() {
            assert!(a.is_finite(), "only the upper limit may be infinite");
            let mapped = Quadrature {
                right: Endpoint::Regular,
                ..*self
            };
            return mapped.integrate_dyn(
                &mut |t: f64| {
                    let one_minus = 1.0 - t;
                    if one_minus <= 0.0 {
                        return 0.0;
                    }
                    let x = a + t / one_minus;
                    let v = f(x);
                    if v == 0.0 {
                        0.0
                    } else {
                        v / (one_minus * one_minus)
                    }
                },
                0.0,
                1.0,
            );
        }

        match (
            self.left.substitution_power(),
            self.right.substitution_power(),
        ) {
            (None, None) => integrate_plain(f, a, b, self),
            (Some(p), None) => {
                let w = b - a;
                integrate_plain(
                    &mut |t: f64| {
                        if t <= 0.0 {
                            return 0.0;
                        }
                        w * p * t.powf(p - 1.0) * f(a + w * t.powf(p))
                    },
                    0.0,
                    1.0,
                    self,
                )
            }
            (None, Some(p)) => {
                let w = b - a;
                integrate_plain(
                    &mut |t: f64| {
                        if t <= 0.0 {
                            return 0.0;
                        }
                        w * p * t.powf(p - 1.0) * f(b - w * t.powf(p))
                    },
                    0.0,
                    1.0,
                    self,
                )
            }
            (Some(_), Some(_)) => {
                let m = 0.5 * (a + b);
                let half = Quadrature {
                    abs_tol: 0.5 * self.abs_tol,
                    max_evals: self.max_evals / 2,
                    ..*self
                };
                let lo = Quadrature {
                    right: Endpoint::Regular,
                    ..half
                }
                .integrate_dyn(f, a, m)?;
                let hi = Quadrature {
                    left: Endpoint::Regular,
                    ..half
                }
                .integrate_dyn(f, m, b)?;
                Ok(QuadResult {
                    value: lo.value + hi.value,
                    error_estimate: lo.error_estimate + hi.error_estimate,
                    evaluations: lo.evaluations + hi.evaluations,
                })
            }
        }
    }
}

/// `∫_a^b f` to tolerance `tol` with optional endpoint hints.
pub fn adaptive_quad<F>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
    hints: (Endpoint, Endpoint),
) -> Result<QuadResult, NumericsError>
where
    F: FnMut(f64) -> f64,
{
    Quadrature::new(tol)
        .left(hints.0)
        .right(hints.1)
        .integrate(f, a, b)
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn gk15<F: FnMut(f64) -> f64 + ?Sized>(
    f: &mut F,
    a: f64,
    b: f64,
) -> Result<Segment, NumericsError> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];

    let eval = |f: &mut F, x: f64| -> Result<f64, NumericsError> {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(NumericsError::NonFiniteIntegrand { x })
        }
    };

    let fc = eval(f, center)?;
    let mut resg = fc * WG[3];
    let mut resk = fc * WGK[7];
    let mut resabs = resk.abs();
    for (j, &wg) in WG.iter().take(3).enumerate() {
        let jtw = 2 * j + 1;
        let dx = half * XGK[jtw];
        let f1 = eval(f, center - dx)?;
        let f2 = eval(f, center + dx)?;
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        resg += wg * (f1 + f2);
        resk += WGK[jtw] * (f1 + f2);
        resabs += WGK[jtw] * (f1.abs() + f2.abs());
    }
    for j in 0..4 {
        let jtwm1 = 2 * j;
        let dx = half * XGK[jtwm1];
        let f1 = eval(f, center - dx)?;
        let f2 = eval(f, center + dx)?;
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        resk += WGK[jtwm1] * (f1 + f2);
        resabs += WGK[jtwm1] * (f1.abs() + f2.abs());
    }
    let reskh = 0.5 * resk;
    let mut resasc = WGK[7] * (fc - reskh).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }
    let value = resk * half;
    let resabs = resabs * half.abs();
    let resasc = resasc * half.abs();
    let mut err = ((resk - resg) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    Ok(Segment { a, b, value, err })
}

fn integrate_plain<F: FnMut(f64) -> f64 + ?Sized>(
    f: &mut F,
    a: f64,
    b: f64,
    cfg: &Quadrature,
) -> Result<QuadResult, NumericsError> {
    let first = gk15(f, a, b)?;
    let mut evaluations = 15;
    let mut heap = BinaryHeap::new();
    let mut frozen_value = 0.0;
    let mut frozen_err = 0.0;
    let mut total_value = first.value;
    let mut total_err = first.err;
    heap.push(first);

    loop {
        let tol = cfg.abs_tol.max(cfg.rel_tol * total_value.abs());
        if total_err <= tol {
            break;
        }
        if evaluations >= cfg.max_evals {
            return Err(NumericsError::QuadratureNonConvergence {
                value: total_value,
                error_estimate: total_err,
                evaluations,
            });
        }
        let Some(seg) = heap.pop() else {
            // Every remaining segment is at the resolution limit.
            if total_err <= 10.0 * tol {
                break;
            }
            return Err(NumericsError::QuadratureNonConvergence {
                value: total_value,
                error_estimate: total_err,
                evaluations,
            });
        };
        let mid = 0.5 * (seg.a + seg.b);
        let scale = seg.a.abs().max(seg.b.abs()).max(f64::MIN_POSITIVE);
        if (seg.b - seg.a) <= 1e3 * f64::EPSILON * scale {
            frozen_value += seg.value;
            frozen_err += seg.err;
            continue;
        }
        let left = gk15(f, seg.a, mid)?;
        let right = gk15(f, mid, seg.b)?;
        evaluations += 30;
        total_value += left.value + right.value - seg.value;
        total_err += left.err + right.err - seg.err;
        heap.push(left);
        heap.push(right);
    }

    // Re-sum to shed the drift of the running totals.
    let (mut value, mut err) = (frozen_value, frozen_err);
    for s in heap.iter() {
        value += s.value;
        err += s.err;
    }
    Ok(QuadResult {
        value,
        error_estimate: err,
        evaluations,
    })
}
