use lbp_core::mechanism::{ContinuousMechanism, DiscreteMechanism, Mechanism};
use lbp_core::numerics::Quadrature;
use lbp_core::riccati::{expected_ta, r_func, solve_wq, RiccatiOptions, Schedule};

fn binary(rho: f64, d: f64, c: f64) -> Mechanism {
    DiscreteMechanism::binary(rho, d, c).unwrap().into()
}

fn feller() -> Mechanism {
    ContinuousMechanism::feller(1.0, 1.0, 1.0).unwrap().into()
}

/// `E_i e^{-q T_a}` (rhs = 0) or `E_i T_a` (q = 0, rhs = 1) for the binary
/// chain truncated at `n` with a reflecting top state, by the Thomas algorithm.
fn chain(rho: f64, d: f64, c: f64, q: f64, rhs: f64, n: usize) -> Vec<f64> {
    let u0 = if rhs == 0.0 { 1.0 } else { 0.0 };
    let (mut sub, mut diag, mut sup, mut r) = (
        vec![0.0; n + 1],
        vec![0.0; n + 1],
        vec![0.0; n + 1],
        vec![rhs; n + 1],
    );
    for i in 1..=n {
        let fi = i as f64;
        let up = if i < n { rho * fi } else { 0.0 };
        let down = d * fi + c * fi * (fi - 1.0);
        diag[i] = q + up + down;
        sup[i] = -up;
        sub[i] = -down;
    }
    r[1] -= sub[1] * u0;
    sub[1] = 0.0;
    let (mut cp, mut dp) = (vec![0.0; n + 1], vec![0.0; n + 1]);
    for i in 1..=n {
        let den = diag[i] - sub[i] * cp[i - 1];
        cp[i] = sup[i] / den;
        dp[i] = (r[i] - sub[i] * dp[i - 1]) / den;
    }
    let mut u = vec![u0; n + 1];
    u[n] = dp[n];
    for i in (1..n).rev() {
        u[i] = dp[i] - cp[i] * u[i + 1];
    }
    u
}

#[test]
fn solution_quality_both_settings() {
    for mech in [binary(1.0, 1.0, 1.0), binary(2.0, 0.4, 1.0), feller()] {
        for q in [0.1, 1.0, 10.0] {
            let sol = solve_wq(&mech, q, &RiccatiOptions::default()).unwrap();
            let d = sol.diagnostics();
            assert!(d.max_residual < 1e-6, "{}", d.max_residual);
            assert!(d.positive && d.endpoint_domination && d.endpoint_decrease);
            assert!(sol.grid().last().unwrap().w < 1e-8);
            let alt = solve_wq(
                &mech,
                q,
                &RiccatiOptions::default().with_schedule(Schedule::Alternate),
            )
            .unwrap();
            assert!(sol.sup_distance(&alt) < 1e-7);
        }
    }
}

#[test]
fn larger_q_gives_larger_w() {
    for mech in [binary(1.0, 1.0, 1.0), feller()] {
        let a = solve_wq(&mech, 1.0, &RiccatiOptions::default()).unwrap();
        let b = solve_wq(&mech, 2.0, &RiccatiOptions::default()).unwrap();
        for p in a.grid().iter().filter(|p| p.x < a.x_far()) {
            assert!(b.w_at_x(p.x) > p.w, "x = {}", p.x);
        }
    }
}

// Fixed-step RK4 on y' = y² - q r² written in the chart x with u = 1/(1+e^x),
// started from y = 0 at the same endpoint as the adaptive solver.
#[test]
fn fixed_step_oracle_discrete() {
    let (rho, d, c, q) = (1.0, 1.0, 1.0, 1.0);
    let dm = DiscreteMechanism::binary(rho, d, c).unwrap();
    let mech: Mechanism = dm.clone().into();
    let sol = solve_wq(&mech, q, &RiccatiOptions::default()).unwrap();
    let f = |x: f64, g: f64| {
        let u = 1.0 / (1.0 + x.exp());
        let h = u * (1.0 - u);
        h * g * g + dm.psi(u).unwrap() / c * g - q / c
    };
    let step = 1e-3;
    let mut x = sol.x_t();
    let mut g = 0.0;
    let mut worst = 0.0f64;
    while x > -20.0 {
        let k1 = f(x, g);
        let k2 = f(x - step / 2.0, g - step / 2.0 * k1);
        let k3 = f(x - step / 2.0, g - step / 2.0 * k2);
        let k4 = f(x - step, g - step * k3);
        g -= step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        x -= step;
        if (x * 10.0).round() == x * 10.0 || x.fract().abs() < step / 2.0 {
            let u = 1.0 / (1.0 + x.exp());
            let w = g / dm.exp_m(u).unwrap();
            worst = worst.max((w - sol.w_at_x(x)).abs() / (1.0 + w));
        }
    }
    assert!(worst < 1e-9, "{worst}");
}

// Residual of the original equation in the Riccati variable s, using the
// mechanism's own r(s) and a central difference of w along s.
#[test]
fn residual_in_riccati_variable() {
    for mech in [binary(1.0, 1.0, 1.0), feller()] {
        let q = 1.0;
        let sol = solve_wq(&mech, q, &RiccatiOptions::default()).unwrap();
        for x in [-3.0, -1.0, 0.0, 0.5, 1.0] {
            let dx = 1e-4;
            let s_of = |x: f64| mech.theta(chart_p(&mech, x), 1e-13).unwrap();
            let (s0, s1, s2) = (s_of(x - dx), s_of(x), s_of(x + dx));
            let dw = (sol.w_at_x(x + dx) - sol.w_at_x(x - dx)) / (s2 - s0);
            let w = sol.w_at_x(x);
            let r = r_func(&mech, s1, 1e-12).unwrap();
            let res = (dw - w * w + q * r * r) / (w * w + q * r * r);
            assert!(res.abs() < 1e-6, "x = {x}: {res}");
        }
    }
}

fn chart_p(mech: &Mechanism, x: f64) -> f64 {
    match mech {
        Mechanism::Discrete(_) => 1.0 / (1.0 + x.exp()),
        Mechanism::Continuous(_) => x.exp(),
    }
}

#[test]
fn discrete_transforms_match_chain() {
    let n = 40_000;
    for (rho, d, c) in [(1.0, 1.0, 1.0), (1.0, 0.3, 1.0), (2.0, 3.0, 0.5)] {
        let mech = binary(rho, d, c);
        let sol = solve_wq(&mech, 1.0, &RiccatiOptions::default()).unwrap();
        let lt = chain(rho, d, c, 1.0, 0.0, n);
        let et = chain(rho, d, c, 0.0, 1.0, n);
        for x0 in [1usize, 2, 5, 20] {
            let a = sol.laplace_ta_from(x0 as f64).unwrap();
            assert!((a - lt[x0]).abs() < 1e-8, "{a} vs {}", lt[x0]);
            let e = expected_ta(&mech, Some(x0 as f64), 1e-10).unwrap();
            assert!(
                (e.value - et[x0]).abs() < 1e-7 * et[x0],
                "{} vs {}",
                e.value,
                et[x0]
            );
        }
        // The chain at state n still needs about 1/(c n) to come down from infinity.
        let inf = sol.laplace_ta_infinity().unwrap();
        assert!((inf - lt[n]).abs() < 2.0 / (c * n as f64));
        let e = expected_ta(&mech, None, 1e-10).unwrap();
        assert!((e.value - et[n] - 1.0 / (c * n as f64)).abs() < 1e-6);
    }
}

// Scale and speed densities of dZ = (bZ - cZ²)dt + sqrt(γZ) dB give
// E_x T_0 = ∫_0^x s'(z) ∫_z^∞ 2 / (γ y s'(y)) dy dz.
#[test]
fn feller_expected_time_matches_diffusion_formula() {
    let (b, c, gamma, x) = (1.0, 1.0, 1.0, 1.0);
    let quad = Quadrature::new(1e-13);
    let inner = |z: f64| {
        let f =
            |y: f64| 2.0 / (gamma * y) * ((2.0 * b * (y - z) - c * (y * y - z * z)) / gamma).exp();
        quad.integrate(f, z, z + 40.0).unwrap().value
    };
    let oracle = quad
        .integrate(|z| if z == 0.0 { 0.0 } else { inner(z) }, 0.0, x)
        .unwrap()
        .value;
    let e = expected_ta(&feller(), Some(x), 1e-10).unwrap();
    assert!(
        (e.value - oracle).abs() < 1e-7 * oracle,
        "{} vs {oracle}",
        e.value
    );
    assert!((e.m_form - e.fubini_form).abs() < 1e-8);
}

#[test]
fn expected_time_is_monotone_in_start() {
    let mech = feller();
    let one = expected_ta(&mech, Some(1.0), 1e-10).unwrap().value;
    let ten = expected_ta(&mech, Some(10.0), 1e-10).unwrap().value;
    let inf = expected_ta(&mech, None, 1e-10).unwrap().value;
    assert!(one < ten && ten < inf);
    assert!(expected_ta(&mech, Some(1e-6), 1e-10).unwrap().value < 1e-4);
}

#[test]
fn q_derivative_of_transform_gives_mean() {
    for mech in [binary(1.0, 1.0, 1.0), feller()] {
        let w = |q: f64| {
            solve_wq(&mech, q, &RiccatiOptions::default())
                .unwrap()
                .total_integral()
        };
        let q = 1e-3;
        let slope = 2.0 * w(q) / q - w(2.0 * q) / (2.0 * q);
        let mean = expected_ta(&mech, None, 1e-10).unwrap().value;
        assert!((slope - mean).abs() < 1e-4 * mean, "{slope} vs {mean}");
    }
}

#[test]
fn transform_limits_and_pins() {
    let sol = solve_wq(&feller(), 1.0, &RiccatiOptions::default()).unwrap();
    assert_eq!(sol.entrance_law(0.0).unwrap(), 1.0);
    let at_inf = sol.laplace_ta_infinity().unwrap();
    assert!((sol.entrance_law(1e8).unwrap() - at_inf).abs() < 1e-6);
    assert_eq!(sol.laplace_ta_from(0.0).unwrap(), 1.0);
    for lambda in [0.5, 1.0, 4.0] {
        assert_eq!(sol.resolvent(0.0, lambda).unwrap(), 1.0);
    }
    assert_eq!(sol.resolvent(1.0, 0.0).unwrap(), 1.0);
    let from_one = sol.laplace_ta_from(1.0).unwrap();
    assert!((sol.resolvent(1.0, 1e7).unwrap() - from_one).abs() < 1e-5);
    let far = sol.laplace_ta_from(200.0).unwrap();
    assert!(far > at_inf && far - at_inf < 1e-2);
    let g = sol.resolvent(1.0, 1.0).unwrap();
    assert!(g > 0.0 && g < 1.0);
}

#[test]
fn entrance_law_is_completely_monotone() {
    let sol = solve_wq(&feller(), 1.0, &RiccatiOptions::default()).unwrap();
    let h = 0.25;
    let f: Vec<f64> = (0..40)
        .map(|i| sol.entrance_law(i as f64 * h).unwrap())
        .collect();
    let mut diff = f.clone();
    for order in 1..=3 {
        diff = diff.windows(2).map(|w| w[1] - w[0]).collect();
        let sign = if order % 2 == 1 { -1.0 } else { 1.0 };
        assert!(diff.iter().all(|&v| sign * v >= -1e-12), "order {order}");
    }
}

#[test]
fn integration_by_parts_identity() {
    for mech in [feller(), binary(1.0, 1.0, 1.0)] {
        let sol = solve_wq(&mech, 1.0, &RiccatiOptions::default()).unwrap();
        let args: &[f64] = match mech {
            Mechanism::Continuous(_) => &[0.5, 1.0, 2.0],
            Mechanism::Discrete(_) => &[0.2, 0.5, 0.8],
        };
        for &arg in args {
            let (lhs, rhs) = sol.integration_by_parts_check(arg).unwrap();
            assert!((lhs - rhs).abs() < 1e-6 * rhs, "{lhs} vs {rhs}");
        }
    }
}

#[test]
fn integral_of_w_limits() {
    let sol = solve_wq(&binary(1.0, 1.0, 1.0), 1.0, &RiccatiOptions::default()).unwrap();
    assert_eq!(sol.integral_wq(0.0).unwrap(), 0.0);
    assert!(sol.integral_wq(1e-12).unwrap() < 1e-4);
    assert_eq!(
        sol.integral_wq(f64::INFINITY).unwrap(),
        sol.total_integral()
    );
    let mid = sol.integral_wq(1.0).unwrap();
    assert!(mid > 0.0 && mid < sol.total_integral());
}

#[test]
fn regimes_without_kernel_are_rejected() {
    let recurrent = binary(1.0, 0.0, 1.0);
    assert!(solve_wq(&recurrent, 1.0, &RiccatiOptions::default()).is_err());
    let sub: Mechanism = ContinuousMechanism::feller(1.0, 0.0, 1.0).unwrap().into();
    assert!(solve_wq(&sub, 1.0, &RiccatiOptions::default()).is_err());
    assert!(solve_wq(&feller(), 0.0, &RiccatiOptions::default()).is_err());
}

#[test]
fn csv_export_has_metadata() {
    let sol = solve_wq(&feller(), 1.0, &RiccatiOptions::default()).unwrap();
    let mut buf = Vec::new();
    sol.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("# q=1\n"));
    assert!(text.contains("\ns,w,W\n"));
    assert!(text.contains("# max_residual="));
}
