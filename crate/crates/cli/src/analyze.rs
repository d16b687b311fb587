use lbp_core::mechanism::{mu_binary, Mechanism};
use lbp_core::riccati::{expected_ta, solve_wq, RiccatiOptions, RiccatiSolution, Schedule};
use lbp_core::validation::{run_criterion, Check, Suite, ValidationOptions};
use lbp_core::{Config, Error, Result};

use crate::context::Context;
use crate::plot::{Plot, Style};
use crate::report::CommandReport;

// Schedules should agree far below the shooting tolerance; this is the
// sup-norm bound used by the acceptance checks.
const SCHEDULE_AGREEMENT: f64 = 1e-5;
const SERIES_AGREEMENT: f64 = 1e-10;
const MAX_SERIES_TERMS: usize = 1 << 16;
const PIN_TOL: f64 = 1e-8;

fn solve(cfg: &Config, mech: &Mechanism, schedule: Schedule) -> Result<RiccatiSolution> {
    let opts = RiccatiOptions {
        tol_w: cfg.run.tol_w,
        ..RiccatiOptions::default()
    }
    .with_schedule(schedule);
    solve_wq(mech, cfg.run.q, &opts)
}

pub fn stationary(ctx: &Context) -> Result<CommandReport> {
    let cfg = ctx.config()?;
    let mut report = ctx.report();
    match cfg.mechanism()? {
        Mechanism::Discrete(m) => {
            let n = cfg.run.n_max;
            // A long tail of ν needs more terms than are tabulated.
            let mut terms = n;
            let mu = loop {
                match m.mu(terms, cfg.run.tol) {
                    Ok(mu) => break mu,
                    Err(Error::InvalidParameters(_)) if terms < MAX_SERIES_TERMS => terms *= 2,
                    Err(e) => return Err(e),
                }
            };
            let binary = m.max_litter() == 1;
            let closed: Vec<f64> = (1..=n as u64)
                .map(|i| mu_binary(m.rho(), m.c(), i))
                .collect();
            ctx.write(&mut report, "stationary.csv", |w| {
                writeln!(w, "i,mu{}", if binary { ",mu_closed_form" } else { "" })?;
                for i in 0..n {
                    if binary {
                        writeln!(w, "{},{},{}", i + 1, mu[i], closed[i])?;
                    } else {
                        writeln!(w, "{},{}", i + 1, mu[i])?;
                    }
                }
                Ok(())
            })?;
            report.value("series terms", terms as f64);
            if binary {
                let diff = mu
                    .iter()
                    .zip(&closed)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                report.checks.push(Check::below(
                    "series vs conditioned Poisson, max |diff|",
                    diff,
                    SERIES_AGREEMENT,
                ));
            }
            if ctx.plot {
                let pts = |v: &[f64]| {
                    v.iter()
                        .take(n)
                        .enumerate()
                        .map(|(i, &p)| ((i + 1) as f64, p))
                        .collect()
                };
                let mut plot =
                    Plot::new("Stationary law", "i", "mu_i").with("series", pts(&mu), Style::Dots);
                if binary {
                    plot = plot.with("closed form", pts(&closed), Style::Line);
                }
                ctx.write(&mut report, "stationary.svg", |w| plot.write(w))?;
            }
        }
        Mechanism::Continuous(m) => {
            let tol = cfg.run.tol.max(1e-12);
            let mean = m.stationary_mean(tol)?;
            let grid = [0.0, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0];
            let mut rows = Vec::new();
            for &l in &grid {
                rows.push((l, m.stationary_laplace(l, tol)?, m.nu_laplace(l)?));
            }
            ctx.write(&mut report, "stationary.csv", |w| {
                writeln!(w, "lambda,laplace,nu_laplace")?;
                for (l, a, b) in &rows {
                    writeln!(w, "{l},{a},{b}")?;
                }
                Ok(())
            })?;
            report.value("stationary mean", mean);
            if ctx.plot {
                let plot = Plot::new(
                    "Laplace transform of the stationary law",
                    "lambda",
                    "E e^{-lambda Z}",
                )
                .with(
                    "stationary",
                    rows.iter().map(|r| (r.0, r.1)).collect(),
                    Style::Line,
                );
                ctx.write(&mut report, "stationary.svg", |w| plot.write(w))?;
            }
        }
    }
    ctx.finish(report)
}

pub fn extinction(ctx: &Context) -> Result<CommandReport> {
    let cfg = ctx.config()?;
    let mech = cfg.mechanism()?;
    let tol = cfg.run.tol;
    let from_inf = expected_ta(&mech, None, tol)?;
    let sol = solve(cfg, &mech, Schedule::Primary)?;
    let grid: &[f64] = match mech {
        Mechanism::Discrete(_) => &[1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0],
        Mechanism::Continuous(_) => &[0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 100.0, 1000.0],
    };
    let mut rows = Vec::new();
    for &x in grid {
        rows.push((
            x,
            expected_ta(&mech, Some(x), tol)?.value,
            sol.laplace_ta_from(x)?,
        ));
    }
    let lt_inf = sol.laplace_ta_infinity()?;
    let mut report = ctx.report();
    ctx.write(&mut report, "extinction.csv", |w| {
        writeln!(w, "x,expected_Ta,laplace_Ta")?;
        for (x, e, l) in &rows {
            writeln!(w, "{x},{e},{l}")?;
        }
        writeln!(w, "inf,{},{lt_inf}", from_inf.value)
    })?;
    report.value("q", cfg.run.q);
    report.value("E_inf T_a", from_inf.value);
    report.value("E_inf exp(-q T_a)", lt_inf);
    let spread = (from_inf.m_form - from_inf.fubini_form).abs() / from_inf.value;
    report.checks.push(Check::below(
        "quadrature routes for E_inf T_a, relative gap",
        spread,
        1e-8,
    ));
    if ctx.plot {
        let plot = Plot::new("Expected absorption time", "x", "E_x T_a")
            .log_x()
            .with(
                "E_x T_a",
                rows.iter().map(|r| (r.0, r.1)).collect(),
                Style::Line,
            )
            .with(
                "from infinity",
                vec![
                    (grid[0], from_inf.value),
                    (grid[grid.len() - 1], from_inf.value),
                ],
                Style::Line,
            );
        ctx.write(&mut report, "extinction.svg", |w| plot.write(w))?;
    }
    ctx.finish(report)
}

fn solution_checks(report: &mut CommandReport, sol: &RiccatiSolution, tol_res: f64) {
    let d = sol.diagnostics();
    report.checks.push(Check::below(
        "max relative residual",
        d.max_residual,
        tol_res,
    ));
    report.checks.push(Check::holds("w positive", d.positive));
    report.checks.push(Check::holds(
        "w decreasing near both ends",
        d.endpoint_decrease,
    ));
    report.checks.push(Check::holds(
        "w below sqrt(q) r near both ends",
        d.endpoint_domination,
    ));
}

pub fn riccati(ctx: &Context) -> Result<CommandReport> {
    let cfg = ctx.config()?;
    let mech = cfg.mechanism()?;
    let sol = solve(cfg, &mech, Schedule::Primary)?;
    let mut report = ctx.report();
    ctx.write(&mut report, "riccati.csv", |w| sol.write_csv(w))?;
    report.value("q", sol.q());
    report.value("xi", sol.xi());
    report.value("W(xi)", sol.total_integral());
    report.value("shooting runs", sol.diagnostics().history.len() as f64);
    solution_checks(&mut report, &sol, cfg.run.tol_res);
    if ctx.plot {
        let pts = sol
            .grid()
            .iter()
            .filter(|g| g.s.is_finite() && g.s > 0.0)
            .map(|g| (g.s, g.w))
            .collect();
        let plot = Plot::new(&format!("w_q, q = {}", sol.q()), "s", "w")
            .log_x()
            .log_y()
            .with("w", pts, Style::Line);
        ctx.write(&mut report, "riccati.svg", |w| plot.write(w))?;
    }
    ctx.finish(report)
}

pub fn resolvent(ctx: &Context) -> Result<CommandReport> {
    let cfg = ctx.config()?;
    let mech = cfg.mechanism()?;
    let sol = solve(cfg, &mech, Schedule::Primary)?;
    let x0 = cfg.run.x0;
    let (grid, pin, name): (Vec<f64>, f64, &str) = match mech {
        Mechanism::Discrete(_) => ((0..=10).map(|i| i as f64 / 10.0).collect(), 1.0, "s"),
        Mechanism::Continuous(_) => ((0..=20).map(|i| i as f64 / 4.0).collect(), 0.0, "lambda"),
    };
    let mut rows = Vec::new();
    for &a in &grid {
        rows.push((a, sol.resolvent(x0, a)?, sol.entrance_law(a)?));
    }
    let mut report = ctx.report();
    ctx.write(&mut report, "resolvent.csv", |w| {
        writeln!(w, "{name},qG_x0,entrance_inf")?;
        for (a, g, e) in &rows {
            writeln!(w, "{a},{g},{e}")?;
        }
        Ok(())
    })?;
    report.value("q", sol.q());
    report.value("x0", x0);
    let pinned = (sol.resolvent(x0, pin)? - 1.0).abs();
    report.checks.push(Check::below(
        format!("|qG(x0, {name} = {pin}) - 1|"),
        pinned,
        PIN_TOL,
    ));
    let at_zero = (sol.resolvent(0.0, grid[grid.len() / 2])? - 1.0).abs();
    report
        .checks
        .push(Check::below("|qG(0, .) - 1|", at_zero, PIN_TOL));
    if ctx.plot {
        let plot = Plot::new(&format!("Resolvent from x = {x0}"), name, "qG").with(
            "qG",
            rows.iter().map(|r| (r.0, r.1)).collect(),
            Style::Line,
        );
        ctx.write(&mut report, "resolvent.svg", |w| plot.write(w))?;
    }
    ctx.finish(report)
}

pub fn validate(ctx: &Context, suite: Suite, scale: f64) -> Result<CommandReport> {
    if scale.is_nan() || scale <= 0.0 {
        return Err(Error::Config(format!(
            "--scale must be positive, got {scale}"
        )));
    }
    let opts = ValidationOptions {
        seed: ctx.seed(),
        scale,
    };
    let mut report = ctx.report();
    for &id in suite.criteria() {
        let r = run_criterion(id, &opts);
        println!("{r}");
        for c in &r.checks {
            println!("    {c}");
        }
        for (name, v) in &r.notes {
            println!("    {name} = {v}");
        }
        report.criteria.push(r);
    }
    ctx.finish(report)
}

pub fn converge(ctx: &Context) -> Result<CommandReport> {
    let cfg = ctx.config()?;
    let mech = cfg.mechanism()?;
    let primary = solve(cfg, &mech, Schedule::Primary)?;
    let alternate = solve(cfg, &mech, Schedule::Alternate)?;
    let runs = [("primary", &primary), ("alternate", &alternate)];
    let mut report = ctx.report();
    ctx.write(&mut report, "converge.csv", |w| {
        writeln!(w, "schedule,k,x_t,p_t,sup_change,total")?;
        for (name, sol) in runs {
            for (k, h) in sol.diagnostics().history.iter().enumerate() {
                writeln!(
                    w,
                    "{name},{k},{},{},{},{}",
                    h.x_t, h.p_t, h.sup_change, h.total
                )?;
            }
        }
        Ok(())
    })?;
    for (name, sol) in runs {
        report.value(
            &format!("{name} shooting runs"),
            sol.diagnostics().history.len() as f64,
        );
        report.value(&format!("{name} W(xi)"), sol.total_integral());
    }
    report.checks.push(Check::below(
        "schedules agree, sup |w1 - w2|",
        primary.sup_distance(&alternate),
        SCHEDULE_AGREEMENT,
    ));
    solution_checks(&mut report, &primary, cfg.run.tol_res);
    if ctx.plot {
        let mut plot = Plot::new("Shooting convergence", "run k", "sup change").log_y();
        for (name, sol) in runs {
            let pts = sol
                .diagnostics()
                .history
                .iter()
                .enumerate()
                .map(|(k, h)| (k as f64, h.sup_change))
                .collect();
            plot = plot.with(name, pts, Style::Line);
        }
        ctx.write(&mut report, "converge.svg", |w| plot.write(w))?;
    }
    ctx.finish(report)
}
