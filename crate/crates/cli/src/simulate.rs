use std::io::Write;

use lbp_core::continuous_process::{
    simulate_lamperti, simulate_lamperti_with_path, FellerLogistic,
};
use lbp_core::discrete_process;
use lbp_core::mechanism::{ContinuousMechanism, DiscreteMechanism, Mechanism};
use lbp_core::trajectory::replicate;
use lbp_core::{Error, Result, Trajectory};

use crate::context::Context;
use crate::plot::{Plot, Style};
use crate::report::CommandReport;

fn discrete_mechanism(ctx: &Context) -> Result<DiscreteMechanism> {
    match ctx.config()?.mechanism()? {
        Mechanism::Discrete(m) => Ok(m),
        Mechanism::Continuous(_) => Err(Error::Config(format!(
            "`{}` needs `setting = \"discrete\"`",
            ctx.command
        ))),
    }
}

pub fn continuous_mechanism(ctx: &Context) -> Result<ContinuousMechanism> {
    match ctx.config()?.mechanism()? {
        Mechanism::Continuous(m) => Ok(m),
        Mechanism::Discrete(_) => Err(Error::Config(format!(
            "`{}` needs `setting = \"continuous\"`",
            ctx.command
        ))),
    }
}

struct Sample {
    z_end: f64,
    absorbed_at: Option<f64>,
    cap_hit: bool,
}

impl From<&Trajectory> for Sample {
    fn from(t: &Trajectory) -> Self {
        Self {
            z_end: t.last().1,
            absorbed_at: t.absorbed_at,
            cap_hit: t.cap_hit,
        }
    }
}

fn write_samples(out: &mut dyn Write, samples: &[Sample]) -> std::io::Result<()> {
    writeln!(out, "replica,z_end,absorbed_at,cap_hit")?;
    for (i, s) in samples.iter().enumerate() {
        let a = s.absorbed_at.map_or(String::new(), |t| t.to_string());
        writeln!(out, "{i},{},{a},{}", s.z_end, s.cap_hit)?;
    }
    Ok(())
}

fn summarize(report: &mut CommandReport, samples: &[Sample]) {
    let n = samples.len() as f64;
    let absorbed = samples.iter().filter(|s| s.absorbed_at.is_some()).count() as f64;
    let capped = samples.iter().filter(|s| s.cap_hit).count() as f64;
    report.value("replicas", n);
    report.value(
        "mean z_end",
        samples.iter().map(|s| s.z_end).sum::<f64>() / n,
    );
    report.value("absorbed fraction", absorbed / n);
    report.value("fraction stopped by t_max or z_cap", capped / n);
}

fn finish_simulation(
    ctx: &Context,
    mut report: CommandReport,
    path: &Trajectory,
    samples: &[Sample],
    style: Style,
) -> Result<CommandReport> {
    let seed = ctx.seed();
    ctx.write(&mut report, "trajectory.csv", |w| path.write_csv(w, seed))?;
    ctx.write(&mut report, "samples.csv", |w| write_samples(w, samples))?;
    if ctx.plot {
        let plot = Plot::new(&format!("{} (replica 0)", ctx.command), "t", "Z_t").with(
            "Z",
            path.records.clone(),
            style,
        );
        ctx.write(&mut report, "trajectory.svg", |w| plot.write(w))?;
    }
    summarize(&mut report, samples);
    ctx.finish(report)
}

pub fn discrete(ctx: &Context) -> Result<CommandReport> {
    let cfg = ctx.config()?;
    let mech = discrete_mechanism(ctx)?;
    let x0 = cfg.run.x0;
    if x0.fract() != 0.0 {
        return Err(Error::Config(format!(
            "`run.x0` must be an integer here, got {x0}"
        )));
    }
    let stream = ctx.stream();
    let run = &cfg.run;
    let mut paths = replicate(run.replicas, |r| {
        let t = discrete_process::simulate(&mech, x0 as u64, run, &stream.split(r));
        let s = Sample::from(&t);
        (if r == 0 { Some(t) } else { None }, s)
    });
    let path = paths[0].0.take().expect("replica 0 keeps its path");
    let samples: Vec<Sample> = paths.into_iter().map(|p| p.1).collect();
    finish_simulation(ctx, ctx.report(), &path, &samples, Style::Step)
}

pub fn sde(ctx: &Context) -> Result<CommandReport> {
    let cfg = ctx.config()?;
    let mech = continuous_mechanism(ctx)?;
    let levy = mech.levy();
    if levy.total_rate() > 0.0 || levy.gamma() <= 0.0 {
        return Err(Error::Config(
            "`simulate-sde` covers the Feller diffusion only (gamma > 0, no jumps); \
             use `simulate-lamperti` for jump mechanisms"
                .into(),
        ));
    }
    let feller = FellerLogistic::new(levy.drift(), mech.c(), levy.gamma())?;
    let run = &cfg.run;
    let stream = ctx.stream();
    let mut paths = replicate(run.replicas, |r| {
        let t = feller.simulate(run.x0, run.t_max, run.dt, &stream.split(r));
        let s = Sample::from(&t);
        (if r == 0 { Some(t) } else { None }, s)
    });
    let path = paths[0].0.take().expect("replica 0 keeps its path");
    let samples: Vec<Sample> = paths.into_iter().map(|p| p.1).collect();
    finish_simulation(ctx, ctx.report(), &path, &samples, Style::Line)
}

pub fn lamperti(ctx: &Context) -> Result<CommandReport> {
    let cfg = ctx.config()?;
    let mech = continuous_mechanism(ctx)?;
    let run = &cfg.run;
    let stream = ctx.stream();
    let (path, ou) =
        simulate_lamperti_with_path(&mech, run.x0, run.t_max, run.dt, &stream.split(0))?;
    let rest = replicate(run.replicas.saturating_sub(1), |r| {
        simulate_lamperti(&mech, run.x0, run.t_max, run.dt, &stream.split(r + 1))
            .map(|t| Sample::from(&t))
    });
    let mut samples = vec![Sample::from(&path)];
    for s in rest {
        samples.push(s?);
    }
    let mut report = ctx.report();
    ctx.write(&mut report, "ou_path.csv", |w| {
        writeln!(w, "s,r")?;
        for (s, r) in &ou.points {
            writeln!(w, "{s},{r}")?;
        }
        Ok(())
    })?;
    ctx.write(&mut report, "jumps.csv", |w| {
        writeln!(w, "t,size")?;
        for (t, size) in &ou.jumps {
            writeln!(w, "{t},{size}")?;
        }
        Ok(())
    })?;
    if ctx.plot {
        let plot = Plot::new("OU-type path (replica 0)", "s", "R_s").with(
            "R",
            ou.points.clone(),
            Style::Line,
        );
        ctx.write(&mut report, "ou_path.svg", |w| plot.write(w))?;
    }
    if let Some(t0) = ou.t0 {
        report.value("OU first zero (replica 0)", t0);
    }
    finish_simulation(ctx, report, &path, &samples, Style::Line)
}
