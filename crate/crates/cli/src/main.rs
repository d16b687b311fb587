mod analyze;
mod context;
mod plot;
mod report;
mod simulate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lbp_core::validation::Suite;

use context::Context;

#[derive(Parser)]
#[command(
    name = "lbp",
    version,
    about = "Logistic branching processes: simulation, closed forms and validation"
)]
struct Cli {
    /// TOML file with a `[mechanism]` table and an optional `[run]` table.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    replicas: Option<usize>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    plot: bool,
    /// Config override `section.key=value`; `--section.key=value` is accepted too.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact jump-chain paths of the integer-valued process.
    SimulateDiscrete,
    /// Euler–Maruyama paths of the Feller diffusion with logistic growth.
    SimulateSde,
    /// Paths built from an OU-type process by the Lamperti time change.
    SimulateLamperti,
    /// Closed-form tables.
    Analyze {
        #[arg(value_enum)]
        what: Analysis,
    },
    /// Monte Carlo versus closed-form checks; exits 1 on any failure.
    Validate {
        #[arg(value_enum, default_value = "all")]
        suite: SuiteArg,
        /// Multiplies every replica count.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
    },
    /// Shooting history of the Riccati solver under both schedules.
    Converge,
}

#[derive(Clone, Copy, ValueEnum)]
enum Analysis {
    Stationary,
    Extinction,
    Riccati,
    Resolvent,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Stationary,
    Extinction,
    Lamperti,
    Scaling,
    All,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Stationary => Suite::Stationary,
            SuiteArg::Extinction => Suite::Extinction,
            SuiteArg::Lamperti => Suite::Lamperti,
            SuiteArg::Scaling => Suite::Scaling,
            SuiteArg::All => Suite::All,
        }
    }
}

// `--run.q=2` becomes `--set run.q=2`; clap has no notion of open-ended flags.
fn expand_dotted_flags(args: impl Iterator<Item = String>) -> Vec<String> {
    let mut out = Vec::new();
    for a in args {
        match a.strip_prefix("--") {
            Some(rest)
                if rest.split('=').next().is_some_and(|k| k.contains('.'))
                    && rest.contains('=') =>
            {
                out.push("--set".to_string());
                out.push(rest.to_string());
            }
            _ => out.push(a),
        }
    }
    out
}

fn main() -> ExitCode {
    let cli = Cli::parse_from(expand_dotted_flags(std::env::args()));
    let result = Context::new(&cli).and_then(|ctx| match cli.command {
        Command::SimulateDiscrete => simulate::discrete(&ctx),
        Command::SimulateSde => simulate::sde(&ctx),
        Command::SimulateLamperti => simulate::lamperti(&ctx),
        Command::Analyze { what } => match what {
            Analysis::Stationary => analyze::stationary(&ctx),
            Analysis::Extinction => analyze::extinction(&ctx),
            Analysis::Riccati => analyze::riccati(&ctx),
            Analysis::Resolvent => analyze::resolvent(&ctx),
        },
        Command::Validate { suite, scale } => analyze::validate(&ctx, suite.into(), scale),
        Command::Converge => analyze::converge(&ctx),
    });
    match result {
        Ok(report) => {
            println!("{}", report.summary());
            if report.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
