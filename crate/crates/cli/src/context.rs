use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use lbp_core::numerics::RandomStream;
use lbp_core::{Config, Error, Result};

use crate::report::CommandReport;
use crate::{Analysis, Cli, Command};

pub struct Context {
    pub command: String,
    config: Option<Config>,
    seed: u64,
    out_dir: PathBuf,
    pub plot: bool,
    started: Instant,
}

impl Context {
    pub fn new(cli: &Cli) -> Result<Self> {
        let command = match &cli.command {
            Command::SimulateDiscrete => "simulate-discrete".to_string(),
            Command::SimulateSde => "simulate-sde".to_string(),
            Command::SimulateLamperti => "simulate-lamperti".to_string(),
            Command::Analyze { what } => format!(
                "analyze {}",
                match what {
                    Analysis::Stationary => "stationary",
                    Analysis::Extinction => "extinction",
                    Analysis::Riccati => "riccati",
                    Analysis::Resolvent => "resolvent",
                }
            ),
            Command::Validate { .. } => "validate".to_string(),
            Command::Converge => "converge".to_string(),
        };
        let mut overrides = cli.overrides.clone();
        if let Some(s) = cli.seed {
            overrides.push(format!("run.seed={s}"));
        }
        if let Some(r) = cli.replicas {
            overrides.push(format!("run.replicas={r}"));
        }
        let config = match &cli.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                let cfg = Config::parse_with_overrides(&text, &overrides).map_err(|e| {
                    Error::Config(format!("{}: {}", path.display(), strip_prefix(e)))
                })?;
                Some(cfg)
            }
            None => None,
        };
        let seed = config
            .as_ref()
            .map(|c| c.run.seed)
            .or(cli.seed)
            .unwrap_or(1);
        Ok(Self {
            command,
            config,
            seed,
            out_dir: cli.out_dir.clone(),
            plot: cli.plot,
            started: Instant::now(),
        })
    }

    pub fn config(&self) -> Result<&Config> {
        self.config
            .as_ref()
            .ok_or_else(|| Error::Config(format!("`{}` needs --config <FILE>", self.command)))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> RandomStream {
        RandomStream::new(self.seed)
    }

    pub fn report(&self) -> CommandReport {
        CommandReport::new(&self.command, self.config.clone(), self.seed)
    }

    /// Writes `name` under the output directory and records it in `report`.
    pub fn write(
        &self,
        report: &mut CommandReport,
        name: &str,
        body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
    ) -> Result<()> {
        fs::create_dir_all(&self.out_dir)?;
        let path = self.out_dir.join(name);
        let mut out = BufWriter::new(File::create(&path)?);
        body(&mut out)?;
        out.flush()?;
        report.outputs.push(path.display().to_string());
        Ok(())
    }

    /// Stamps the wall time and writes `report.json`.
    pub fn finish(&self, mut report: CommandReport) -> Result<CommandReport> {
        report.wall_time_s = self.started.elapsed().as_secs_f64();
        report.pass =
            report.checks.iter().all(|c| c.pass) && report.criteria.iter().all(|c| c.pass());
        let path = self.out_dir.join("report.json");
        report.outputs.push(path.display().to_string());
        fs::create_dir_all(&self.out_dir)?;
        let json = serde_json::to_string_pretty(&report).expect("reports always serialize");
        fs::write(&path, json + "\n")?;
        Ok(report)
    }
}

// Errors from a config file already say "config:" once we add the path.
fn strip_prefix(e: Error) -> String {
    match e {
        Error::Config(msg) => msg,
        other => other.to_string(),
    }
}
