use serde::Serialize;

use lbp_core::validation::{Check, CriterionReport};
use lbp_core::Config;

/// Machine-readable record of one command, written as `report.json`.
#[derive(Debug, Serialize)]
pub struct CommandReport {
    pub command: String,
    /// The configuration after overrides; rerunning with it reproduces every output.
    pub config: Option<Config>,
    pub seed: u64,
    pub outputs: Vec<String>,
    pub wall_time_s: f64,
    pub checks: Vec<Check>,
    pub criteria: Vec<CriterionReport>,
    /// Scalar results worth seeing without opening a CSV.
    pub values: Vec<(String, f64)>,
    pub pass: bool,
}

impl CommandReport {
    pub fn new(command: &str, config: Option<Config>, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            config,
            seed,
            outputs: Vec::new(),
            wall_time_s: 0.0,
            checks: Vec::new(),
            criteria: Vec::new(),
            values: Vec::new(),
            pass: true,
        }
    }

    pub fn value(&mut self, name: &str, v: f64) {
        self.values.push((name.to_string(), v));
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for (name, v) in &self.values {
            s += &format!("{name} = {v}\n");
        }
        for c in &self.checks {
            s += &format!("{c}\n");
        }
        for out in &self.outputs {
            s += &format!("wrote {out}\n");
        }
        let failed = self.checks.iter().filter(|c| !c.pass).count()
            + self.criteria.iter().filter(|c| !c.pass()).count();
        s += &format!(
            "{} {} (seed {}, {:.2}s)",
            if self.pass { "ok" } else { "FAILED" },
            self.command,
            self.seed,
            self.wall_time_s
        );
        if failed > 0 {
            s += &format!(", {failed} failing");
        }
        s
    }
}
