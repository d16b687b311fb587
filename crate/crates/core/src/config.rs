use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanism::{Mechanism, MechanismFile};

/// Run parameters shared by every stochastic and numerical command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub replicas: usize,
    /// Initial state.
    pub x0: f64,
    /// Initial state standing in for `+∞`.
    pub x_inf: f64,
    pub t_max: f64,
    /// Occupation measures ignore `[0, burn_in)`.
    pub burn_in: f64,
    pub z_cap: f64,
    /// Grid step of continuous-state routes.
    pub dt: f64,
    /// Tolerance for deterministic functionals.
    pub tol: f64,
    pub tol_phi: f64,
    pub tol_w: f64,
    pub tol_res: f64,
    /// Transform parameters used by `analyze`.
    pub q: f64,
    pub lambda: f64,
    /// Number of stationary probabilities tabulated.
    pub n_max: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            replicas: 1000,
            x0: 1.0,
            x_inf: 1000.0,
            t_max: 100.0,
            burn_in: 0.0,
            z_cap: 1e9,
            dt: 1e-3,
            tol: 1e-10,
            tol_phi: 1e-12,
            tol_w: 1e-8,
            tol_res: 1e-6,
            q: 1.0,
            lambda: 1.0,
            n_max: 30,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("replicas", self.replicas as f64),
            ("x_inf", self.x_inf),
            ("t_max", self.t_max),
            ("z_cap", self.z_cap),
            ("dt", self.dt),
            ("tol", self.tol),
            ("tol_phi", self.tol_phi),
            ("tol_w", self.tol_w),
            ("tol_res", self.tol_res),
            ("q", self.q),
            ("n_max", self.n_max as f64),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::Config(format!(
                    "`run.{name}` must be positive, got {v}"
                )));
            }
        }
        if !(self.x0 >= 0.0) || !(self.burn_in >= 0.0) || !(self.lambda >= 0.0) {
            return Err(Error::Config(
                "`run.x0`, `run.burn_in` and `run.lambda` must be nonnegative".into(),
            ));
        }
        if self.burn_in >= self.t_max {
            return Err(Error::Config(
                "`run.burn_in` must be below `run.t_max`".into(),
            ));
        }
        Ok(())
    }
}

/// A configuration file: a `[mechanism]` table and an optional `[run]` table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub mechanism: MechanismFile,
    #[serde(default)]
    pub run: RunConfig,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with_overrides(text, &[])
    }

    /// Parses `text` after applying `section.key=value` overrides; values use
    /// TOML syntax and fall back to plain strings.
    pub fn parse_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let cfg: Config = if overrides.is_empty() {
            // Straight from the text, so that errors carry line and column.
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?
        } else {
            let mut table: toml::Table =
                toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
            for o in overrides {
                apply_override(&mut table, o)?;
            }
            table
                .try_into()
                .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?
        };
        cfg.run.validate()?;
        Ok(cfg)
    }

    pub fn mechanism(&self) -> Result<Mechanism> {
        self.mechanism.build()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs always serialize")
    }
}

fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{spec}` is not of the form key=value")))?;
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let keys: Vec<&str> = path.trim().split('.').collect();
    let (last, parents) = keys.split_last().expect("split yields at least one item");
    let mut cur = table;
    for k in parents {
        let entry = cur
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override `{spec}`: `{k}` is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = "[mechanism]\nsetting = \"discrete\"\nd = 1.0\nc = 1.0\n[mechanism.pi]\n1 = 1.0\n\n[run]\nseed = 9\nreplicas = 10\n";

    #[test]
    fn parses_and_round_trips() {
        let cfg = Config::parse(TEXT).unwrap();
        assert_eq!(cfg.run.seed, 9);
        assert_eq!(cfg.run.dt, RunConfig::default().dt);
        assert_eq!(Config::parse(&cfg.to_toml()).unwrap(), cfg);
        assert!(cfg.mechanism().is_ok());
    }

    #[test]
    fn overrides_apply() {
        let o = [
            "run.seed=3".to_string(),
            "mechanism.c=2.5".to_string(),
            "run.x0=4".to_string(),
        ];
        let cfg = Config::parse_with_overrides(TEXT, &o).unwrap();
        assert_eq!(cfg.run.seed, 3);
        assert_eq!(cfg.mechanism.c, 2.5);
        assert!(Config::parse_with_overrides(TEXT, &["run.seed".to_string()]).is_err());
    }

    #[test]
    fn unknown_run_field_is_named() {
        let err = Config::parse(&format!("{TEXT}steps = 3\n")).unwrap_err();
        assert!(err.to_string().contains("steps"), "{err}");
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(Config::parse_with_overrides(TEXT, &["run.dt=0".to_string()]).is_err());
    }
}
