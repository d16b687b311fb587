use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ContinuousMechanism, DiscreteMechanism, ExpJumps, LevyMechanism, Mechanism, Setting};
use crate::error::{Error, Result};

/// On-disk description of a mechanism (TOML).
///
/// ```toml
/// setting = "discrete"
/// d = 1.0
/// c = 1.0
/// [pi]
/// 1 = 0.5
/// 3 = 0.25
/// ```
///
/// A continuous mechanism uses `alpha` (compensated drift) or `b`
/// (uncompensated drift), `gamma`, `atoms = [[size, rate], ...]` and an
/// optional `[exp_jumps]` table with `rate` and `mean`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanismFile {
    pub setting: Setting,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    pub c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub atoms: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub pi: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exp_jumps: Option<ExpJumps>,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl MechanismFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| config_err(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("mechanism files always serialize")
    }

    pub fn build(&self) -> Result<Mechanism> {
        match self.setting {
            Setting::Discrete => {
                for (name, set) in [
                    ("alpha", self.alpha.is_some()),
                    ("b", self.b.is_some()),
                    ("gamma", self.gamma.is_some()),
                    ("atoms", !self.atoms.is_empty()),
                    ("exp_jumps", self.exp_jumps.is_some()),
                ] {
                    if set {
                        return Err(config_err(format!(
                            "field `{name}` belongs to the continuous setting"
                        )));
                    }
                }
                let mut pi = Vec::new();
                for (k, &rate) in &self.pi {
                    let k: u32 = k
                        .trim()
                        .parse()
                        .map_err(|_| config_err(format!("`pi` key `{k}` is not a litter size")))?;
                    pi.push((k, rate));
                }
                Ok(DiscreteMechanism::new(self.d.unwrap_or(0.0), self.c, pi)?.into())
            }
            Setting::Continuous => {
                if self.d.is_some() {
                    return Err(config_err("field `d` belongs to the discrete setting"));
                }
                if !self.pi.is_empty() {
                    return Err(config_err("field `pi` belongs to the discrete setting"));
                }
                let atoms: Vec<(f64, f64)> = self.atoms.iter().map(|a| (a[0], a[1])).collect();
                let gamma = self.gamma.unwrap_or(0.0);
                let levy = match (self.alpha, self.b) {
                    (Some(_), Some(_)) => {
                        return Err(config_err("give either `alpha` or `b`, not both"));
                    }
                    (Some(alpha), None) => LevyMechanism::new(alpha, gamma, atoms, self.exp_jumps)?,
                    (None, b) => {
                        LevyMechanism::from_drift(b.unwrap_or(0.0), gamma, atoms, self.exp_jumps)?
                    }
                };
                Ok(ContinuousMechanism::new(levy, self.c)?.into())
            }
        }
    }
}

impl From<&Mechanism> for MechanismFile {
    fn from(m: &Mechanism) -> Self {
        match m {
            Mechanism::Discrete(m) => MechanismFile {
                setting: Setting::Discrete,
                d: Some(m.d()),
                c: m.c(),
                alpha: None,
                b: None,
                gamma: None,
                atoms: Vec::new(),
                pi: m.pi().iter().map(|(k, &v)| (k.to_string(), v)).collect(),
                exp_jumps: None,
            },
            Mechanism::Continuous(m) => {
                let l = m.levy();
                MechanismFile {
                    setting: Setting::Continuous,
                    d: None,
                    c: m.c(),
                    alpha: Some(l.alpha()),
                    b: None,
                    gamma: Some(l.gamma()),
                    atoms: l.atoms().iter().map(|&(r, w)| [r, w]).collect(),
                    pi: BTreeMap::new(),
                    exp_jumps: l.exp_jumps(),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discrete_file() {
        let text = "setting = \"discrete\"\nd = 1.0\nc = 2.0\n[pi]\n1 = 0.5\n3 = 0.25\n";
        let f = MechanismFile::parse(text).unwrap();
        let m = f.build().unwrap();
        let d = m.as_discrete().unwrap();
        assert_eq!(d.rho(), 0.75);
        assert_eq!(d.tail(2), 0.25);
        let again = MechanismFile::parse(&f.to_toml()).unwrap();
        assert_eq!(again, f);
    }

    #[test]
    fn continuous_round_trip() {
        let text = "setting = \"continuous\"\nc = 1.0\nb = -0.5\ngamma = 0.3\n\
                    atoms = [[0.5, 1.0], [2.0, 0.25]]\n[exp_jumps]\nrate = 1.0\nmean = 0.1\n";
        let m = MechanismFile::parse(text).unwrap().build().unwrap();
        let file = MechanismFile::from(&m);
        let back = MechanismFile::parse(&file.to_toml()).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.build().unwrap(), m);
        let l = m.as_continuous().unwrap().levy();
        assert!((l.drift() + 0.5).abs() < 1e-15);
    }

    #[test]
    fn unknown_field_is_named() {
        let err =
            MechanismFile::parse("setting = \"discrete\"\nc = 1.0\ndelta = 2.0\n").unwrap_err();
        assert!(err.to_string().contains("delta"), "{err}");
    }

    #[test]
    fn setting_mismatch() {
        let f = MechanismFile::parse("setting = \"discrete\"\nc = 1.0\ngamma = 1.0\n").unwrap();
        assert!(f.build().unwrap_err().to_string().contains("gamma"));
        let f = MechanismFile::parse("setting = \"continuous\"\nc = 1.0\nd = 1.0\n").unwrap();
        assert!(f.build().is_err());
    }
}
