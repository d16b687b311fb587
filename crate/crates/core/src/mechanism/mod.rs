//! Branching mechanisms in the integer-state and continuous-state settings.
//!
//! Both settings share the same derived objects: the integrated exponent `m`,
//! the change of variable `θ` built from `e^m`, its range endpoint `ξ`, its
//! inverse `φ`, and the function `r` entering the Riccati equation. The
//! discrete `θ` decreases from `ξ` to 0 on `(0, 1]`; the continuous one
//! increases from 0 to `∞` on `[0, ∞)`.

mod discrete;
mod file;
mod levy;

use serde::{Deserialize, Serialize};

pub use discrete::{mu_binary, DiscreteMechanism};
pub use file::MechanismFile;
pub use levy::{ContinuousMechanism, ExpJumps, LevyMechanism};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Setting {
    Discrete,
    Continuous,
}

/// Long-run behaviour of a continuous-state process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AbsorptionRegime {
    /// Subordinator: never reaches 0.
    Recurrent,
    /// Goes to 0 and hits it in finite time.
    ExtinctionWithAbsorption,
    /// Goes to 0 without ever reaching it.
    ExtinctionWithoutAbsorption,
}

/// Either kind of mechanism, as read from a mechanism file.
#[derive(Debug, Clone, PartialEq)]
pub enum Mechanism {
    Discrete(DiscreteMechanism),
    Continuous(ContinuousMechanism),
}

impl Mechanism {
    pub fn setting(&self) -> Setting {
        match self {
            Mechanism::Discrete(_) => Setting::Discrete,
            Mechanism::Continuous(_) => Setting::Continuous,
        }
    }

    pub fn c(&self) -> f64 {
        match self {
            Mechanism::Discrete(m) => m.c(),
            Mechanism::Continuous(m) => m.c(),
        }
    }

    pub fn psi(&self, arg: f64) -> crate::Result<f64> {
        match self {
            Mechanism::Discrete(m) => m.psi(arg),
            Mechanism::Continuous(m) => m.psi(arg),
        }
    }

    pub fn exp_m(&self, arg: f64) -> crate::Result<f64> {
        match self {
            Mechanism::Discrete(m) => m.exp_m(arg),
            Mechanism::Continuous(m) => m.exp_m(arg),
        }
    }

    pub fn theta(&self, arg: f64, tol: f64) -> crate::Result<f64> {
        match self {
            Mechanism::Discrete(m) => m.theta(arg, tol),
            Mechanism::Continuous(m) => m.theta(arg, tol),
        }
    }

    pub fn xi(&self, tol: f64) -> crate::Result<f64> {
        match self {
            Mechanism::Discrete(m) => m.xi(tol),
            Mechanism::Continuous(m) => Ok(m.xi()),
        }
    }

    pub fn phi(&self, t: f64, tol_phi: f64) -> crate::Result<f64> {
        match self {
            Mechanism::Discrete(m) => m.phi(t, tol_phi),
            Mechanism::Continuous(m) => m.phi(t, tol_phi),
        }
    }

    pub fn r_func(&self, s: f64, tol_phi: f64) -> crate::Result<f64> {
        match self {
            Mechanism::Discrete(m) => m.r_func(s, tol_phi),
            Mechanism::Continuous(m) => m.r_func(s, tol_phi),
        }
    }

    pub fn condition_l(&self) -> bool {
        match self {
            Mechanism::Discrete(m) => m.condition_l(),
            Mechanism::Continuous(m) => m.levy().condition_l(),
        }
    }

    pub fn as_discrete(&self) -> Option<&DiscreteMechanism> {
        match self {
            Mechanism::Discrete(m) => Some(m),
            Mechanism::Continuous(_) => None,
        }
    }

    pub fn as_continuous(&self) -> Option<&ContinuousMechanism> {
        match self {
            Mechanism::Continuous(m) => Some(m),
            Mechanism::Discrete(_) => None,
        }
    }
}

impl From<DiscreteMechanism> for Mechanism {
    fn from(m: DiscreteMechanism) -> Self {
        Mechanism::Discrete(m)
    }
}

impl From<ContinuousMechanism> for Mechanism {
    fn from(m: ContinuousMechanism) -> Self {
        Mechanism::Continuous(m)
    }
}
