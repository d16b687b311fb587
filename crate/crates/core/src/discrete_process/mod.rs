//! Exact simulation of the integer-valued process and its closed forms.

mod chain;
mod formulas;
mod scaling;

pub use chain::{
    descent_time, extinction_samples, occupation_distribution, rates, simulate, ExtinctionSamples,
};
pub use formulas::{birth_before_death_prob, expected_ta_infinity, logistic_ode};
pub use scaling::ScaledFamily;
