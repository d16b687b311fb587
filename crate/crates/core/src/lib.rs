//! Simulation and closed-form analysis of logistic branching processes in
//! discrete and continuous state space.

// `!(x > 0.0)` is deliberate throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod continuous_process;
pub mod discrete_process;
pub mod error;
pub mod mechanism;
pub mod numerics;
pub mod riccati;
pub mod stats;
pub mod trajectory;
pub mod validation;

pub use config::{Config, RunConfig};
pub use error::{Error, Result};
pub use trajectory::Trajectory;
