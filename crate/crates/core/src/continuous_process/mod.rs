//! Continuous-state process by two routes: the Lamperti time change of an
//! OU-type path, and Euler–Maruyama on the Feller diffusion with logistic
//! growth.
mod dynkin;
mod feller;
mod lamperti;
mod ou;

pub use dynkin::{dynkin_exponential_check, DynkinCheck};
pub use feller::{simulate_feller_logistic, FellerLogistic};
pub use lamperti::{
    lamperti_forward, lamperti_inverse, lamperti_marginal, simulate_lamperti, simulate_lamperti_at,
    simulate_lamperti_with_path,
};
pub use ou::{simulate_ou, OuPath, OuSimulator};
