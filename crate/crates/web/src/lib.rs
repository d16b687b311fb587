//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each export takes plain numbers and returns a JSON string; the page
//! parses it and draws on a canvas. The `*_json` functions hold the logic so
//! that they can be tested natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use lbp_core::continuous_process::simulate_lamperti_with_path;
use lbp_core::discrete_process;
use lbp_core::mechanism::{
    ContinuousMechanism, DiscreteMechanism, ExpJumps, LevyMechanism, Mechanism,
};
use lbp_core::numerics::RandomStream;
use lbp_core::riccati::{expected_ta, solve_wq, RiccatiOptions};
use lbp_core::RunConfig;

// Canvas plots gain nothing from more vertices than this.
const MAX_POINTS: usize = 2000;

fn thin(points: &[(f64, f64)]) -> (Vec<f64>, Vec<f64>) {
    let stride = points.len().div_ceil(MAX_POINTS).max(1);
    let mut picked: Vec<(f64, f64)> = points.iter().copied().step_by(stride).collect();
    if let Some(&last) = points.last() {
        if picked.last() != Some(&last) {
            picked.push(last);
        }
    }
    picked.into_iter().unzip()
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("plain data always serializes")
}

#[derive(Serialize)]
struct DiscretePath {
    t: Vec<f64>,
    z: Vec<f64>,
    absorbed_at: Option<f64>,
    jumps: usize,
    /// Fraction of `[0, t_max]` spent in states `1, 2, ...`, and the
    /// stationary probabilities `μ_1, μ_2, ...` when `d = 0`.
    occupation: Vec<f64>,
    stationary: Vec<f64>,
}

fn occupation(records: &[(f64, f64)], t_end: f64, n: usize) -> Vec<f64> {
    let mut time = vec![0.0; n];
    for (i, &(t, z)) in records.iter().enumerate() {
        let next = records.get(i + 1).map_or(t_end, |r| r.0);
        let z = z as usize;
        if (1..=n).contains(&z) {
            time[z - 1] += next - t;
        }
    }
    time.into_iter().map(|v| v / t_end).collect()
}

/// Exact path of the binary-splitting chain with births `ρ`, deaths `d`
/// and competition `c`.
pub fn discrete_path_json(
    rho: f64,
    d: f64,
    c: f64,
    x0: u32,
    t_max: f64,
    seed: u64,
) -> Result<String, String> {
    let mech = DiscreteMechanism::binary(rho, d, c).map_err(|e| e.to_string())?;
    if !(t_max > 0.0 && t_max <= 1e4) {
        return Err(format!("horizon must lie in (0, 1e4], got {t_max}"));
    }
    let cfg = RunConfig {
        t_max,
        z_cap: 1e6,
        ..RunConfig::default()
    };
    let traj = discrete_process::simulate(&mech, x0 as u64, &cfg, &RandomStream::new(seed));
    let (t, z) = thin(&traj.records);
    let stationary = if d == 0.0 {
        mech.mu(40, 1e-10).unwrap_or_default()
    } else {
        Vec::new()
    };
    let occupation = occupation(&traj.records, t_max, stationary.len());
    Ok(to_json(&DiscretePath {
        t,
        z,
        absorbed_at: traj.absorbed_at,
        jumps: traj.records.len() - 1,
        occupation,
        stationary,
    }))
}

#[derive(Serialize)]
struct Extinction {
    s: Vec<f64>,
    w: Vec<f64>,
    xi: f64,
    laplace_inf: f64,
    expected_inf: f64,
    max_residual: f64,
}

/// Riccati solution `w_q` and the extinction functionals from infinity for
/// the binary chain.
pub fn extinction_json(rho: f64, d: f64, c: f64, q: f64) -> Result<String, String> {
    let mech: Mechanism = DiscreteMechanism::binary(rho, d, c)
        .map_err(|e| e.to_string())?
        .into();
    let expected = expected_ta(&mech, None, 1e-10).map_err(|e| e.to_string())?;
    let sol = solve_wq(&mech, q, &RiccatiOptions::default()).map_err(|e| e.to_string())?;
    let pts: Vec<(f64, f64)> = sol
        .grid()
        .iter()
        .filter(|g| g.s.is_finite() && g.s > 0.0 && g.w > 0.0)
        .map(|g| (g.s, g.w))
        .collect();
    let (s, w) = thin(&pts);
    Ok(to_json(&Extinction {
        s,
        w,
        xi: sol.xi(),
        laplace_inf: sol.laplace_ta_infinity().map_err(|e| e.to_string())?,
        expected_inf: expected.value,
        max_residual: sol.diagnostics().max_residual,
    }))
}

#[derive(Serialize)]
struct LampertiPath {
    t: Vec<f64>,
    z: Vec<f64>,
    s: Vec<f64>,
    r: Vec<f64>,
    absorbed_at: Option<f64>,
    jumps: usize,
}

/// Continuous-state path from the Lamperti time change of an OU-type process
/// with drift `b`, Gaussian part `γ` and exponential jumps.
#[allow(clippy::too_many_arguments)]
pub fn lamperti_path_json(
    b: f64,
    gamma: f64,
    c: f64,
    jump_rate: f64,
    jump_mean: f64,
    x0: f64,
    t_end: f64,
    seed: u64,
) -> Result<String, String> {
    if !(t_end > 0.0 && t_end <= 200.0) {
        return Err(format!("horizon must lie in (0, 200], got {t_end}"));
    }
    let jumps = (jump_rate > 0.0).then_some(ExpJumps {
        rate: jump_rate,
        mean: jump_mean,
    });
    let levy = LevyMechanism::from_drift(b, gamma, Vec::new(), jumps).map_err(|e| e.to_string())?;
    let mech = ContinuousMechanism::new(levy, c).map_err(|e| e.to_string())?;
    let dt = t_end / 4000.0;
    let (traj, ou) = simulate_lamperti_with_path(&mech, x0, t_end, dt, &RandomStream::new(seed))
        .map_err(|e| e.to_string())?;
    let (t, z) = thin(&traj.records);
    let (s, r) = thin(&ou.points);
    Ok(to_json(&LampertiPath {
        t,
        z,
        s,
        r,
        absorbed_at: traj.absorbed_at,
        jumps: ou.jumps.len(),
    }))
}

#[wasm_bindgen]
pub fn discrete_path(
    rho: f64,
    d: f64,
    c: f64,
    x0: u32,
    t_max: f64,
    seed: u32,
) -> Result<String, JsError> {
    discrete_path_json(rho, d, c, x0, t_max, seed as u64).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn extinction(rho: f64, d: f64, c: f64, q: f64) -> Result<String, JsError> {
    extinction_json(rho, d, c, q).map_err(|e| JsError::new(&e))
}

#[allow(clippy::too_many_arguments)]
#[wasm_bindgen]
pub fn lamperti_path(
    b: f64,
    gamma: f64,
    c: f64,
    jump_rate: f64,
    jump_mean: f64,
    x0: f64,
    t_end: f64,
    seed: u32,
) -> Result<String, JsError> {
    lamperti_path_json(b, gamma, c, jump_rate, jump_mean, x0, t_end, seed as u64)
        .map_err(|e| JsError::new(&e))
}
