use std::io::Write;

use serde::Serialize;

/// Sample path as `(t, z)` records: jump times for the integer-valued
/// process, grid times for continuous-state routes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub records: Vec<(f64, f64)>,
    pub absorbed_at: Option<f64>,
    /// A state or time cap stopped the run early.
    pub cap_hit: bool,
}

impl Trajectory {
    pub fn start(z0: f64) -> Self {
        Self {
            records: vec![(0.0, z0)],
            absorbed_at: None,
            cap_hit: false,
        }
    }

    pub fn last(&self) -> (f64, f64) {
        *self.records.last().expect("trajectories are never empty")
    }

    /// State at time `t`, holding the last record (right-continuous steps).
    pub fn state_at(&self, t: f64) -> f64 {
        let i = self.records.partition_point(|r| r.0 <= t);
        self.records[i.saturating_sub(1)].1
    }

    pub fn max_state(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.1)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// CSV `t,z` followed by `# absorbed_at=` and `# seed=` lines.
    pub fn write_csv<W: Write>(&self, mut out: W, seed: u64) -> std::io::Result<()> {
        writeln!(out, "t,z")?;
        for (t, z) in &self.records {
            writeln!(out, "{t},{z}")?;
        }
        match self.absorbed_at {
            Some(t) => writeln!(out, "# absorbed_at={t}")?,
            None => writeln!(out, "# absorbed_at=none")?,
        }
        writeln!(out, "# cap_hit={}", self.cap_hit)?;
        writeln!(out, "# seed={seed}")
    }
}

/// Runs `f(replica)` for `0..n`, in parallel when the `parallel` feature is on.
/// Results are in replica order either way.
pub fn replicate<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n as u64).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n as u64).map(f).collect()
    }
}
