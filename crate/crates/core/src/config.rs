//! Run configuration files (TOML).
//!
//! ```toml
//! schema = 1
//! task = "branches"
//! k_range = { start = 1.0, stop = 10.0, count = 10 }
//!
//! [profile]
//! kind = "exp_density"
//! rho_inf = 1.0
//! delta_rho = 5.0
//! d = 1.0
//!
//! [solver]
//! max_modes = 32
//!
//! [output]
//! dir = "out"
//! plot = true
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dispersion::SolverOptions;
use crate::error::{Error, Result};
use crate::profile::ProfileSpec;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Classify,
    Modes,
    Branches,
    Estimate,
    Oscillation,
}

/// `count` wavenumbers evenly spaced over `[start, stop]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KRange {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub plot: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    pub task: Task,
    pub profile: ProfileSpec,
    /// Single wavenumber k (not K = k²).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_range: Option<KRange>,
    /// Depth limit for the oscillation test.
    #[serde(default = "default_y_max")]
    pub y_max: f64,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

fn default_y_max() -> f64 {
    1e8
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::Config(format!("unsupported schema {} (expected {SCHEMA_VERSION})", self.schema)));
        }
        let given = [self.k.is_some(), self.k_grid.is_some(), self.k_range.is_some()].iter().filter(|&&b| b).count();
        let needs_k = !matches!(self.task, Task::Classify | Task::Oscillation);
        if needs_k && given != 1 {
            return Err(Error::Config("exactly one of k, k_grid, k_range is required for this task".into()));
        }
        if let Some(r) = self.k_range {
            if !(r.start > 0.0 && r.stop >= r.start && r.count >= 1) {
                return Err(Error::Config("k_range needs 0 < start <= stop and count >= 1".into()));
            }
            if r.count == 1 && r.stop != r.start {
                return Err(Error::Config("k_range with count = 1 needs start = stop".into()));
            }
        }
        let ks = self.wavenumbers();
        if ks.iter().any(|&k| !(k > 0.0 && k.is_finite())) {
            return Err(Error::Config("k values must be positive and finite".into()));
        }
        if self.task == Task::Branches && ks.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("k grid must be strictly increasing".into()));
        }
        if !(self.y_max >= 1.0) {
            return Err(Error::Config("y_max must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be positive".into()));
        }
        let s = &self.solver;
        let positive = [s.root_tol, s.residual_tol, s.integrator.rel_tol, s.integrator.abs_tol, s.tail.tail_rel_tol, s.tail.margin];
        if positive.iter().any(|&t| !(t > 0.0)) || s.max_modes == 0 || s.omega_grid_n < 2 {
            return Err(Error::Config("solver tolerances must be positive".into()));
        }
        Ok(())
    }

    /// Wavenumbers k in the order given.
    pub fn wavenumbers(&self) -> Vec<f64> {
        if let Some(k) = self.k {
            return vec![k];
        }
        if let Some(g) = &self.k_grid {
            return g.clone();
        }
        if let Some(r) = self.k_range {
            if r.count == 1 {
                return vec![r.start];
            }
            let step = (r.stop - r.start) / (r.count - 1) as f64;
            return (0..r.count).map(|i| if i + 1 == r.count { r.stop } else { r.start + step * i as f64 }).collect();
        }
        Vec::new()
    }
}
