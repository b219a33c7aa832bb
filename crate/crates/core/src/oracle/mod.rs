//! Independent reference solutions used to validate the shooting solver.
//!
//! Nothing here calls into the Prüfer, decay or dispersion modules.

mod bessel;
mod fd;
pub mod uw;

use serde::{Deserialize, Serialize};

pub use bessel::{bessel_j, bessel_j_series, bessel_mode_frequencies, bessel_self_test, exp_profile_residual, BesselSeries};
pub use fd::{fd_eigenvalues, fd_mode_frequencies, fd_raw};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMethod {
    Bessel,
    FiniteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Discretization {
    /// Root scan of the Bessel relation on `scan_points` Ω values.
    Closed { scan_points: usize },
    /// Uniform grid on `[0, l]` with `n` intervals, Richardson-extrapolated.
    Grid { l: f64, n: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    /// Mode frequencies Ω, ascending.
    pub omegas: Vec<f64>,
    pub method: OracleMethod,
    pub discretization: Discretization,
    /// False when the convergence checks failed.
    pub usable: bool,
    /// Largest relative change seen in the convergence checks.
    pub stability: f64,
}

/// Frozen oracle output for one profile and K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub profile: crate::profile::ProfileSpec,
    #[serde(rename = "K")]
    pub k: f64,
    pub oracle: OracleResult,
}

impl Fixture {
    /// Every `*.json` fixture in `dir`, sorted by file name.
    pub fn load_dir(dir: &std::path::Path) -> crate::error::Result<Vec<Fixture>> {
        let err = |m: String| crate::error::Error::Config(m);
        let mut paths: Vec<_> = std::fs::read_dir(dir)
            .map_err(|e| err(format!("{}: {e}", dir.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        paths
            .iter()
            .map(|p| {
                let text = std::fs::read_to_string(p).map_err(|e| err(format!("{}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| err(format!("{}: {e}", p.display())))
            })
            .collect()
    }
}
