//! Surface shear-wave (Love-type) dispersion spectra for half-spaces whose
//! density `ρ(y)` and shear modulus `μ(y)` vary with depth.
//!
//! Modes are solutions of `(μu')' + (Ωρ − Kμ)u = 0` with `u'(0) = 0` that
//! decay as `y → ∞`, where `K = k²` and `Ω = ω²`. They are found by
//! shooting in Prüfer coordinates from the surface and from the tail and
//! matching the two phase angles at an interior depth.
//!
//! ```no_run
//! use shwave::{find_modes, MaterialProfile, SolverOptions};
//!
//! let profile = MaterialProfile::exp_density(1.0, 5.0, 1.0)?;
//! let search = find_modes(&profile, 4.0, &SolverOptions::default())?;
//! for m in &search.modes {
//!     println!("mode {}: Omega = {}", m.index, m.omega);
//! }
//! # Ok::<(), shwave::Error>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod cli;
pub mod config;
pub mod decay;
pub mod dispersion;
pub mod error;
pub mod interp;
pub mod liouville;
pub mod medium;
pub mod ode;
pub mod oracle;
pub mod profile;
pub mod prufer;
pub mod quad;
pub mod report;

pub use dispersion::{
    estimate_mode_count, find_modes, mismatch, oscillation_test, trace_branches, Branch, Frame, Mode, ModeSearch,
    OscillationVerdict, Solver, SolverOptions,
};
pub use error::{Error, Result};
pub use medium::Medium;
pub use profile::{MaterialProfile, ParamPoint, ProfileSpec};
pub use prufer::{IntegratorSettings, PhaseState};
