use thiserror::Error;

use crate::prufer::PhaseState;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("depth must be non-negative, got {0}")]
    NegativeDepth(f64),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("invalid parameter point: K = {k}, Omega = {omega}")]
    InvalidParam { k: f64, omega: f64 },

    #[error("integration failed at y = {}: {reason}", .last.y)]
    Integration { reason: String, last: PhaseState },

    #[error("no negative tail found for K = {k}, Omega = {omega} up to depth {scanned_to}")]
    NoNegativeTail { k: f64, omega: f64, scanned_to: f64 },

    #[error("tail start not found before depth {scanned_to}; increase the data extent or loosen tail tolerances")]
    TailNotFound { scanned_to: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("decaying solution left (pi/2, pi) at y = {y} (phi mod pi = {phi_mod})")]
    TailInvariant { y: f64, phi_mod: f64 },

    #[error("tail robustness check did not converge: last change {delta:e}")]
    TailConvergence { delta: f64 },

    #[error("mode shape is discontinuous at the matching point (relative jump {0:e})")]
    ShapeMismatch(f64),

    #[error("oracle unavailable: {0}")]
    OracleUnavailable(String),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
