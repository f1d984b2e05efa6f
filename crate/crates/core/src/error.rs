use std::fmt;

use thiserror::Error;

/// Where an aliasing check found too much mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AliasRegion {
    /// Outer tenth of the radial domain.
    OuterRadius,
    /// Top tenth of the frequency range.
    HighFrequency,
}

impl fmt::Display for AliasRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AliasRegion::OuterRadius => f.write_str("outer 10% of the radial domain"),
            AliasRegion::HighFrequency => f.write_str("top 10% of the frequency range"),
        }
    }
}

/// Why a time step refused to continue.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum BlowupReason {
    /// `‖∇u‖₂` above the configured cap.
    GradCap { grad: f64, cap: f64 },
    /// Too much mass in the top tenth of the frequency range.
    HighFrequency { fraction: f64 },
}

impl fmt::Display for BlowupReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlowupReason::GradCap { grad, cap } => write!(f, "gradient norm {grad:.3e} above cap {cap:.3e}"),
            BlowupReason::HighFrequency { fraction } => {
                write!(f, "{fraction:.3e} of the mass in the top 10% of the frequency range")
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite sample at node {index}")]
    NonFinite { index: usize },

    #[error("expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("aliasing guard tripped: {fraction:.3e} of the mass lies in the {region}")]
    Aliasing { region: AliasRegion, fraction: f64 },

    #[error("ground state iteration stalled after {iterations} iterations (residual {residual:.3e}); grid too coarse or r_max too small?")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("core unresolved: {cells:.2} grid cells across the half maximum, need at least 8")]
    UnresolvedCore { cells: f64 },

    #[error("blowup suspected at t = {t}: {reason}")]
    BlowupSuspected { t: f64, reason: BlowupReason },

    #[error("need at least {needed} samples, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("no breakdown trigger is active")]
    NoTrigger,

    #[error("exterior mass profile never plateaus; concentration is not scale separated")]
    NoPlateau,

    #[error("more than {0} surgery events")]
    MaxEvents(usize),

    #[error("config: {0}")]
    Config(String),

    #[error("parse: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
