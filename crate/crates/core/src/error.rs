//! Top-level error type for the pipeline and the CLI.

use thiserror::Error;

use crate::config::ConfigError;
use crate::plot::PlotError;

#[derive(Debug, Error)]
pub enum TropskelError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    /// The instance itself is unusable (not a star triangulation, origin
    /// outside `P`, ...).
    #[error("{stage}: {message}")]
    Input { stage: &'static str, message: String },
    /// A computation failed on a valid instance.
    #[error("{stage}: {message}")]
    Stage { stage: &'static str, message: String },
    #[error(transparent)]
    Plot(#[from] PlotError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl TropskelError {
    pub fn input(stage: &'static str, e: impl std::fmt::Display) -> Self {
        Self::Input { stage, message: e.to_string() }
    }

    pub fn stage(stage: &'static str, e: impl std::fmt::Display) -> Self {
        Self::Stage { stage, message: e.to_string() }
    }

    /// 2 for bad input, 1 for failed computations.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Input { .. } => 2,
            Self::Stage { .. } | Self::Plot(_) | Self::Io(_) => 1,
        }
    }
}
