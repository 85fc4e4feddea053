use std::path::PathBuf;

use thiserror::Error;

use crate::graph::StateKey;

pub type Result<T, E = GepoError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum GepoError {
    #[error("invalid embedding: {0}")]
    InvalidEmbedding(String),

    #[error("embedding provider inconsistency: expected dimension {expected}, got {actual}")]
    ProviderInconsistency { expected: usize, actual: usize },

    #[error("empty observation")]
    EmptyObservation,

    #[error("trajectory has no steps")]
    EmptyTrajectory,

    #[error("empty group")]
    EmptyGroup,

    #[error("eigenvector centrality did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("centrality snapshot revision {snapshot} does not match graph revision {graph}")]
    RevisionMismatch { snapshot: u64, graph: u64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value in trajectory {trajectory} at timestep {timestep}")]
    NumericFailure { trajectory: usize, timestep: usize },

    #[error("unknown state {0}")]
    UnknownState(StateKey),

    #[error("config error: {0}")]
    Config(String),

    #[error("episode already finished")]
    EpisodeFinished,

    #[error("unknown action {0}")]
    UnknownAction(usize),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl GepoError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        GepoError::Io { path: path.into(), source }
    }

    /// Short stable tag used on the CLI's machine-readable error line.
    pub fn kind(&self) -> &'static str {
        match self {
            GepoError::InvalidEmbedding(_) => "invalid-embedding",
            GepoError::ProviderInconsistency { .. } => "provider-inconsistency",
            GepoError::EmptyObservation => "empty-observation",
            GepoError::EmptyTrajectory => "empty-trajectory",
            GepoError::EmptyGroup => "empty-group",
            GepoError::NonConvergence { .. } => "non-convergence",
            GepoError::RevisionMismatch { .. } => "revision-mismatch",
            GepoError::Shape(_) => "shape",
            GepoError::NumericFailure { .. } => "numeric-failure",
            GepoError::UnknownState(_) => "unknown-state",
            GepoError::Config(_) => "config",
            GepoError::EpisodeFinished => "episode-finished",
            GepoError::UnknownAction(_) => "action",
            GepoError::Io { .. } => "io",
            GepoError::Csv(_) => "csv",
        }
    }
}
