use thiserror::Error;

/// Errors raised by the inference routines.
#[derive(Debug, Error)]
pub enum RankError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is {rows}x{cols} but needs rows >= cols; transpose the input")]
    Dimension { rows: usize, cols: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Singular values tie across the split, so the projected subspace is not
    /// identified. `candidate` is the value computed from one arbitrary basis.
    #[error("singular values tie at split {split} (gap {gap:e}); candidate value {candidate}")]
    DegenerateSubspace { split: usize, gap: f64, candidate: f64 },

    #[error("insufficient data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("{draws} bootstrap draws are too few for level {alpha}")]
    InsufficientDraws { draws: usize, alpha: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("step r={step} failed: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<RankError>,
    },

    #[error("replication {index} failed: {source}")]
    Replication {
        index: usize,
        #[source]
        source: Box<RankError>,
    },

    #[error("I/O error on {path}: {message}")]
    Io { path: String, message: String },

    #[error("serialization failed: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, RankError>;
