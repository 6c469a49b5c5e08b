use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid truncation dimension {dim}: every mode needs at least 2 Fock levels")]
    InvalidDimension { dim: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("mode index {index} out of range for a {modes}-mode space")]
    ModeIndex { index: usize, modes: usize },

    #[error(
        "truncation too small for |alpha|^2 = {mean:.4}: tail weight {tail:.3e} >= {eps:.1e}, \
         need dim >= {required}"
    )]
    TruncationTooSmall {
        mean: f64,
        tail: f64,
        eps: f64,
        required: usize,
    },

    #[error("partial trace needs at least one mode to keep")]
    EmptyKeep,

    #[error("expected a single-mode state, found {modes} modes; call partial_trace first")]
    NotSingleMode { modes: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("step size underflow: h = {h:.3e} is below 1e-12 of the propagation length")]
    Stiffness { h: f64 },

    #[error("CFL number {cfl:.3} exceeds the stability limit 0.5")]
    Cfl { cfl: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical tolerance breached: {0}")]
    Tolerance(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
