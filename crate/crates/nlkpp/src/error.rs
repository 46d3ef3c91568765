use thiserror::Error;

/// Errors produced by the library and the CLI.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid construction parameters (kernel family, grid extents, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// A numeric argument is outside the admissible domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Mismatched grids or incompatible array shapes.
    #[error("shape error: {0}")]
    Shape(String),

    /// The kernel is under-resolved on the grid: sigma/h must be >= 4.
    #[error("resolution error: sigma/h = {ratio:.3} < 4 on axis {axis}; need n >= {required_n} (got {n})")]
    Resolution {
        axis: usize,
        ratio: f64,
        required_n: usize,
        n: usize,
    },

    /// A limit-regime precondition failed (wrong sign of the selecting quantity).
    #[error("regime error: {0}")]
    Regime(String),

    /// An iterative solver failed to converge.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Internal consistency check failed (should not happen).
    #[error("internal error: {0}")]
    Internal(String),

    /// Config-file or expression parsing failure.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
