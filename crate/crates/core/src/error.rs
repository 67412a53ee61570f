use thiserror::Error;

/// Errors produced by parsing, validation and numerical operations.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input text. `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Input violates a documented precondition or invariant.
    #[error("invalid input: {0}")]
    Validation(String),

    /// Two operands carry different frequency grids. Grids must be
    /// bitwise identical; resampling is an explicit, separate step.
    #[error("frequency grid mismatch: {0}")]
    GridMismatch(String),

    /// A per-frequency computation hit a singular denominator.
    #[error("singular operation at {freq_hz} Hz: {message}")]
    Singular { freq_hz: f64, message: String },

    /// A numerical procedure failed for reasons other than a single
    /// singular frequency point.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// An iterative fit ran out of iterations.
    #[error("fit did not converge after {iterations} iterations (last relative residual {last_residual:.3e})")]
    Convergence {
        iterations: usize,
        last_residual: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
