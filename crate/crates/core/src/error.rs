use thiserror::Error;

use crate::beamformer::BeamformerPair;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),

    /// Power iteration ran out of iterations. `best` holds the iterate with
    /// the largest Rayleigh quotient seen.
    #[error("power iteration did not converge after {iterations} iterations")]
    Convergence {
        iterations: usize,
        best: Box<BeamformerPair>,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parameters outside the closed-form regime: {0}")]
    WrongRegime(String),

    #[error("undefined: {0}")]
    Undefined(String),

    #[error("grid has {points} points, cap is {cap}")]
    Resource { points: u128, cap: u128 },

    #[error("empty table")]
    EmptyTable,
}
