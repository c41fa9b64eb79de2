use thiserror::Error;

/// Failures reported by the solver.
///
/// Variants split into two families: invalid input (`Domain`, `InvalidParameter`)
/// and numerical failure (everything else). The CLI and the C ABI map these
/// families onto distinct exit/status codes.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("coordinate x = {x} outside the well (|x| must be < {half_width})")]
    Domain { x: f64, half_width: f64 },

    #[error("matching matrix is degenerate (zero norm) at R = {r}")]
    DegenerateMatrix { r: f64 },

    #[error("candidate R = {r} is not a bound state (matching residual {residual:.3e})")]
    NotARoot { r: f64, residual: f64 },

    #[error("no root in the admissible interval: {0}")]
    NoRoot(String),

    #[error("Newton iteration did not converge after {iterations} steps (last R = {r}, parameter = {param}, residual = {residual:.3e})")]
    NoConvergence { iterations: usize, r: f64, param: f64, residual: f64 },

    #[error("hint is too far from a double root: {0}")]
    HintTooFar(String),

    #[error("no detachment inside bracket [{lo}, {hi}]")]
    NoDetachment { lo: f64, hi: f64 },

    #[error("characteristic determinant lost reality: |Im|/scale = {ratio:.3e} at E = {energy}")]
    BrokenSymmetry { energy: f64, ratio: f64 },
}

impl Error {
    /// True for errors caused by the caller's input rather than by the numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::InvalidParameter(_) | Error::Domain { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
