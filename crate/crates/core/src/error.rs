use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Extents that must agree do not.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    /// A decomposition failed to converge on a matrix of the given shape.
    #[error("numerical failure on {rows}x{cols} matrix: {what}")]
    Numeric { what: String, rows: usize, cols: usize },

    /// A bond or Hilbert-space size exceeded its configured hard limit.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("no convergence after {sweeps} sweeps (last energies {trace:?})")]
    Convergence { sweeps: usize, trace: Vec<f64> },

    #[error("configuration error: {0}")]
    Config(String),

    /// The quadratic Hamiltonian has no stable vacuum.
    #[error("unstable model: {0}")]
    Unstable(String),

    #[error("singular scattering problem near omega = {omega}: bound state pole")]
    Pole { omega: f64 },

    #[error("no spectral bin above threshold {threshold:e}")]
    EmptySpectrum { threshold: f64 },

    #[error("inconsistent run: inelastic weight {value} at k = {k} below -{tolerance}")]
    Inconsistent { k: f64, value: f64, tolerance: f64 },

    #[error("unsupported size: {0}")]
    Unsupported(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}
