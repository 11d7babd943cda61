use thiserror::Error;

/// Errors raised by the forward model, the fitting pipeline and the file readers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not reach tolerance: achieved relative error {achieved:.3e}, accepted {accepted:.1e}")]
    Quadrature { achieved: f64, accepted: f64 },

    #[error("order {order} is evanescent (|n·λ/d| = {ratio:.4} > 1)")]
    Evanescent { order: i32, ratio: f64 },

    #[error("under-determined problem: {0}")]
    UnderDetermined(String),

    #[error("fit did not converge after {iterations} iterations (objective {objective:.6e}, best {best:?})")]
    NonConvergence {
        iterations: usize,
        objective: f64,
        best: Vec<f64>,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown grating preset '{0}' (known: I, II, III)")]
    UnknownPreset(String),

    #[error("missing mandatory field '{0}'")]
    MissingField(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
