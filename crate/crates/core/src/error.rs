use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input violates a documented precondition.
    #[error("validation error: {0}")]
    Validation(String),

    /// An operation was called on a table or object in the wrong state.
    #[error("state error: {0}")]
    State(String),

    /// The generalized James method needs a Raman-like resonance that the
    /// supplied frequencies do not satisfy.
    #[error("off-resonant: generalized James inapplicable ({0})")]
    Inapplicable(String),

    /// Norm drift of the integrator left the configured tolerance.
    #[error("integration quality: norm drift {drift:.3e} exceeds {tolerance:.3e} at step {step} (t = {time})")]
    Integration {
        step: usize,
        time: f64,
        drift: f64,
        tolerance: f64,
    },

    #[error("extraction error: {0}")]
    Extraction(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
