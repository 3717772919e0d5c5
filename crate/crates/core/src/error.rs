use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("shooting did not converge: {0}")]
    Shooting(String),

    /// A computed quantity is not resolved well enough to be trusted.
    #[error("accuracy error: {0}")]
    Accuracy(String),

    #[error("grid does not resolve the blow-up scale: h = {h:.3e} but h <= {required:.3e} is required")]
    Resolution { h: f64, required: f64 },

    #[error("no convergence after {iterations} iterations (last residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("potential validation failed: {0}")]
    Validation(String),

    #[error("ambiguous maximum: {0}")]
    Ambiguity(String),

    /// The concentration point ended up at a well that is not among the
    /// flattest ones. This is a finding, so the message carries the data.
    #[error("selection violation: {0}")]
    SelectionViolation(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, with every context layer removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
