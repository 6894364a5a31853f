use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument was violated (dimension, finiteness, range).
    #[error("contract violation: {0}")]
    Contract(String),

    /// The oracle returned a non-finite value.
    #[error("non-finite oracle value {value} at point {point:?}")]
    Evaluation { value: f64, point: Vec<f64> },

    /// An evaluation error raised inside an optimizer loop.
    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    /// The problem/algorithm combination is not runnable.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn at_iteration(self, iteration: usize) -> Self {
        match self {
            e @ Error::AtIteration { .. } => e,
            e => Error::AtIteration {
                iteration,
                source: Box::new(e),
            },
        }
    }

    /// True for failures caused by the oracle rather than by the inputs.
    pub fn is_evaluation(&self) -> bool {
        match self {
            Error::Evaluation { .. } => true,
            Error::AtIteration { source, .. } => source.is_evaluation(),
            _ => false,
        }
    }
}
