use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A point was evaluated outside the closed box of a coefficient field.
    #[error("point {point:?} lies outside the domain box [{lo:?}, {hi:?}]")]
    Domain {
        point: Vec<f64>,
        lo: Vec<f64>,
        hi: Vec<f64>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    /// Inputs violate an operation's contract (mismatched dimensions, grids, modes).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A length scale is too small to be represented on the working grid.
    #[error("under-resolved {what}: {value:.6e} is below the required {required:.6e}")]
    Resolution {
        what: &'static str,
        value: f64,
        required: f64,
    },

    #[error("iteration budget exhausted after {iterations} iterations (relative residual {residual:.3e})")]
    Iteration { iterations: usize, residual: f64 },

    #[error("insufficient data: {0}")]
    Data(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Experiment {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Wraps an error with the name of the experiment that produced it.
    pub fn in_experiment(self, context: impl Into<String>) -> Self {
        Error::Experiment {
            context: context.into(),
            source: Box::new(self),
        }
    }
}
