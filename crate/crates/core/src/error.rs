use thiserror::Error;

/// Errors raised by the filter, its configuration, and the tooling around it.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        actual: String,
    },

    #[error("innovation covariance is singular or ill-conditioned (condition {condition:e}) for component with mean {mean:?}")]
    SingularInnovation { condition: f64, mean: Vec<f64> },

    #[error("measurement {measurement:?} lies outside the surveillance region")]
    MeasurementOutsideRegion { measurement: Vec<f64> },

    #[error("assignment problem has no feasible solution")]
    Infeasible,

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to parse {path}: {message}")]
    Parse { path: String, message: String },
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn dims(context: &'static str, expected: impl ToString, actual: impl ToString) -> Self {
        Error::DimensionMismatch {
            context,
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
