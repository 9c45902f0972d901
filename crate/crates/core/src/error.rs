use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the set where the operation is defined
    /// (control outside `A`, `u` outside `[0, 1]`, non-definite weights, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite evaluation at x = {x:?}, control = {control:?}: {detail}")]
    Evaluation {
        x: Vec<f64>,
        control: Vec<f64>,
        detail: String,
    },

    /// The data violates a standing modelling assumption (e.g. `l >= 0`).
    #[error("model violation: {0}")]
    ModelViolation(String),

    #[error("recession function undefined at x = {x:?}, a = {control:?}: {detail}")]
    RecessionUndefined {
        x: Vec<f64>,
        control: Vec<f64>,
        detail: String,
    },

    #[error("unknown name `{0}`")]
    Lookup(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("point {0:?} lies outside the grid")]
    OutOfDomain(Vec<f64>),

    #[error("time change is not invertible: {0}")]
    NonInvertibleTime(String),

    #[error("enumeration budget exceeded: {required:.3e} sequences required, limit {limit:.3e}")]
    Budget { required: f64, limit: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}
