use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("metric is not positive definite (det = {det:e})")]
    DegenerateMetric { det: f64 },

    #[error("non-finite state at t = {t} s")]
    NonFinite { t: f64 },

    #[error("newton projection did not converge after {iterations} steps (|psi| = {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("constraint gradient vanishes (|grad psi|_g = {norm:e})")]
    SingularGradient { norm: f64 },

    #[error("invalid robot parameter `{0}`: must be strictly positive and finite")]
    InvalidParams(&'static str),

    #[error("parse error{}: {message}", location(.line, .field))]
    Parse {
        line: Option<usize>,
        field: Option<String>,
        message: String,
    },

    #[error("invalid scenario: {field}: {message}")]
    Validation { field: String, message: String },

    #[error("`{0}` is neither a built-in scenario nor a readable file")]
    UnknownScenario(String),

    #[error("{context}: {source}")]
    Run {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn location(line: &Option<usize>, field: &Option<String>) -> String {
    match (line, field) {
        (Some(l), Some(f)) => format!(" at line {l} (field `{f}`)"),
        (Some(l), None) => format!(" at line {l}"),
        (None, Some(f)) => format!(" (field `{f}`)"),
        (None, None) => String::new(),
    }
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }
}
