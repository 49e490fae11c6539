//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse {
        line: usize,
        col: usize,
        msg: String,
    },

    #[error("evaluation error: {msg} in `{node}`")]
    Eval { msg: String, node: String },

    #[error("dimension error: {0}")]
    Dim(String),

    #[error("membership violation: {0}")]
    Membership(String),

    #[error("{0}")]
    Construction(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("form term is not in dt-split shape: {0}")]
    NonCanonicalForm(String),

    #[error("closedness certificate failed: {0}")]
    NotClosed(String),

    #[error("orbit separation failed: points {0:?} and {1:?} share an image but no group element maps one to the other")]
    Separation(Vec<f64>, Vec<f64>),

    #[error("intersection flag inconsistent with sampling: {0}")]
    FlagInconsistent(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),
}

impl Error {
    pub(crate) fn eval(msg: &str, node: &crate::smooth::Expr) -> Error {
        Error::Eval {
            msg: msg.to_string(),
            node: node.to_string(),
        }
    }

    pub(crate) fn dim(msg: impl Into<String>) -> Error {
        Error::Dim(msg.into())
    }

    /// Exit-status class for the command-line front end: config/parse errors
    /// are distinguished from numeric failures.
    pub fn is_config_class(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. } | Error::Config(_) | Error::UnknownFixture(_) | Error::Dim(_)
        )
    }
}
