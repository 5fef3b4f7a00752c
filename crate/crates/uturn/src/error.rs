use thiserror::Error;

/// Errors surfaced by the library. The CLI maps each family to an exit code.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum Error {
    #[error("parse error at {line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },

    #[error("undeclared variable `{0}`")]
    UndeclaredVariable(String),

    #[error("enumeration budget exceeded: {needed} states requested, budget is {budget}")]
    Budget { needed: u128, budget: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("proof check failed at node {path:?} ({rule}): {msg}")]
    ProofCheck {
        path: Vec<usize>,
        rule: String,
        msg: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed derivation file: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn check(path: &[usize], rule: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::ProofCheck {
            path: path.to_vec(),
            rule: rule.into(),
            msg: msg.into(),
        }
    }
}
