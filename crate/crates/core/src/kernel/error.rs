use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KernelError {
    #[error("ill-typed {location}: expected {expected}, found {actual}")]
    IllTyped {
        location: String,
        expected: String,
        actual: String,
    },
    #[error("unknown constant `{0}`")]
    UnknownConst(String),
    #[error("variable out of scope: {0}")]
    UnscopedVar(String),
    #[error("undeclared metavariable {0}")]
    UnknownMeta(String),
}
