use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The request cannot be satisfied for these parameters (e.g. L + Delta >= R).
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// A numerical routine failed to reach its tolerance.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// An iterative search ran past its hard limit.
    #[error("did not converge: {0}")]
    NonConvergence(String),

    #[error("query budget exhausted after {0} queries")]
    BudgetExhausted(usize),

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("unknown {kind} '{name}' (known: {known})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        known: String,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
