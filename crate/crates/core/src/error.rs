use crate::solver::SolveStatus;

/// A single field-level validation failure.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Issue {
    pub field: String,
    pub message: String,
}

impl Issue {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { field: field.into(), message: message.into() }
    }
}

impl std::fmt::Display for Issue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {}", join_issues(.0))]
    Invalid(Vec<Issue>),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("instance is structurally infeasible: {0}")]
    Infeasible(String),

    #[error("solver backend `{0}` is not available")]
    BackendUnavailable(String),

    #[error("solver returned {status:?} while solving {context}")]
    Solver { status: SolveStatus, context: String },

    #[error("enumeration would visit {count} realizations, above the cap of {cap}")]
    EnumerationCap { count: u128, cap: u128 },

    #[error("dual bound saturated on `{constraint}` after enlarging big-M {attempts} times")]
    BigMOverflow { constraint: String, attempts: usize },

    #[error("MPS parse error on line {line}: {message}")]
    Mps { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn join_issues(issues: &[Issue]) -> String {
    issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; ")
}

impl Error {
    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid(vec![Issue::new(field, message)])
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
