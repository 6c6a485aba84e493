use std::fmt;

use crate::perturb::PerturbTrace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Position of a parse failure inside an input file (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Location {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}", self.line, self.column)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: expected {expected}, found {found}")]
    DimensionMismatch {
        op: &'static str,
        expected: String,
        found: String,
    },

    #[error("matrix is singular to working precision (sigma_min/sigma_max = {ratio:e}){hint}")]
    SingularMatrix { ratio: f64, hint: &'static str },

    #[error("eigensolver did not converge for a {n}x{n} matrix within {cap} iterations")]
    NonConvergence { n: usize, cap: usize },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("{op} is limited to n <= {max}, got n = {n}")]
    DimensionGuard {
        op: &'static str,
        n: usize,
        max: usize,
    },

    #[error("search exhausted after {attempts} attempts without a certified result")]
    AttemptsExhausted {
        attempts: usize,
        trace: Box<PerturbTrace>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error(
        "reconstruction residual {residual:e} exceeds bound {bound:e} (cond(X) = {condition:e})"
    )]
    ResidualTooLarge {
        residual: f64,
        bound: f64,
        condition: f64,
    },

    #[error("degenerate pencil: adjugate nodes remained singular after {retries} retries")]
    DegeneratePencil { retries: usize },

    #[error("parse error at {location}: {message}")]
    Parse { location: Location, message: String },

    #[error("invalid JSON matrix: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit status used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. }
            | Error::Json(_)
            | Error::Io(_)
            | Error::DimensionMismatch { .. }
            | Error::InvalidArgument(_) => 2,
            Error::SingularMatrix { .. }
            | Error::NonConvergence { .. }
            | Error::NonFinite
            | Error::DimensionGuard { .. }
            | Error::ResidualTooLarge { .. }
            | Error::DegeneratePencil { .. } => 3,
            Error::AttemptsExhausted { .. } => 4,
            Error::Precondition(_) => 5,
        }
    }

    pub(crate) fn dims(
        op: &'static str,
        expected: impl fmt::Display,
        found: impl fmt::Display,
    ) -> Self {
        Error::DimensionMismatch {
            op,
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    pub(crate) fn parse(line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            location: Location { line, column },
            message: message.into(),
        }
    }
}
