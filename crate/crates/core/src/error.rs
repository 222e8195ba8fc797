use std::fmt;

use thiserror::Error;

/// What a rank-deficiency or conditioning failure refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subject {
    /// Per-domain Gram matrix, by domain id.
    Domain(usize),
    /// Aggregated Gram matrix of a candidate domain, by candidate index.
    Candidate(usize),
    /// A matrix that is not attached to a domain.
    Matrix,
}

impl fmt::Display for Subject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Subject::Domain(id) => write!(f, "domain {id}"),
            Subject::Candidate(m) => write!(f, "candidate domain {m}"),
            Subject::Matrix => f.write_str("matrix"),
        }
    }
}

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("Gram matrix of {subject} is rank deficient (reciprocal condition {rcond:.3e})")]
    RankDeficient { subject: Subject, rcond: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unknown domain id {0}")]
    UnknownId(usize),

    #[error("no summary for the target domain (id 0)")]
    MissingTarget,

    #[error("raw rows of domain {0} are required but only summary statistics are available")]
    PrivacyViolation(usize),

    #[error("simplex QP solver did not converge: duality gap {gap:.3e} after {iterations} iterations")]
    NotConverged {
        best: Vec<f64>,
        gap: f64,
        iterations: usize,
    },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("standardization denominator {0:.3e} is numerically zero")]
    SingularDenominator(f64),

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
