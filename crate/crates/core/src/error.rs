use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("history is only defined for n <= 0, got n = {0}")]
    FutureHistory(i64),

    #[error("kernel weight a(n, i) requested with i = {i} > n = {n}")]
    FutureIndex { n: i64, i: i64 },

    #[error("kernel is not diagonal-periodic with period {period}")]
    NotDiagonalPeriodic { period: usize },

    #[error(
        "tail of row {row} not certified within {max_terms} terms (tail bound {tail:e} > {tol:e})"
    )]
    TailNotCertified {
        row: i64,
        max_terms: usize,
        tail: f64,
        tol: f64,
    },

    #[error("full-period product of (1 + s_l) is {product}, too close to 1")]
    PeriodProductIsOne { product: f64 },

    #[error("full-period product of (1 + s_l) is {product}, expected 1")]
    PeriodProductNotOne { product: f64 },

    #[error("factor 1 + s_{index} vanishes")]
    ZeroFactor { index: usize },

    #[error("period mismatch: {what} has {got} entries, expected {expected}")]
    PeriodMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value produced while evaluating {0}")]
    NonFinite(&'static str),

    #[error("singular Jacobian in Newton step")]
    SingularJacobian,
}

impl Error {
    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            reason: reason.into(),
        }
    }
}
