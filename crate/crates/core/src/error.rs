use thiserror::Error;

/// Errors raised by validation, classification, criteria, and synthesis.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmbedError {
    // row and column fields are 0-based; messages print them 1-based
    #[error("matrix must be 2x2 or 3x3, got {rows}x{cols}")]
    BadDimension { rows: usize, cols: usize },

    #[error("entry ({}, {}) is not finite", .row + 1, .col + 1)]
    NonFinite { row: usize, col: usize },

    #[error("entry ({}, {}) = {value} is negative", .row + 1, .col + 1)]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("entry ({}, {}) = {value} exceeds 1", .row + 1, .col + 1)]
    EntryAboveOne { row: usize, col: usize, value: f64 },

    #[error("row {} sums to {sum}, expected 1", .row + 1)]
    RowSumViolation { row: usize, sum: f64 },

    #[error("chain is decomposable: no unique stationary distribution")]
    Decomposable,

    #[error("invalid stationary distribution: {0}")]
    InvalidDistribution(String),

    #[error("stationary distribution has a zero component; cycle parameters need mu > 0")]
    NonPositiveStationary,

    #[error("invalid generator: {0}")]
    InvalidGenerator(String),

    #[error("mu' Q deviates from zero by {residual:e}")]
    NotStationary { residual: f64 },

    #[error("flux balance violated by {residual:e}")]
    BalanceViolation { residual: f64 },

    #[error("invalid cycle parameters: {0}")]
    InvalidParams(String),

    #[error("generator has real eigenvalues (4 beta - alpha^2 = {radicand:e} relative)")]
    RealEigenvalues { radicand: f64 },

    #[error("matrix is not of the form P_inf + lambda (I - P_inf) (deviation {deviation:e})")]
    StructureViolation { deviation: f64 },

    #[error("argument {value} outside the admissible domain: {what}")]
    DomainError { what: &'static str, value: f64 },

    #[error("not embeddable: {0}")]
    NotEmbeddable(String),

    #[error("root search for the H-ratio failed after {iterations} iterations (|g| = {residual:e})")]
    RootFindFailure { iterations: usize, residual: f64 },

    #[error("eigenvalues too close for spectral projectors (gap {gap:e})")]
    ProjectorDegenerate { gap: f64 },

    #[error("witness failed verification: residual {residual:e}")]
    VerificationFailure { residual: f64 },

    #[error("matrix norm {norm} too large for the exponential")]
    Overflow { norm: f64 },
}

pub type Result<T> = std::result::Result<T, EmbedError>;
