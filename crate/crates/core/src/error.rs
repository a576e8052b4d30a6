//! Error type shared by every module of the library.

use thiserror::Error;

use crate::circuit::NodeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse grouping used by front ends to map errors to exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Compatibility,
    Format,
    Resource,
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("cycle detected through node {0}")]
    Cycle(NodeId),
    #[error("internal node {0} has no children")]
    EmptyChildren(NodeId),
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),
    #[error("circuit is not {0}")]
    Structure(&'static str),
    #[error("value {value} of variable {var} is outside the leaf support")]
    Domain { var: usize, value: f64 },
    #[error("evidence has zero likelihood")]
    ZeroEvidence,
    #[error("invalid variable bijection: {0}")]
    Bijection(String),
    #[error("circuits are not compatible: product nodes p{p} and q{q} decompose differently")]
    NotCompatible { p: NodeId, q: NodeId },
    #[error("circuits are not compatible: {0}")]
    ScopeMismatch(String),
    #[error("scope {0:?} is decomposed inconsistently")]
    InconsistentDecomposition(Vec<usize>),
    #[error("unsupported leaf pair: {0}")]
    UnsupportedPair(String),
    #[error("infeasible transportation problem: {0}")]
    Infeasible(String),
    #[error("coupling weights violate marginal constraints by {0:e}")]
    InfeasibleWeights(f64),
    #[error("transportation simplex exceeded {0} pivots")]
    SolverStalled(usize),
    #[error("{what} exceeds cap: {size} > {cap}")]
    TooLarge { what: &'static str, size: u128, cap: u128 },
    #[error("datapoint {0} has zero likelihood")]
    ZeroLikelihood(usize),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("format error: {0}")]
    Format(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable snake-case identifier used in diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Cycle(_) => "cycle",
            Error::EmptyChildren(_) => "empty_children",
            Error::InvalidCircuit(_) => "invalid_circuit",
            Error::Structure(_) => "structure",
            Error::Domain { .. } => "domain",
            Error::ZeroEvidence => "zero_evidence",
            Error::Bijection(_) => "bijection",
            Error::NotCompatible { .. } | Error::ScopeMismatch(_) => "not_compatible",
            Error::InconsistentDecomposition(_) => "inconsistent_decomposition",
            Error::UnsupportedPair(_) => "unsupported_pair",
            Error::Infeasible(_) => "infeasible",
            Error::InfeasibleWeights(_) => "infeasible_weights",
            Error::SolverStalled(_) => "solver_stalled",
            Error::TooLarge { .. } => "too_large",
            Error::ZeroLikelihood(_) => "zero_likelihood",
            Error::LengthMismatch(..) => "length_mismatch",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::NotCompatible { .. }
            | Error::ScopeMismatch(_)
            | Error::Bijection(_)
            | Error::InconsistentDecomposition(_)
            | Error::UnsupportedPair(_) => ErrorClass::Compatibility,
            Error::Cycle(_)
            | Error::EmptyChildren(_)
            | Error::InvalidCircuit(_)
            | Error::Structure(_)
            | Error::Domain { .. }
            | Error::Format(_)
            | Error::Io(_)
            | Error::Json(_)
            | Error::Csv(_)
            | Error::LengthMismatch(..) => ErrorClass::Format,
            Error::TooLarge { .. } | Error::SolverStalled(_) => ErrorClass::Resource,
            Error::ZeroEvidence
            | Error::Infeasible(_)
            | Error::InfeasibleWeights(_)
            | Error::ZeroLikelihood(_) => ErrorClass::Numeric,
        }
    }
}
