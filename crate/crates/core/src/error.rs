use std::fmt;

use thiserror::Error;

use crate::types::PartitionWitness;

/// Errors produced by ingestion, diagnostics and fitting.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at {location}: {message}")]
    Parse { location: Location, message: String },

    #[error("self-play at {location}: team {team:?} cannot play itself")]
    SelfPlay { location: Location, team: String },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("negative count {value} at [{row}][{col}] in {matrix}")]
    NegativeCount {
        matrix: &'static str,
        row: usize,
        col: usize,
        value: f64,
    },

    #[error("no game records supplied")]
    EmptyInput,

    #[error("dataset has no venue information; {0} requires home/away counts")]
    VenuelessData(&'static str),

    #[error("epsilon must be positive and finite, got {0}")]
    NonPositiveEpsilon(f64),

    #[error("tie parameter out of domain: theta = {0} (Rao-Kupper requires theta > 1)")]
    ThetaDomain(f64),

    #[error("{model} requires at least one tie in the data")]
    NoTies { model: &'static str },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("estimate does not exist: {witness}")]
    Existence { witness: PartitionWitness },

    #[error("no convergence after {} iterations (gradient sup-norm {:.3e})", .0.iterations, .0.gradient_sup_norm)]
    NonConvergence(Box<crate::types::FitResult>),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("at epsilon {epsilon}: {source}")]
    AtEpsilon { epsilon: f64, source: Box<Error> },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// The underlying error with any epsilon annotation removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtEpsilon { source, .. } => source.root(),
            other => other,
        }
    }
}

/// Position of a malformed input item.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    /// 1-based line in a CSV file (the header is line 1).
    Line(u64),
    /// 0-based index into a JSON array.
    Element(usize),
    /// Whole document.
    Document,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Line(l) => write!(f, "line {l}"),
            Location::Element(i) => write!(f, "element {i}"),
            Location::Document => write!(f, "document"),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
