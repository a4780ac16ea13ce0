use thiserror::Error;

use crate::graph::NodeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Input outside the domain of an operation (bad ranges, mismatched node sets).
    #[error("domain error: {0}")]
    Domain(String),

    /// A documented precondition of a stage does not hold.
    #[error("precondition violated in {stage}: {detail}")]
    Precondition { stage: &'static str, detail: String },

    /// A value is not representable at the required fixed-point precision.
    #[error("precision error: {0}")]
    Precision(String),

    #[error("enumeration budget exceeded: {needed} free bits, budget {budget}")]
    EnumerationBudget { needed: usize, budget: usize },

    #[error("message of {bits} bits from node {node} in round {round} exceeds the {budget}-bit budget")]
    MessageTooLarge {
        node: NodeId,
        round: usize,
        bits: usize,
        budget: usize,
    },

    #[error("round budget of {limit} exhausted")]
    RoundLimit { limit: usize },

    #[error("node {from} addressed non-neighbor {to}")]
    NotANeighbor { from: NodeId, to: NodeId },

    /// A produced structure failed its own post-condition check.
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("instance too large: {0}")]
    TooLarge(String),

    #[error("parse error on line {line}: {detail}")]
    Parse { line: usize, detail: String },
}

impl Error {
    pub(crate) fn precondition(stage: &'static str, detail: impl Into<String>) -> Self {
        Error::Precondition {
            stage,
            detail: detail.into(),
        }
    }

    /// True for errors caused by the caller's input or configured budgets,
    /// false for internally detected invariant violations.
    pub fn is_precondition(&self) -> bool {
        !matches!(self, Error::Invariant(_))
    }
}
