use std::fmt;

use crate::model::Side;

pub type Result<T, E = AsjqError> = std::result::Result<T, E>;

/// A single violated query invariant, reported by [`crate::validate_query`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValidationIssue {
    NoAggregates,
    DuplicateColumn { side: Side, column: String },
    SlotCountMismatch { what: &'static str, left: usize, right: usize },
    DanglingSlot { side: Side, what: &'static str, slot: usize },
    DuplicateSlot { side: Side, what: &'static str, slot: usize },
    EqualPreferenceOnNonJoin { side: Side, column: String },
    AggregatePreferenceMismatch { side: Side, column: String },
    EqualAggregatePreference { name: String },
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NoAggregates => write!(f, "ASJQ requires at least one aggregate"),
            Self::DuplicateColumn { side, column } => {
                write!(f, "{side} relation declares column `{column}` twice")
            }
            Self::SlotCountMismatch { what, left, right } => {
                write!(f, "{what} slot count differs: left has {left}, right has {right}")
            }
            Self::DanglingSlot { side, what, slot } => {
                write!(f, "{side} relation: {what} slot {slot} has no matching declaration")
            }
            Self::DuplicateSlot { side, what, slot } => {
                write!(f, "{side} relation: {what} slot {slot} is used more than once")
            }
            Self::EqualPreferenceOnNonJoin { side, column } => {
                write!(f, "{side} relation: column `{column}` uses EQUAL outside a join role")
            }
            Self::AggregatePreferenceMismatch { side, column } => write!(
                f,
                "{side} relation: aggregate column `{column}` disagrees with its AGG preference"
            ),
            Self::EqualAggregatePreference { name } => {
                write!(f, "aggregate `{name}` must prefer MIN or MAX")
            }
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AsjqError {
    #[error("invalid query: {}", join_issues(.0))]
    InvalidQuery(Vec<ValidationIssue>),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("invalid relation: {0}")]
    InvalidRelation(String),

    #[error("parse error at {line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{path}: {message}")]
    Load { path: String, message: String },

    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn join_issues(issues: &[ValidationIssue]) -> String {
    issues
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
