//! Transactional operations: the calls a transaction makes and the outcomes
//! they produce. These appear in execution logs as invocation/response
//! marker records, bracketing the primitive events each operation issues.

use crate::ids::TObjectId;
use crate::value::Value;
use serde::{Deserialize, Serialize};
use std::fmt;

/// A transactional operation invocation.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum TOpCall {
    Read { x: TObjectId },
    Write { x: TObjectId, v: Value },
    TryCommit,
}

impl TOpCall {
    pub fn read(x: TObjectId) -> Self {
        TOpCall::Read { x }
    }

    pub fn write(x: TObjectId, v: impl Into<Value>) -> Self {
        TOpCall::Write { x, v: v.into() }
    }

    pub fn object(&self) -> Option<TObjectId> {
        match self {
            TOpCall::Read { x } | TOpCall::Write { x, .. } => Some(*x),
            TOpCall::TryCommit => None,
        }
    }

    pub fn kind(&self) -> TOpKind {
        match self {
            TOpCall::Read { .. } => TOpKind::Read,
            TOpCall::Write { .. } => TOpKind::Write,
            TOpCall::TryCommit => TOpKind::TryCommit,
        }
    }
}

impl fmt::Display for TOpCall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TOpCall::Read { x } => write!(f, "read({x})"),
            TOpCall::Write { x, v } => write!(f, "write({x},{v})"),
            TOpCall::TryCommit => write!(f, "tryCommit"),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TOpKind {
    Read,
    Write,
    TryCommit,
}

/// The response of a transactional operation.
///
/// A read returns a value, a write acknowledges, tryCommit commits — and any
/// of them may abort the transaction instead, which ends it.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TOpOutcome {
    Value(Value),
    Ok,
    Committed,
    Aborted,
}

impl TOpOutcome {
    pub fn is_abort(&self) -> bool {
        matches!(self, TOpOutcome::Aborted)
    }

    /// Commit and abort end the transaction; value/ok leave it running.
    pub fn is_terminal(&self) -> bool {
        matches!(self, TOpOutcome::Committed | TOpOutcome::Aborted)
    }

    pub fn value(&self) -> Option<&Value> {
        match self {
            TOpOutcome::Value(v) => Some(v),
            _ => None,
        }
    }

    /// Whether this outcome shape is permitted for the given call.
    pub fn matches_call(&self, call: &TOpCall) -> bool {
        match (call, self) {
            (TOpCall::Read { .. }, TOpOutcome::Value(_) | TOpOutcome::Aborted) => true,
            (TOpCall::Write { .. }, TOpOutcome::Ok | TOpOutcome::Aborted) => true,
            (TOpCall::TryCommit, TOpOutcome::Committed | TOpOutcome::Aborted) => true,
            _ => false,
        }
    }
}

impl fmt::Display for TOpOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TOpOutcome::Value(v) => write!(f, "{v}"),
            TOpOutcome::Ok => write!(f, "ok"),
            TOpOutcome::Committed => write!(f, "C"),
            TOpOutcome::Aborted => write!(f, "A"),
        }
    }
}
