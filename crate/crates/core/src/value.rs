//! The value domain stored in base objects.
//!
//! Values are small and structural on purpose: plain integers, booleans, a
//! distinguished bottom, process/face tokens used by the mutex, and two
//! composite words (a versioned cell and a version-lock word) used by the
//! transactional memories. Equality is plain structural equality, which is
//! what compare-and-swap compares.

use crate::ids::{ProcessId, TxnId};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Value {
    /// The distinguished "nothing here" value.
    Bottom,
    Int(i64),
    Bool(bool),
    /// A bare process id (successor registers).
    Pid(ProcessId),
    /// A process/face token; the mutex stores these in its shared t-object.
    Face {
        pid: ProcessId,
        face: u8,
    },
    /// A value paired with a version counter, bumped on every successful
    /// update. Used as the single cell of the one-object TM.
    Versioned {
        value: Box<Value>,
        version: u64,
    },
    /// A version-lock word: version counter, lock bit, and owner when locked.
    VersionLock {
        version: u64,
        locked: bool,
        owner: Option<TxnId>,
    },
}

impl Value {
    pub fn versioned(value: Value, version: u64) -> Value {
        Value::Versioned {
            value: Box::new(value),
            version,
        }
    }

    pub fn unlocked(version: u64) -> Value {
        Value::VersionLock {
            version,
            locked: false,
            owner: None,
        }
    }

    pub fn locked_by(version: u64, owner: TxnId) -> Value {
        Value::VersionLock {
            version,
            locked: true,
            owner: Some(owner),
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Value {
        Value::Int(v)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Value {
        Value::Bool(v)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bottom => write!(f, "⊥"),
            Value::Int(v) => write!(f, "{v}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Pid(p) => write!(f, "{p}"),
            Value::Face { pid, face } => write!(f, "[{pid},{face}]"),
            Value::Versioned { value, version } => write!(f, "({value}@v{version})"),
            Value::VersionLock {
                version,
                locked,
                owner,
            } => match owner {
                Some(t) if *locked => write!(f, "(v{version},locked,{t})"),
                _ if *locked => write!(f, "(v{version},locked)"),
                _ => write!(f, "(v{version},free)"),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_is_stable() {
        let samples = vec![
            Value::Bottom,
            Value::Int(-3),
            Value::Bool(true),
            Value::Pid(ProcessId(2)),
            Value::Face {
                pid: ProcessId(1),
                face: 1,
            },
            Value::versioned(Value::Int(7), 4),
            Value::locked_by(9, TxnId(3)),
        ];
        for v in samples {
            let js = serde_json::to_string(&v).unwrap();
            let back: Value = serde_json::from_str(&js).unwrap();
            assert_eq!(back, v, "round trip via {js}");
        }
    }

    #[test]
    fn bottom_serializes_compactly() {
        assert_eq!(serde_json::to_string(&Value::Bottom).unwrap(), "\"bottom\"");
        assert_eq!(
            serde_json::to_string(&Value::Int(5)).unwrap(),
            "{\"int\":5}"
        );
    }
}
