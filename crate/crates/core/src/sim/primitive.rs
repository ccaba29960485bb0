//! Read-modify-write primitives and their classification.
//!
//! Every memory access is an atomic primitive `⟨g, h⟩`: `g` maps the old
//! object state (and operands) to the new state, `h` to the response. The
//! classification below is total over the supported kinds:
//!
//! - *trivial* primitives never change the object state (`READ`, `LL`);
//! - *nontrivial* primitives may (`WRITE`, `CAS`, `SC`, `FETCH_ADD`);
//! - *conditional* primitives change the state for at most one old value per
//!   operand (`CAS`, `SC`); a plain write or fetch-add changes (almost) every
//!   state and is not conditional.

use crate::value::Value;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimKind {
    Read,
    Write,
    Cas,
    Ll,
    Sc,
    FetchAdd,
}

impl fmt::Display for PrimKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PrimKind::Read => "read",
            PrimKind::Write => "write",
            PrimKind::Cas => "cas",
            PrimKind::Ll => "ll",
            PrimKind::Sc => "sc",
            PrimKind::FetchAdd => "fetch_add",
        };
        f.write_str(s)
    }
}

/// A primitive is trivial when its update function is the identity for every
/// state and operand.
pub fn is_trivial(kind: PrimKind) -> bool {
    matches!(kind, PrimKind::Read | PrimKind::Ll)
}

pub fn is_nontrivial(kind: PrimKind) -> bool {
    !is_trivial(kind)
}

/// Conditional primitives change the object for at most one old state per
/// operand value (the "expected" state of `CAS`, the linked state of `SC`).
pub fn is_conditional(kind: PrimKind) -> bool {
    matches!(kind, PrimKind::Cas | PrimKind::Sc)
}

/// A primitive instance: kind plus operands.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct PrimitiveOp {
    pub kind: PrimKind,
    pub operands: Vec<Value>,
}

impl PrimitiveOp {
    pub fn read() -> Self {
        PrimitiveOp {
            kind: PrimKind::Read,
            operands: vec![],
        }
    }

    pub fn write(v: impl Into<Value>) -> Self {
        PrimitiveOp {
            kind: PrimKind::Write,
            operands: vec![v.into()],
        }
    }

    pub fn cas(expected: impl Into<Value>, new: impl Into<Value>) -> Self {
        PrimitiveOp {
            kind: PrimKind::Cas,
            operands: vec![expected.into(), new.into()],
        }
    }

    pub fn ll() -> Self {
        PrimitiveOp {
            kind: PrimKind::Ll,
            operands: vec![],
        }
    }

    pub fn sc(v: impl Into<Value>) -> Self {
        PrimitiveOp {
            kind: PrimKind::Sc,
            operands: vec![v.into()],
        }
    }

    pub fn fetch_add(delta: i64) -> Self {
        PrimitiveOp {
            kind: PrimKind::FetchAdd,
            operands: vec![Value::Int(delta)],
        }
    }

    pub fn is_trivial(&self) -> bool {
        is_trivial(self.kind)
    }

    pub fn is_conditional(&self) -> bool {
        is_conditional(self.kind)
    }
}

impl fmt::Display for PrimitiveOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        if !self.operands.is_empty() {
            write!(f, "(")?;
            for (i, v) in self.operands.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{v}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum PrimError {
    #[error("{kind} expects {expected} operand(s), got {got}")]
    Arity {
        kind: PrimKind,
        expected: usize,
        got: usize,
    },
    #[error("fetch_add needs an integer object and integer delta")]
    NotAnInteger,
}

/// The outcome of applying a primitive to an object state.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Applied {
    pub new_state: Value,
    pub response: Value,
}

/// Apply a primitive to an object state, outside of any memory bookkeeping.
///
/// `link_valid` tells `SC` whether the calling process still holds a valid
/// link on the object (set by its `LL`, broken by any intervening write-class
/// primitive). A failed `SC` leaves the state unchanged and responds `false`.
pub fn apply_primitive(
    op: &PrimitiveOp,
    state: &Value,
    link_valid: bool,
) -> Result<Applied, PrimError> {
    let arity = |expected: usize| -> Result<(), PrimError> {
        if op.operands.len() == expected {
            Ok(())
        } else {
            Err(PrimError::Arity {
                kind: op.kind,
                expected,
                got: op.operands.len(),
            })
        }
    };
    match op.kind {
        PrimKind::Read | PrimKind::Ll => {
            arity(0)?;
            Ok(Applied {
                new_state: state.clone(),
                response: state.clone(),
            })
        }
        PrimKind::Write => {
            arity(1)?;
            Ok(Applied {
                new_state: op.operands[0].clone(),
                response: Value::Bool(true),
            })
        }
        PrimKind::Cas => {
            arity(2)?;
            if *state == op.operands[0] {
                Ok(Applied {
                    new_state: op.operands[1].clone(),
                    response: Value::Bool(true),
                })
            } else {
                Ok(Applied {
                    new_state: state.clone(),
                    response: Value::Bool(false),
                })
            }
        }
        PrimKind::Sc => {
            arity(1)?;
            if link_valid {
                Ok(Applied {
                    new_state: op.operands[0].clone(),
                    response: Value::Bool(true),
                })
            } else {
                Ok(Applied {
                    new_state: state.clone(),
                    response: Value::Bool(false),
                })
            }
        }
        PrimKind::FetchAdd => {
            arity(1)?;
            let old = state.as_int().ok_or(PrimError::NotAnInteger)?;
            let delta = op.operands[0].as_int().ok_or(PrimError::NotAnInteger)?;
            Ok(Applied {
                new_state: Value::Int(old.wrapping_add(delta)),
                response: Value::Int(old),
            })
        }
    }
}
