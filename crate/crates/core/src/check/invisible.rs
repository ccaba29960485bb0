//! Read visibility checker: do reads leave footprints in shared memory?
//!
//! A read is *invisible* when serving it applies only trivial primitives —
//! loads that cannot change a base object and so cannot be noticed by
//! anyone else. Two strengths:
//!
//! - **Strong**: every read operation of every read-only transaction must
//!   be free of nontrivial primitive applications.
//! - **Weak**: only transactions that performed reads and ran concurrently
//!   with nobody are held to that standard.
//!
//! Violations name the transaction, the offending read operation, and the
//! exact event.

use crate::ids::{BaseObjectId, TxnId};
use crate::sim::event::Execution;
use crate::sim::primitive::{is_nontrivial, PrimKind};
use crate::tm::history::{derive_history, History, HistoryError};
use crate::tm::ops::TOpKind;
use serde::Serialize;
use std::collections::BTreeSet;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadVisibilityScope {
    /// Only transactions with reads and no concurrency must hide them.
    Weak,
    /// Every read-only transaction must hide all its reads.
    Strong,
}

/// A nontrivial primitive applied while serving a read operation.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct ReadVisibilityViolation {
    pub txn: TxnId,
    /// Operation index of the offending read within its transaction.
    pub top: u32,
    pub event_seq: u64,
    pub primitive: PrimKind,
    pub object: BaseObjectId,
}

#[derive(Clone, PartialEq, Eq, Debug, Default, Serialize)]
pub struct ReadVisibilityReport {
    /// Transactions the scope put under scrutiny.
    pub checked: Vec<TxnId>,
    pub violations: Vec<ReadVisibilityViolation>,
}

impl ReadVisibilityReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check read invisibility over a raw execution log.
pub fn check_invisible_reads(
    execution: &Execution,
    scope: ReadVisibilityScope,
) -> Result<ReadVisibilityReport, HistoryError> {
    let h = derive_history(execution)?;
    let checked: Vec<TxnId> = h
        .txns()
        .iter()
        .copied()
        .filter(|t| in_scope(&h, *t, scope))
        .collect();
    let scrutiny: BTreeSet<TxnId> = checked.iter().copied().collect();

    let mut violations = Vec::new();
    for ev in execution.rmw_events() {
        let (Some(txn), Some(top)) = (ev.txn, ev.top) else {
            continue;
        };
        if !scrutiny.contains(&txn) || !is_nontrivial(ev.primitive) {
            continue;
        }
        let view = h.view(txn).expect("derived txn");
        let is_read_op = view
            .ops
            .get(top as usize)
            .map(|op| op.call.kind() == TOpKind::Read)
            .unwrap_or(false);
        if is_read_op {
            violations.push(ReadVisibilityViolation {
                txn,
                top,
                event_seq: ev.seq,
                primitive: ev.primitive,
                object: ev.object,
            });
        }
    }
    Ok(ReadVisibilityReport {
        checked,
        violations,
    })
}

fn in_scope(h: &History, t: TxnId, scope: ReadVisibilityScope) -> bool {
    let view = h.view(t).expect("known txn");
    match scope {
        ReadVisibilityScope::Strong => view.read_only(),
        ReadVisibilityScope::Weak => {
            !view.rset().is_empty()
                && h.txns()
                    .iter()
                    .all(|&u| u == t || !h.concurrent(t, u).expect("known txns"))
        }
    }
}
