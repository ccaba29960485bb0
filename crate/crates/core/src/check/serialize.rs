//! Serializability deciders: can the transactions be laid out one after
//! another, respecting real-time order, so that every answered read returns
//! the latest value?
//!
//! Two properties share the machinery:
//!
//! - **Strict serializability** asks it of the committed transactions only
//!   (commit-pending ones may be completed either way).
//! - **Opacity** asks it of *every* transaction — committed, aborted, and
//!   incomplete alike. Non-committed transactions take part as read-only
//!   observers: they are ordered, their answered reads must be legal, but
//!   their writes are invisible to everyone else.
//!
//! Both searches branch over completions (each commit-pending transaction
//! may commit or abort; every other unfinished transaction aborts), then
//! enumerate real-time-respecting permutations depth-first with prefix
//! legality pruning. The returned witness carries the order and the
//! completion choices, and [`validate_witness`] re-checks any witness with
//! an independent straight-line replay.
//!
//! Exhaustive search is exponential; histories beyond the transaction bound
//! are refused, never answered wrongly.

use super::BoundExceeded;
use crate::ids::{TObjectId, TxnId};
use crate::tm::history::{History, TxnView};
use crate::tm::ops::{TOpCall, TOpOutcome};
use crate::value::Value;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Default ceiling on transactions per history for the exhaustive searches.
pub const DEFAULT_TXN_BOUND: usize = 8;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompletionChoice {
    Commit,
    Abort,
}

/// A found serialization: the transaction order plus how each commit-pending
/// transaction was completed.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct SerializationWitness {
    pub order: Vec<TxnId>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub completion_choices: BTreeMap<TxnId, CompletionChoice>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CheckMode {
    /// Order committed transactions only.
    StrictSerializability,
    /// Order every transaction; non-committed ones observe but never write.
    Opacity,
}

/// Decide strict serializability. `Ok(Some(_))` carries a witness,
/// `Ok(None)` means no serialization exists, `Err` is a bound refusal.
pub fn check_strict_serializability(
    h: &History,
    bound: usize,
) -> Result<Option<SerializationWitness>, BoundExceeded> {
    check(h, CheckMode::StrictSerializability, bound)
}

/// Decide opacity. Same result contract as
/// [`check_strict_serializability`].
pub fn check_opacity(
    h: &History,
    bound: usize,
) -> Result<Option<SerializationWitness>, BoundExceeded> {
    check(h, CheckMode::Opacity, bound)
}

pub fn check(
    h: &History,
    mode: CheckMode,
    bound: usize,
) -> Result<Option<SerializationWitness>, BoundExceeded> {
    let n = h.txns().len();
    if n > bound {
        return Err(BoundExceeded { txns: n, bound });
    }

    let commit_pending: Vec<TxnId> = h
        .views()
        .filter(|v| v.commit_pending())
        .map(|v| v.txn)
        .collect();

    // Branch over completions: each commit-pending transaction may still
    // commit or abort. Everything else keeps its recorded fate (incomplete
    // transactions abort).
    for mask in 0..(1u64 << commit_pending.len()) {
        let mut choices = BTreeMap::new();
        let mut extra_commits = BTreeSet::new();
        for (i, t) in commit_pending.iter().enumerate() {
            if mask & (1 << i) != 0 {
                choices.insert(*t, CompletionChoice::Commit);
                extra_commits.insert(*t);
            } else {
                choices.insert(*t, CompletionChoice::Abort);
            }
        }

        let committed: BTreeSet<TxnId> = h
            .views()
            .filter(|v| v.committed() || extra_commits.contains(&v.txn))
            .map(|v| v.txn)
            .collect();
        let included: Vec<TxnId> = match mode {
            CheckMode::StrictSerializability => committed.iter().copied().collect(),
            CheckMode::Opacity => h.txns().to_vec(),
        };

        if let Some(order) = search_order(h, &included, &committed) {
            return Ok(Some(SerializationWitness {
                order,
                completion_choices: choices,
            }));
        }
    }
    Ok(None)
}

/// Depth-first search for a real-time-respecting, read-legal order of
/// `included`, with `committed` transactions' writes taking effect.
fn search_order(
    h: &History,
    included: &[TxnId],
    committed: &BTreeSet<TxnId>,
) -> Option<Vec<TxnId>> {
    // Real-time predecessors restricted to the included set.
    let mut preds: BTreeMap<TxnId, BTreeSet<TxnId>> = BTreeMap::new();
    for &a in included {
        for &b in included {
            if a != b && h.real_time_precedes(a, b).expect("known txns") {
                preds.entry(b).or_default().insert(a);
            }
        }
    }

    // Candidates tried in order of last event: transactions that finished
    // early tend to serialize early, so witnesses surface fast. Correctness
    // does not depend on this order.
    let mut todo: Vec<TxnId> = included.to_vec();
    todo.sort_by_key(|t| h.view(*t).expect("known txn").last_seq);

    let mut state: BTreeMap<TObjectId, Value> = BTreeMap::new();
    let mut order: Vec<TxnId> = Vec::new();
    let mut placed: BTreeSet<TxnId> = BTreeSet::new();

    fn dfs(
        h: &History,
        todo: &[TxnId],
        committed: &BTreeSet<TxnId>,
        preds: &BTreeMap<TxnId, BTreeSet<TxnId>>,
        state: &mut BTreeMap<TObjectId, Value>,
        order: &mut Vec<TxnId>,
        placed: &mut BTreeSet<TxnId>,
    ) -> bool {
        if order.len() == todo.len() {
            return true;
        }
        for &t in todo {
            if placed.contains(&t) {
                continue;
            }
            if let Some(ps) = preds.get(&t) {
                if ps.iter().any(|p| !placed.contains(p)) {
                    continue;
                }
            }
            let view = h.view(t).expect("known txn");
            if !reads_legal(h, view, state) {
                continue;
            }
            let mut undo: Vec<(TObjectId, Option<Value>)> = Vec::new();
            if committed.contains(&t) {
                for (x, v) in view.writes() {
                    undo.push((x, state.insert(x, v)));
                }
            }
            order.push(t);
            placed.insert(t);
            if dfs(h, todo, committed, preds, state, order, placed) {
                return true;
            }
            placed.remove(&t);
            order.pop();
            for (x, old) in undo.into_iter().rev() {
                match old {
                    Some(v) => state.insert(x, v),
                    None => state.remove(&x),
                };
            }
        }
        false
    }

    if dfs(
        h,
        &todo,
        committed,
        &preds,
        &mut state,
        &mut order,
        &mut placed,
    ) {
        Some(order)
    } else {
        None
    }
}

/// Would this transaction's answered reads all return the latest value if
/// it ran alone against `state`? Own buffered writes shadow the state.
fn reads_legal(h: &History, view: &TxnView, state: &BTreeMap<TObjectId, Value>) -> bool {
    let mut own: BTreeMap<TObjectId, &Value> = BTreeMap::new();
    for op in &view.ops {
        match (&op.call, &op.outcome) {
            (TOpCall::Read { x }, Some(TOpOutcome::Value(got))) => {
                let expected = own
                    .get(x)
                    .copied()
                    .cloned()
                    .or_else(|| state.get(x).cloned())
                    .unwrap_or_else(|| h.initial_value(*x));
                if *got != expected {
                    return false;
                }
            }
            (TOpCall::Write { x, v }, _) => {
                own.insert(*x, v);
            }
            _ => {}
        }
    }
    true
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WitnessError {
    #[error("witness order is not a permutation of the required transactions")]
    WrongTxnSet,
    #[error("witness order puts {later} before {earlier}, violating real-time order")]
    RealTimeViolated { earlier: TxnId, later: TxnId },
    #[error("replaying the witness, transaction {txn}'s read of {x} returned {got}, expected {expected}")]
    IllegalRead {
        txn: TxnId,
        x: TObjectId,
        got: Value,
        expected: Value,
    },
    #[error("completion choice given for {txn}, which is not commit-pending")]
    BadChoice { txn: TxnId },
}

/// Independent witness validator: replays the witness order through a
/// flat interpreter (no sharing with the search) and re-checks the
/// permutation, real-time order, and every answered read.
pub fn validate_witness(
    h: &History,
    witness: &SerializationWitness,
    mode: CheckMode,
) -> Result<(), WitnessError> {
    for (t, _) in &witness.completion_choices {
        let ok = h.view(*t).map(|v| v.commit_pending()).unwrap_or(false);
        if !ok {
            return Err(WitnessError::BadChoice { txn: *t });
        }
    }

    let committed: BTreeSet<TxnId> = h
        .views()
        .filter(|v| {
            v.committed()
                || witness.completion_choices.get(&v.txn) == Some(&CompletionChoice::Commit)
        })
        .map(|v| v.txn)
        .collect();
    let required: BTreeSet<TxnId> = match mode {
        CheckMode::StrictSerializability => committed.clone(),
        CheckMode::Opacity => h.txns().iter().copied().collect(),
    };
    let given: BTreeSet<TxnId> = witness.order.iter().copied().collect();
    if given != required || given.len() != witness.order.len() {
        return Err(WitnessError::WrongTxnSet);
    }

    for (i, &a) in witness.order.iter().enumerate() {
        for &b in &witness.order[..i] {
            // b is placed before a; a must not really precede b.
            if h.real_time_precedes(a, b).expect("known txns") {
                return Err(WitnessError::RealTimeViolated {
                    earlier: a,
                    later: b,
                });
            }
        }
    }

    let mut state: BTreeMap<TObjectId, Value> = BTreeMap::new();
    for &t in &witness.order {
        let view = h.view(t).expect("known txn");
        let mut own: BTreeMap<TObjectId, Value> = BTreeMap::new();
        for op in &view.ops {
            match (&op.call, &op.outcome) {
                (TOpCall::Read { x }, Some(TOpOutcome::Value(got))) => {
                    let expected = own
                        .get(x)
                        .or_else(|| state.get(x))
                        .cloned()
                        .unwrap_or_else(|| h.initial_value(*x));
                    if got != &expected {
                        return Err(WitnessError::IllegalRead {
                            txn: t,
                            x: *x,
                            got: got.clone(),
                            expected,
                        });
                    }
                }
                (TOpCall::Write { x, v }, _) => {
                    own.insert(*x, v.clone());
                }
                _ => {}
            }
        }
        if committed.contains(&t) {
            for (x, v) in view.writes() {
                state.insert(x, v);
            }
        }
    }
    Ok(())
}

/// Second, deliberately independent strict-serializability decider used to
/// cross-check the main search on small histories. Different enumeration
/// everywhere: completions walk their bitmask from all-commit down,
/// permutations generate in descending transaction-id order, and legality
/// replays through [`validate_witness`]'s interpreter rather than the
/// pruned search. No code shared with [`check`] beyond the history type.
pub fn bruteforce_strict_serializability(h: &History) -> Option<SerializationWitness> {
    let commit_pending: Vec<TxnId> = h
        .views()
        .filter(|v| v.commit_pending())
        .map(|v| v.txn)
        .collect();

    let masks = (0..(1u64 << commit_pending.len())).rev();
    for mask in masks {
        let mut choices = BTreeMap::new();
        for (i, t) in commit_pending.iter().enumerate() {
            choices.insert(
                *t,
                if mask & (1 << i) != 0 {
                    CompletionChoice::Commit
                } else {
                    CompletionChoice::Abort
                },
            );
        }
        let mut txns: Vec<TxnId> = h
            .views()
            .filter(|v| v.committed() || choices.get(&v.txn) == Some(&CompletionChoice::Commit))
            .map(|v| v.txn)
            .collect();
        // Descending id order, so permutations come out in a different
        // sequence than the main search would try.
        txns.sort_by(|a, b| b.cmp(a));

        let mut perm = Vec::new();
        let mut used = vec![false; txns.len()];
        if let Some(order) = try_perms(h, &txns, &mut used, &mut perm, &choices) {
            return Some(SerializationWitness {
                order,
                completion_choices: choices,
            });
        }
    }
    None
}

fn try_perms(
    h: &History,
    txns: &[TxnId],
    used: &mut Vec<bool>,
    perm: &mut Vec<TxnId>,
    choices: &BTreeMap<TxnId, CompletionChoice>,
) -> Option<Vec<TxnId>> {
    if perm.len() == txns.len() {
        let candidate = SerializationWitness {
            order: perm.clone(),
            completion_choices: choices.clone(),
        };
        if validate_witness(h, &candidate, CheckMode::StrictSerializability).is_ok() {
            return Some(perm.clone());
        }
        return None;
    }
    for i in 0..txns.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        perm.push(txns[i]);
        if let Some(found) = try_perms(h, txns, used, perm, choices) {
            return Some(found);
        }
        perm.pop();
        used[i] = false;
    }
    None
}
