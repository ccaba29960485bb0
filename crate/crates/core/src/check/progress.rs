//! Progress checkers: was every abort excusable?
//!
//! The **progressiveness** check permits an abort only when some other
//! transaction ran concurrently with the victim and conflicted with it on
//! at least one t-object. An abort with no such peer is a violation.
//!
//! The **strong progressiveness** check additionally demands a winner in
//! every conflict group that fought over at most a single t-object: take
//! the graph whose edges join concurrent conflicting transactions; in each
//! connected component whose members' pairwise conflicts cover at most one
//! t-object, at least one member must escape unaborted.
//!
//! Conflict-closed transaction sets are exactly the unions of these
//! components, and a union violates only if one of its components already
//! does (its members stay all-aborted and its conflict objects only grow).
//! Enumerating components therefore finds a violation exactly when one
//! exists, and the reported violations are the minimal violating sets.

use super::BoundExceeded;
use crate::ids::{TObjectId, TxnId};
use crate::tm::history::History;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};

/// Default ceiling on transactions per history for the strong check.
pub const DEFAULT_STRONG_BOUND: usize = 12;

/// A concurrent conflicting peer that justifies an abort.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct ConflictWitness {
    pub peer: TxnId,
    pub objects: BTreeSet<TObjectId>,
}

/// An aborted transaction no concurrent transaction conflicted with.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct ProgressViolation {
    pub txn: TxnId,
}

#[derive(Clone, PartialEq, Eq, Debug, Default, Serialize)]
pub struct ProgressReport {
    pub violations: Vec<ProgressViolation>,
    /// For every excusable abort, one peer that excuses it.
    pub witnesses: BTreeMap<TxnId, ConflictWitness>,
}

impl ProgressReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check that every aborted transaction has a concurrent conflicting peer.
pub fn check_progressiveness(h: &History) -> ProgressReport {
    let mut report = ProgressReport::default();
    for v in h.views() {
        if !v.aborted() {
            continue;
        }
        let witness = h.txns().iter().copied().find_map(|other| {
            if other == v.txn {
                return None;
            }
            if !h.conflicting(v.txn, other).expect("known txns") {
                return None;
            }
            let objects = h.conflicts(v.txn, other).expect("known txns");
            Some(ConflictWitness {
                peer: other,
                objects,
            })
        });
        match witness {
            Some(w) => {
                report.witnesses.insert(v.txn, w);
            }
            None => report.violations.push(ProgressViolation { txn: v.txn }),
        }
    }
    report
}

/// A conflict group every member of which aborted even though the group
/// fought over at most one t-object.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct StrongProgressViolation {
    pub group: Vec<TxnId>,
    pub conflict_objects: BTreeSet<TObjectId>,
}

/// One connected component of the concurrent-conflict graph.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct ConflictComponent {
    pub members: Vec<TxnId>,
    /// Union of conflict objects over concurrent conflicting member pairs.
    pub conflict_objects: BTreeSet<TObjectId>,
    pub all_aborted: bool,
}

#[derive(Clone, PartialEq, Eq, Debug, Default, Serialize)]
pub struct StrongProgressReport {
    pub components: Vec<ConflictComponent>,
    pub violations: Vec<StrongProgressViolation>,
}

impl StrongProgressReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check strong progressiveness. Histories with more transactions than
/// `bound` are refused rather than answered.
pub fn check_strong_progressiveness(
    h: &History,
    bound: usize,
) -> Result<StrongProgressReport, BoundExceeded> {
    let txns = h.txns();
    if txns.len() > bound {
        return Err(BoundExceeded {
            txns: txns.len(),
            bound,
        });
    }

    // Union-find over transactions joined by concurrent conflicts.
    let index: BTreeMap<TxnId, usize> = txns.iter().enumerate().map(|(i, t)| (*t, i)).collect();
    let mut parent: Vec<usize> = (0..txns.len()).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let root = find(parent, parent[i]);
            parent[i] = root;
        }
        parent[i]
    }
    for (i, &a) in txns.iter().enumerate() {
        for &b in &txns[i + 1..] {
            if h.conflicting(a, b).expect("known txns") {
                let (ra, rb) = (find(&mut parent, index[&a]), find(&mut parent, index[&b]));
                if ra != rb {
                    parent[ra] = rb;
                }
            }
        }
    }

    let mut groups: BTreeMap<usize, Vec<TxnId>> = BTreeMap::new();
    for (i, &t) in txns.iter().enumerate() {
        groups.entry(find(&mut parent, i)).or_default().push(t);
    }

    let mut report = StrongProgressReport::default();
    for members in groups.into_values() {
        let mut conflict_objects = BTreeSet::new();
        for (i, &a) in members.iter().enumerate() {
            for &b in &members[i + 1..] {
                if h.conflicting(a, b).expect("known txns") {
                    conflict_objects.extend(h.conflicts(a, b).expect("known txns"));
                }
            }
        }
        let all_aborted = members
            .iter()
            .all(|t| h.view(*t).expect("known txn").aborted());
        if all_aborted && conflict_objects.len() <= 1 {
            report.violations.push(StrongProgressViolation {
                group: members.clone(),
                conflict_objects: conflict_objects.clone(),
            });
        }
        report.components.push(ConflictComponent {
            members,
            conflict_objects,
            all_aborted,
        });
    }
    Ok(report)
}
