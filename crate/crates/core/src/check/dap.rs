//! Disjoint-access checker: transactions working on unrelated t-objects
//! should not fight over the same base object.
//!
//! Two transactions *concurrently contend* on a base object when each is
//! poised to access it at a common instant with at least one of the two
//! accesses nontrivial. Poised intervals are derived from the log: a
//! process is poised at its next logged event from the moment its previous
//! event lands (machine transitions are deterministic, so the pending
//! access is fixed across the whole window even if its eventual response is
//! not). Two events contend when their windows overlap.
//!
//! Contention is excusable when the two transactions are linked through
//! data: either their data sets intersect, or a chain of concurrent
//! transactions bridges them — in the graph whose vertices are the
//! t-objects touched by transactions concurrent with either party (both
//! parties included) and whose edges join objects co-accessed by one
//! transaction, some path connects a t-object of one to a t-object of the
//! other. Contention between unlinked transactions is a violation.

use crate::ids::{BaseObjectId, TObjectId, TxnId};
use crate::sim::event::{Event, Execution};
use crate::sim::primitive::is_nontrivial;
use crate::tm::history::{derive_history, History, HistoryError};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};

/// Two transactions poised to access one base object at a common instant.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct ContentionPair {
    pub a: TxnId,
    pub b: TxnId,
    pub object: BaseObjectId,
    /// Sequence numbers of the two contending events.
    pub a_seq: u64,
    pub b_seq: u64,
    /// Whether a data path between the two transactions excuses it.
    pub linked: bool,
}

#[derive(Clone, PartialEq, Eq, Debug, Default, Serialize)]
pub struct DapReport {
    /// Every concurrent contention found, one entry per transaction pair
    /// and base object (earliest event pair kept).
    pub contentions: Vec<ContentionPair>,
}

impl DapReport {
    pub fn violations(&self) -> impl Iterator<Item = &ContentionPair> {
        self.contentions.iter().filter(|c| !c.linked)
    }

    pub fn ok(&self) -> bool {
        self.violations().next().is_none()
    }
}

/// Check weak disjoint-access parallelism over an execution log.
pub fn check_weak_dap(execution: &Execution) -> Result<DapReport, HistoryError> {
    let h = derive_history(execution)?;

    // Poised window per transactional primitive event: (start, seq] where
    // start is the process's previous model event (None = from the start).
    struct Window {
        txn: TxnId,
        object: BaseObjectId,
        nontrivial: bool,
        start: Option<u64>,
        seq: u64,
    }
    let mut windows: Vec<Window> = Vec::new();
    let mut last_step: BTreeMap<crate::ids::ProcessId, u64> = BTreeMap::new();
    for ev in &execution.events {
        if !ev.is_model_event() {
            continue;
        }
        if let Event::Rmw(r) = ev {
            if let Some(txn) = r.txn {
                windows.push(Window {
                    txn,
                    object: r.object,
                    nontrivial: is_nontrivial(r.primitive),
                    start: last_step.get(&r.process).copied(),
                    seq: r.seq,
                });
            }
        }
        last_step.insert(ev.process(), ev.seq());
    }

    let opens_before = |start: Option<u64>, end: u64| start.map_or(true, |s| s < end);

    let mut seen: BTreeMap<(TxnId, TxnId, BaseObjectId), (u64, u64)> = BTreeMap::new();
    for (i, wa) in windows.iter().enumerate() {
        for wb in &windows[i + 1..] {
            if wa.txn == wb.txn || wa.object != wb.object || !(wa.nontrivial || wb.nontrivial) {
                continue;
            }
            if !(opens_before(wa.start, wb.seq) && opens_before(wb.start, wa.seq)) {
                continue;
            }
            let key = if wa.txn <= wb.txn {
                (wa.txn, wb.txn, wa.object)
            } else {
                (wb.txn, wa.txn, wa.object)
            };
            seen.entry(key)
                .or_insert((wa.seq.min(wb.seq), wa.seq.max(wb.seq)));
        }
    }

    let contentions = seen
        .into_iter()
        .map(|((a, b, object), (a_seq, b_seq))| ContentionPair {
            a,
            b,
            object,
            a_seq,
            b_seq,
            linked: data_linked(&h, a, b),
        })
        .collect();
    Ok(DapReport { contentions })
}

/// Is there a path between the data sets of `a` and `b` in the conflict
/// graph spanned by transactions concurrent with either?
fn data_linked(h: &History, a: TxnId, b: TxnId) -> bool {
    let mut cohort: BTreeSet<TxnId> = BTreeSet::from([a, b]);
    for &t in h.txns() {
        if t != a
            && t != b
            && (h.concurrent(t, a).expect("known txns") || h.concurrent(t, b).expect("known txns"))
        {
            cohort.insert(t);
        }
    }

    // Union-find over t-objects; each cohort member's data set is a clique.
    let mut parent: BTreeMap<TObjectId, TObjectId> = BTreeMap::new();
    fn find(parent: &mut BTreeMap<TObjectId, TObjectId>, x: TObjectId) -> TObjectId {
        let p = *parent.entry(x).or_insert(x);
        if p == x {
            return x;
        }
        let root = find(parent, p);
        parent.insert(x, root);
        root
    }
    for &t in &cohort {
        let dset = h.view(t).expect("known txn").dset();
        let mut iter = dset.into_iter();
        if let Some(first) = iter.next() {
            let r0 = find(&mut parent, first);
            for x in iter {
                let r = find(&mut parent, x);
                parent.insert(r, r0);
            }
        }
    }

    let da = h.view(a).expect("known txn").dset();
    let db = h.view(b).expect("known txn").dset();
    let roots: BTreeSet<TObjectId> = da.into_iter().map(|x| find(&mut parent, x)).collect();
    db.into_iter()
        .any(|x| roots.contains(&find(&mut parent, x)))
}
