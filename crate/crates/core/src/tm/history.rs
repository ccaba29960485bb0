//! Histories: the transactional face of an execution.
//!
//! A history is the subsequence of operation invocations and responses,
//! together with one derived [`TxnView`] per transaction (its operations,
//! read/write sets, and status). Deriving a history also checks transactional
//! well-formedness: operations within a transaction are sequential, outcomes
//! match their calls, nothing happens after commit or abort, and each
//! transaction runs on one process.
//!
//! Histories can be exported to and imported from a JSON array of operation
//! records, so externally produced traces can be checked too.

use crate::ids::{ProcessId, TObjectId, TxnId};
use crate::sim::event::{Event, Execution};
use crate::tm::ops::{TOpCall, TOpKind, TOpOutcome};
use crate::value::Value;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// One operation of one transaction: the invocation, and the response if one
/// was recorded. Sequence numbers index into the originating execution.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct TOp {
    pub txn: TxnId,
    pub top: u32,
    pub call: TOpCall,
    pub inv_seq: u64,
    pub resp_seq: Option<u64>,
    pub outcome: Option<TOpOutcome>,
}

impl TOp {
    pub fn is_pending(&self) -> bool {
        self.outcome.is_none()
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TxnStatus {
    Committed,
    Aborted,
    /// Neither committed nor aborted (live, or waiting on an outcome).
    TIncomplete,
}

impl fmt::Display for TxnStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TxnStatus::Committed => write!(f, "committed"),
            TxnStatus::Aborted => write!(f, "aborted"),
            TxnStatus::TIncomplete => write!(f, "t-incomplete"),
        }
    }
}

/// Everything derivable about one transaction from a history.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct TxnView {
    pub txn: TxnId,
    /// Known when the history came from an execution; absent on import.
    pub process: Option<ProcessId>,
    pub ops: Vec<TOp>,
    pub status: TxnStatus,
    pub first_seq: u64,
    pub last_seq: u64,
}

impl TxnView {
    /// T-objects on which a read was invoked (response not required).
    pub fn rset(&self) -> BTreeSet<TObjectId> {
        self.ops
            .iter()
            .filter(|op| op.call.kind() == TOpKind::Read)
            .filter_map(|op| op.call.object())
            .collect()
    }

    /// T-objects on which a write was invoked (response not required).
    pub fn wset(&self) -> BTreeSet<TObjectId> {
        self.ops
            .iter()
            .filter(|op| op.call.kind() == TOpKind::Write)
            .filter_map(|op| op.call.object())
            .collect()
    }

    /// Data set: everything read or written.
    pub fn dset(&self) -> BTreeSet<TObjectId> {
        let mut d = self.rset();
        d.extend(self.wset());
        d
    }

    pub fn read_only(&self) -> bool {
        self.wset().is_empty()
    }

    pub fn is_updating(&self) -> bool {
        !self.read_only()
    }

    /// Last value returned by a completed read, per t-object.
    pub fn reads_returned(&self) -> BTreeMap<TObjectId, Value> {
        let mut m = BTreeMap::new();
        for op in &self.ops {
            if let (TOpCall::Read { x }, Some(TOpOutcome::Value(v))) = (&op.call, &op.outcome) {
                m.insert(*x, v.clone());
            }
        }
        m
    }

    /// Last value written per t-object (the transaction's buffered updates).
    pub fn writes(&self) -> BTreeMap<TObjectId, Value> {
        let mut m = BTreeMap::new();
        for op in &self.ops {
            if let TOpCall::Write { x, v } = &op.call {
                m.insert(*x, v.clone());
            }
        }
        m
    }

    pub fn committed(&self) -> bool {
        self.status == TxnStatus::Committed
    }

    pub fn aborted(&self) -> bool {
        self.status == TxnStatus::Aborted
    }

    /// Ended with commit or abort.
    pub fn t_complete(&self) -> bool {
        self.status != TxnStatus::TIncomplete
    }

    /// No operation is waiting for its response.
    pub fn complete(&self) -> bool {
        self.pending_op().is_none()
    }

    pub fn pending_op(&self) -> Option<&TOp> {
        self.ops.iter().find(|op| op.is_pending())
    }

    /// Commit requested but unanswered: may still end either way.
    pub fn commit_pending(&self) -> bool {
        matches!(
            self.pending_op(),
            Some(TOp {
                call: TOpCall::TryCommit,
                ..
            })
        )
    }
}

/// One invocation or response, as it sits in the history's event order.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct HEvent {
    pub seq: u64,
    pub txn: TxnId,
    pub process: Option<ProcessId>,
    pub kind: HEventKind,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum HEventKind {
    Inv { top: u32, call: TOpCall },
    Resp { top: u32, outcome: TOpOutcome },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HistoryError {
    #[error("transaction {txn}: operation invoked at seq {seq} while another is pending")]
    OverlappingOps { txn: TxnId, seq: u64 },
    #[error("transaction {txn}: response at seq {seq} without a pending invocation")]
    RespWithoutInv { txn: TxnId, seq: u64 },
    #[error("transaction {txn}: response at seq {seq} does not answer the pending call")]
    RespMismatch { txn: TxnId, seq: u64 },
    #[error("transaction {txn}: event at seq {seq} after the transaction ended")]
    EventAfterEnd { txn: TxnId, seq: u64 },
    #[error("transaction {txn}: memory step at seq {seq} outside any operation")]
    StepOutsideOp { txn: TxnId, seq: u64 },
    #[error("transaction {txn} has events on more than one process")]
    MultipleProcesses { txn: TxnId },
    #[error("process {process}: transaction {txn} starts before {prev} is t-complete")]
    InterleavedOnProcess {
        process: ProcessId,
        txn: TxnId,
        prev: TxnId,
    },
    #[error("duplicate event sequence number {seq}")]
    DuplicateSeq { seq: u64 },
    #[error("unknown transaction {txn}")]
    UnknownTxn { txn: TxnId },
}

/// The transactional subsequence of an execution: ordered operation events
/// plus per-transaction views. Construction enforces well-formedness.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct History {
    initial: BTreeMap<TObjectId, Value>,
    events: Vec<HEvent>,
    views: BTreeMap<TxnId, TxnView>,
    /// Transactions ordered by their first event.
    order: Vec<TxnId>,
}

impl History {
    /// Build a history from already-extracted operation events (sorted or
    /// not), checking transactional well-formedness.
    pub fn from_events(
        initial: BTreeMap<TObjectId, Value>,
        mut events: Vec<HEvent>,
    ) -> Result<History, HistoryError> {
        events.sort_by_key(|e| e.seq);
        for w in events.windows(2) {
            if w[0].seq == w[1].seq {
                return Err(HistoryError::DuplicateSeq { seq: w[0].seq });
            }
        }

        let mut views: BTreeMap<TxnId, TxnView> = BTreeMap::new();
        let mut order = Vec::new();
        // Last transaction seen per process, for the sequential-transactions
        // rule (only checkable when processes are known).
        let mut last_on_process: BTreeMap<ProcessId, TxnId> = BTreeMap::new();

        for ev in &events {
            if !views.contains_key(&ev.txn) {
                // A process may start a new transaction only when its
                // previous one has ended.
                if let Some(p) = ev.process {
                    if let Some(prev) = last_on_process.get(&p) {
                        if !views[prev].t_complete() {
                            return Err(HistoryError::InterleavedOnProcess {
                                process: p,
                                txn: ev.txn,
                                prev: *prev,
                            });
                        }
                    }
                    last_on_process.insert(p, ev.txn);
                }
                order.push(ev.txn);
                views.insert(
                    ev.txn,
                    TxnView {
                        txn: ev.txn,
                        process: ev.process,
                        ops: Vec::new(),
                        status: TxnStatus::TIncomplete,
                        first_seq: ev.seq,
                        last_seq: ev.seq,
                    },
                );
            }
            let view = views.get_mut(&ev.txn).expect("just ensured");
            if view.process != ev.process {
                return Err(HistoryError::MultipleProcesses { txn: ev.txn });
            }
            if view.t_complete() {
                return Err(HistoryError::EventAfterEnd {
                    txn: ev.txn,
                    seq: ev.seq,
                });
            }
            view.last_seq = ev.seq;
            match &ev.kind {
                HEventKind::Inv { top, call } => {
                    if view.ops.last().is_some_and(|op| op.is_pending()) {
                        return Err(HistoryError::OverlappingOps {
                            txn: ev.txn,
                            seq: ev.seq,
                        });
                    }
                    view.ops.push(TOp {
                        txn: ev.txn,
                        top: *top,
                        call: call.clone(),
                        inv_seq: ev.seq,
                        resp_seq: None,
                        outcome: None,
                    });
                }
                HEventKind::Resp { top, outcome } => {
                    let Some(op) = view.ops.last_mut() else {
                        return Err(HistoryError::RespWithoutInv {
                            txn: ev.txn,
                            seq: ev.seq,
                        });
                    };
                    if !op.is_pending() || op.top != *top || !outcome.matches_call(&op.call) {
                        return Err(HistoryError::RespMismatch {
                            txn: ev.txn,
                            seq: ev.seq,
                        });
                    }
                    op.resp_seq = Some(ev.seq);
                    op.outcome = Some(outcome.clone());
                    view.status = match outcome {
                        TOpOutcome::Committed => TxnStatus::Committed,
                        TOpOutcome::Aborted => TxnStatus::Aborted,
                        _ => TxnStatus::TIncomplete,
                    };
                }
            }
        }

        Ok(History {
            initial,
            events,
            views,
            order,
        })
    }

    pub fn initial_value(&self, x: TObjectId) -> Value {
        self.initial.get(&x).cloned().unwrap_or(Value::Int(0))
    }

    pub fn initial(&self) -> &BTreeMap<TObjectId, Value> {
        &self.initial
    }

    pub fn events(&self) -> &[HEvent] {
        &self.events
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Transactions in order of first appearance.
    pub fn txns(&self) -> &[TxnId] {
        &self.order
    }

    pub fn view(&self, txn: TxnId) -> Result<&TxnView, HistoryError> {
        self.views.get(&txn).ok_or(HistoryError::UnknownTxn { txn })
    }

    pub fn views(&self) -> impl Iterator<Item = &TxnView> {
        self.order.iter().map(|t| &self.views[t])
    }

    /// All t-objects any transaction touched, plus those with initial values.
    pub fn tobjects(&self) -> BTreeSet<TObjectId> {
        let mut s: BTreeSet<TObjectId> = self.initial.keys().copied().collect();
        for v in self.views.values() {
            s.extend(v.dset());
        }
        s
    }

    /// `a` is t-complete and its last event precedes `b`'s first.
    pub fn real_time_precedes(&self, a: TxnId, b: TxnId) -> Result<bool, HistoryError> {
        let va = self.view(a)?;
        let vb = self.view(b)?;
        Ok(va.t_complete() && va.last_seq < vb.first_seq)
    }

    pub fn concurrent(&self, a: TxnId, b: TxnId) -> Result<bool, HistoryError> {
        Ok(!self.real_time_precedes(a, b)? && !self.real_time_precedes(b, a)?)
    }

    /// T-objects both transactions access where at least one writes.
    pub fn conflicts(&self, a: TxnId, b: TxnId) -> Result<BTreeSet<TObjectId>, HistoryError> {
        let va = self.view(a)?;
        let vb = self.view(b)?;
        let writes: BTreeSet<_> = va.wset().union(&vb.wset()).copied().collect();
        Ok(va
            .dset()
            .intersection(&vb.dset())
            .filter(|x| writes.contains(x))
            .copied()
            .collect())
    }

    /// Concurrent with a nonempty conflict set: the relation progress
    /// conditions are stated over.
    pub fn conflicting(&self, a: TxnId, b: TxnId) -> Result<bool, HistoryError> {
        Ok(a != b && self.concurrent(a, b)? && !self.conflicts(a, b)?.is_empty())
    }

    /// No two transactions are concurrent.
    pub fn t_sequential(&self) -> bool {
        for (i, a) in self.order.iter().enumerate() {
            for b in &self.order[i + 1..] {
                if self.concurrent(*a, *b).expect("known txns") {
                    return false;
                }
            }
        }
        true
    }

    /// Export as a JSON array of one record per operation.
    pub fn export_json(&self) -> serde_json::Value {
        let mut rows: Vec<HistoryRow> = Vec::new();
        for view in self.views() {
            for op in &view.ops {
                rows.push(HistoryRow {
                    txn: op.txn,
                    kind: op.call.kind(),
                    object: op.call.object(),
                    arg: match &op.call {
                        TOpCall::Write { v, .. } => Some(v.clone()),
                        _ => None,
                    },
                    outcome: op.outcome.clone(),
                    inv_seq: op.inv_seq,
                    resp_seq: op.resp_seq,
                });
            }
        }
        rows.sort_by_key(|r| r.inv_seq);
        serde_json::to_value(rows).expect("history rows serialize")
    }

    /// Import a JSON array of operation records. Initial t-object values are
    /// not part of the record format; absent entries read as integer 0.
    pub fn import_json(
        json: &serde_json::Value,
        initial: BTreeMap<TObjectId, Value>,
    ) -> Result<History, HistoryImportError> {
        let rows: Vec<HistoryRow> = serde_json::from_value(json.clone())
            .map_err(|e| HistoryImportError::Parse(e.to_string()))?;
        let mut events = Vec::new();
        let mut next_top: BTreeMap<TxnId, u32> = BTreeMap::new();
        for row in rows {
            let call = match (row.kind, row.object, row.arg) {
                (TOpKind::Read, Some(x), None) => TOpCall::Read { x },
                (TOpKind::Write, Some(x), Some(v)) => TOpCall::Write { x, v },
                (TOpKind::TryCommit, None, None) => TOpCall::TryCommit,
                _ => {
                    return Err(HistoryImportError::BadRow {
                        txn: row.txn,
                        inv_seq: row.inv_seq,
                    })
                }
            };
            if row.outcome.is_some() != row.resp_seq.is_some() {
                return Err(HistoryImportError::BadRow {
                    txn: row.txn,
                    inv_seq: row.inv_seq,
                });
            }
            let top = next_top.entry(row.txn).or_insert(0);
            let this_top = *top;
            *top += 1;
            events.push(HEvent {
                seq: row.inv_seq,
                txn: row.txn,
                process: None,
                kind: HEventKind::Inv {
                    top: this_top,
                    call,
                },
            });
            if let (Some(resp_seq), Some(outcome)) = (row.resp_seq, row.outcome) {
                events.push(HEvent {
                    seq: resp_seq,
                    txn: row.txn,
                    process: None,
                    kind: HEventKind::Resp {
                        top: this_top,
                        outcome,
                    },
                });
            }
        }
        History::from_events(initial, events).map_err(HistoryImportError::Malformed)
    }
}

#[derive(Serialize, Deserialize)]
struct HistoryRow {
    txn: TxnId,
    kind: TOpKind,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    object: Option<TObjectId>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    arg: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    outcome: Option<TOpOutcome>,
    #[serde(rename = "invSeq")]
    inv_seq: u64,
    #[serde(rename = "respSeq", skip_serializing_if = "Option::is_none", default)]
    resp_seq: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HistoryImportError {
    #[error("history JSON does not parse: {0}")]
    Parse(String),
    #[error("bad history record for transaction {txn} at invSeq {inv_seq}")]
    BadRow { txn: TxnId, inv_seq: u64 },
    #[error("imported history is malformed: {0}")]
    Malformed(#[from] HistoryError),
}

/// Project an execution to its history, checking both operation-level
/// well-formedness and that every transaction-tagged memory step falls
/// inside one of that transaction's operations.
pub fn derive_history(execution: &Execution) -> Result<History, HistoryError> {
    let mut events = Vec::new();
    // (txn, top) currently open, per transaction, to place memory steps.
    let mut open: BTreeMap<TxnId, Option<u32>> = BTreeMap::new();
    let mut terminal: BTreeSet<TxnId> = BTreeSet::new();

    for ev in &execution.events {
        match ev {
            Event::Inv {
                seq,
                process,
                txn,
                top,
                call,
            } => {
                events.push(HEvent {
                    seq: *seq,
                    txn: *txn,
                    process: Some(*process),
                    kind: HEventKind::Inv {
                        top: *top,
                        call: call.clone(),
                    },
                });
                open.insert(*txn, Some(*top));
            }
            Event::Resp {
                seq,
                process,
                txn,
                top,
                outcome,
            } => {
                events.push(HEvent {
                    seq: *seq,
                    txn: *txn,
                    process: Some(*process),
                    kind: HEventKind::Resp {
                        top: *top,
                        outcome: outcome.clone(),
                    },
                });
                open.insert(*txn, None);
                if outcome.is_terminal() {
                    terminal.insert(*txn);
                }
            }
            Event::Rmw(rmw) => {
                if let Some(txn) = rmw.txn {
                    if terminal.contains(&txn) {
                        return Err(HistoryError::EventAfterEnd { txn, seq: rmw.seq });
                    }
                    if open.get(&txn).copied().flatten() != rmw.top {
                        return Err(HistoryError::StepOutsideOp { txn, seq: rmw.seq });
                    }
                }
            }
            Event::Marker { .. } | Event::Noop { .. } => {}
        }
    }

    History::from_events(execution.meta.tobject_initial.clone(), events)
}

/// Which events must sit contiguously for a step-contention check.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ScfScope {
    /// Every transaction's events are contiguous.
    Whole,
    /// One transaction's events are contiguous.
    Txn(TxnId),
    /// One operation's events (invocation through response) are contiguous.
    Top(TxnId, u32),
}

/// True when the scoped events run without interleaved steps from the rest
/// of the execution. Judged over memory steps and operation invocations/
/// responses; markers and scheduler no-ops don't break contiguity.
pub fn step_contention_free(execution: &Execution, scope: &ScfScope) -> bool {
    // (txn, top) labels per relevant event, in execution order.
    let labels: Vec<(Option<TxnId>, Option<u32>)> = execution
        .events
        .iter()
        .filter_map(|ev| match ev {
            Event::Rmw(r) => Some((r.txn, r.top)),
            Event::Inv { txn, top, .. } => Some((Some(*txn), Some(*top))),
            Event::Resp { txn, top, .. } => Some((Some(*txn), Some(*top))),
            Event::Marker { .. } | Event::Noop { .. } => None,
        })
        .collect();

    let contiguous = |pred: &dyn Fn(&(Option<TxnId>, Option<u32>)) -> bool| {
        let first = labels.iter().position(|l| pred(l));
        let last = labels.iter().rposition(|l| pred(l));
        match (first, last) {
            (Some(a), Some(b)) => labels[a..=b].iter().all(|l| pred(l)),
            _ => true,
        }
    };

    match scope {
        ScfScope::Whole => {
            let txns: BTreeSet<TxnId> = labels.iter().filter_map(|(t, _)| *t).collect();
            txns.iter()
                .all(|k| contiguous(&|l: &(Option<TxnId>, Option<u32>)| l.0 == Some(*k)))
        }
        ScfScope::Txn(k) => contiguous(&|l| l.0 == Some(*k)),
        ScfScope::Top(k, i) => contiguous(&|l| l.0 == Some(*k) && l.1 == Some(*i)),
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum QuiescenceKind {
    /// Every transaction has no operation awaiting its response.
    Quiescent,
    /// Every transaction has committed or aborted.
    TQuiescent,
}

pub fn quiescence(execution: &Execution, kind: QuiescenceKind) -> Result<bool, HistoryError> {
    let h = derive_history(execution)?;
    Ok(match kind {
        QuiescenceKind::Quiescent => h.views().all(|v| v.complete()),
        QuiescenceKind::TQuiescent => h.views().all(|v| v.t_complete()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::{BaseObjectId, ProcessId};
    use crate::sim::event::ExecutionMeta;
    use crate::sim::primitive::PrimKind;
    use crate::sim::rmr::RmrCost;

    fn x(i: u32) -> TObjectId {
        TObjectId(i)
    }

    fn t(i: u64) -> TxnId {
        TxnId(i)
    }

    fn p(i: u32) -> ProcessId {
        ProcessId(i)
    }

    fn inv(seq: u64, txn: TxnId, top: u32, call: TOpCall) -> HEvent {
        HEvent {
            seq,
            txn,
            process: Some(p(txn.0 as u32)),
            kind: HEventKind::Inv { top, call },
        }
    }

    fn resp(seq: u64, txn: TxnId, top: u32, outcome: TOpOutcome) -> HEvent {
        HEvent {
            seq,
            txn,
            process: Some(p(txn.0 as u32)),
            kind: HEventKind::Resp { top, outcome },
        }
    }

    fn committed_writer() -> Vec<HEvent> {
        vec![
            inv(0, t(1), 0, TOpCall::write(x(0), 1)),
            resp(1, t(1), 0, TOpOutcome::Ok),
            inv(2, t(1), 1, TOpCall::TryCommit),
            resp(3, t(1), 1, TOpOutcome::Committed),
        ]
    }

    #[test]
    fn empty_history_is_fine() {
        let h = History::from_events(BTreeMap::new(), Vec::new()).unwrap();
        assert!(h.is_empty());
        assert!(h.txns().is_empty());
        assert!(h.t_sequential());
    }

    #[test]
    fn single_writer_views() {
        let h = History::from_events(BTreeMap::new(), committed_writer()).unwrap();
        assert_eq!(h.events().len(), 4);
        let v = h.view(t(1)).unwrap();
        assert_eq!(v.status, TxnStatus::Committed);
        assert_eq!(v.wset().into_iter().collect::<Vec<_>>(), vec![x(0)]);
        assert!(v.rset().is_empty());
        assert!(v.is_updating());
        assert_eq!(v.writes()[&x(0)], Value::Int(1));
    }

    #[test]
    fn event_after_commit_rejected() {
        let mut evs = committed_writer();
        evs.push(inv(4, t(1), 2, TOpCall::read(x(0))));
        let err = History::from_events(BTreeMap::new(), evs).unwrap_err();
        assert!(matches!(err, HistoryError::EventAfterEnd { .. }));
    }

    #[test]
    fn overlapping_ops_rejected() {
        let evs = vec![
            inv(0, t(1), 0, TOpCall::read(x(0))),
            inv(1, t(1), 1, TOpCall::read(x(1))),
        ];
        let err = History::from_events(BTreeMap::new(), evs).unwrap_err();
        assert!(matches!(err, HistoryError::OverlappingOps { .. }));
    }

    #[test]
    fn outcome_domain_enforced() {
        let evs = vec![
            inv(0, t(1), 0, TOpCall::read(x(0))),
            resp(1, t(1), 0, TOpOutcome::Ok),
        ];
        let err = History::from_events(BTreeMap::new(), evs).unwrap_err();
        assert!(matches!(err, HistoryError::RespMismatch { .. }));
        let evs = vec![
            inv(0, t(1), 0, TOpCall::TryCommit),
            resp(1, t(1), 0, TOpOutcome::Value(Value::Int(3))),
        ];
        let err = History::from_events(BTreeMap::new(), evs).unwrap_err();
        assert!(matches!(err, HistoryError::RespMismatch { .. }));
    }

    #[test]
    fn real_time_order_and_concurrency() {
        // T1 entirely before T2; T3 overlaps T2.
        let evs = vec![
            inv(0, t(1), 0, TOpCall::write(x(0), 1)),
            resp(1, t(1), 0, TOpOutcome::Ok),
            inv(2, t(1), 1, TOpCall::TryCommit),
            resp(3, t(1), 1, TOpOutcome::Committed),
            inv(4, t(2), 0, TOpCall::read(x(0))),
            inv(5, t(3), 0, TOpCall::read(x(0))),
            resp(6, t(2), 0, TOpOutcome::Value(Value::Int(1))),
            resp(7, t(3), 0, TOpOutcome::Value(Value::Int(1))),
        ];
        let h = History::from_events(BTreeMap::new(), evs).unwrap();
        assert!(h.real_time_precedes(t(1), t(2)).unwrap());
        assert!(!h.real_time_precedes(t(2), t(1)).unwrap());
        assert!(h.concurrent(t(2), t(3)).unwrap());
        assert!(!h.concurrent(t(1), t(2)).unwrap());
        assert!(matches!(
            h.real_time_precedes(t(9), t(1)),
            Err(HistoryError::UnknownTxn { .. })
        ));
    }

    #[test]
    fn incomplete_txn_never_precedes() {
        // T1 never finishes; T2 runs after T1's last event.
        let evs = vec![
            inv(0, t(1), 0, TOpCall::read(x(0))),
            resp(1, t(1), 0, TOpOutcome::Value(Value::Int(0))),
            inv(2, t(2), 0, TOpCall::read(x(0))),
            resp(3, t(2), 0, TOpOutcome::Value(Value::Int(0))),
        ];
        let h = History::from_events(BTreeMap::new(), evs).unwrap();
        assert!(!h.real_time_precedes(t(1), t(2)).unwrap());
        assert!(h.concurrent(t(1), t(2)).unwrap());
    }

    #[test]
    fn conflict_sets() {
        // T1 reads X0; T2 writes X0; T3 reads X0.
        let evs = vec![
            inv(0, t(1), 0, TOpCall::read(x(0))),
            inv(1, t(2), 0, TOpCall::write(x(0), 5)),
            inv(2, t(3), 0, TOpCall::read(x(0))),
            resp(3, t(1), 0, TOpOutcome::Value(Value::Int(0))),
            resp(4, t(2), 0, TOpOutcome::Ok),
            resp(5, t(3), 0, TOpOutcome::Value(Value::Int(0))),
        ];
        let h = History::from_events(BTreeMap::new(), evs).unwrap();
        assert_eq!(h.conflicts(t(1), t(2)).unwrap().len(), 1);
        assert_eq!(h.conflicts(t(2), t(1)).unwrap().len(), 1);
        assert!(h.conflicts(t(1), t(3)).unwrap().is_empty());
        assert!(h.conflicting(t(1), t(2)).unwrap());
        assert!(!h.conflicting(t(1), t(3)).unwrap());
    }

    #[test]
    fn commit_pending_detected() {
        let evs = vec![
            inv(0, t(1), 0, TOpCall::write(x(0), 1)),
            resp(1, t(1), 0, TOpOutcome::Ok),
            inv(2, t(1), 1, TOpCall::TryCommit),
        ];
        let h = History::from_events(BTreeMap::new(), evs).unwrap();
        let v = h.view(t(1)).unwrap();
        assert!(v.commit_pending());
        assert!(!v.complete());
        assert!(!v.t_complete());
    }

    #[test]
    fn sequential_transactions_per_process_enforced() {
        // Same process starts T2 while T1 is still live.
        let evs = vec![
            HEvent {
                seq: 0,
                txn: t(1),
                process: Some(p(1)),
                kind: HEventKind::Inv {
                    top: 0,
                    call: TOpCall::read(x(0)),
                },
            },
            HEvent {
                seq: 1,
                txn: t(1),
                process: Some(p(1)),
                kind: HEventKind::Resp {
                    top: 0,
                    outcome: TOpOutcome::Value(Value::Int(0)),
                },
            },
            HEvent {
                seq: 2,
                txn: t(2),
                process: Some(p(1)),
                kind: HEventKind::Inv {
                    top: 0,
                    call: TOpCall::read(x(0)),
                },
            },
        ];
        let err = History::from_events(BTreeMap::new(), evs).unwrap_err();
        assert!(matches!(err, HistoryError::InterleavedOnProcess { .. }));
    }

    #[test]
    fn json_round_trip() {
        let evs = vec![
            inv(0, t(1), 0, TOpCall::write(x(0), 1)),
            resp(1, t(1), 0, TOpOutcome::Ok),
            inv(2, t(1), 1, TOpCall::TryCommit),
            resp(3, t(1), 1, TOpOutcome::Committed),
            inv(4, t(2), 0, TOpCall::read(x(0))),
        ];
        let h = History::from_events(BTreeMap::new(), evs).unwrap();
        let json = h.export_json();
        let rows = json.as_array().unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0]["invSeq"], 0);
        assert_eq!(rows[0]["kind"], "write");
        let h2 = History::import_json(&json, BTreeMap::new()).unwrap();
        assert_eq!(h2.view(t(1)).unwrap().status, TxnStatus::Committed);
        assert_eq!(h2.view(t(2)).unwrap().status, TxnStatus::TIncomplete);
        assert_eq!(h2.events().len(), h.events().len());
        // Absent initial values read as integer zero.
        assert_eq!(h2.initial_value(x(0)), Value::Int(0));
    }

    fn rmw(seq: u64, process: ProcessId, txn: Option<TxnId>, top: Option<u32>) -> Event {
        Event::Rmw(crate::sim::event::RmwEvent {
            seq,
            process,
            txn,
            top,
            object: BaseObjectId(0),
            primitive: PrimKind::Read,
            operands: vec![],
            response: Value::Int(0),
            rmr: RmrCost::default(),
        })
    }

    fn exec(events: Vec<Event>) -> Execution {
        Execution {
            meta: ExecutionMeta::default(),
            events,
        }
    }

    #[test]
    fn derive_rejects_step_outside_op() {
        let events = vec![
            Event::Inv {
                seq: 0,
                process: p(1),
                txn: t(1),
                top: 0,
                call: TOpCall::read(x(0)),
            },
            rmw(1, p(1), Some(t(1)), Some(0)),
            Event::Resp {
                seq: 2,
                process: p(1),
                txn: t(1),
                top: 0,
                outcome: TOpOutcome::Value(Value::Int(0)),
            },
            // Tagged step between operations: malformed.
            rmw(3, p(1), Some(t(1)), Some(0)),
        ];
        let err = derive_history(&exec(events)).unwrap_err();
        assert!(matches!(err, HistoryError::StepOutsideOp { .. }));
    }

    #[test]
    fn step_contention_scopes() {
        // p1 runs T1's read interleaved with p2's T2 read; T2's own read is
        // contiguous.
        let events = vec![
            Event::Inv {
                seq: 0,
                process: p(1),
                txn: t(1),
                top: 0,
                call: TOpCall::read(x(0)),
            },
            rmw(1, p(1), Some(t(1)), Some(0)),
            Event::Inv {
                seq: 2,
                process: p(2),
                txn: t(2),
                top: 0,
                call: TOpCall::read(x(0)),
            },
            rmw(3, p(2), Some(t(2)), Some(0)),
            Event::Resp {
                seq: 4,
                process: p(2),
                txn: t(2),
                top: 0,
                outcome: TOpOutcome::Value(Value::Int(0)),
            },
            rmw(5, p(1), Some(t(1)), Some(0)),
            Event::Resp {
                seq: 6,
                process: p(1),
                txn: t(1),
                top: 0,
                outcome: TOpOutcome::Value(Value::Int(0)),
            },
        ];
        let e = exec(events);
        assert!(!step_contention_free(&e, &ScfScope::Whole));
        assert!(!step_contention_free(&e, &ScfScope::Txn(t(1))));
        assert!(step_contention_free(&e, &ScfScope::Txn(t(2))));
        assert!(step_contention_free(&e, &ScfScope::Top(t(2), 0)));
        assert!(!step_contention_free(&e, &ScfScope::Top(t(1), 0)));
    }

    #[test]
    fn quiescence_kinds() {
        // T1 committed; T2 finished a read but never tried to commit.
        let events = vec![
            Event::Inv {
                seq: 0,
                process: p(1),
                txn: t(1),
                top: 0,
                call: TOpCall::TryCommit,
            },
            Event::Resp {
                seq: 1,
                process: p(1),
                txn: t(1),
                top: 0,
                outcome: TOpOutcome::Committed,
            },
            Event::Inv {
                seq: 2,
                process: p(2),
                txn: t(2),
                top: 0,
                call: TOpCall::read(x(0)),
            },
            Event::Resp {
                seq: 3,
                process: p(2),
                txn: t(2),
                top: 0,
                outcome: TOpOutcome::Value(Value::Int(0)),
            },
        ];
        let e = exec(events);
        assert!(quiescence(&e, QuiescenceKind::Quiescent).unwrap());
        assert!(!quiescence(&e, QuiescenceKind::TQuiescent).unwrap());

        // Empty execution: both hold.
        let e = exec(vec![]);
        assert!(quiescence(&e, QuiescenceKind::Quiescent).unwrap());
        assert!(quiescence(&e, QuiescenceKind::TQuiescent).unwrap());

        // Pending read: neither holds.
        let events = vec![Event::Inv {
            seq: 0,
            process: p(1),
            txn: t(1),
            top: 0,
            call: TOpCall::read(x(0)),
        }];
        let e = exec(events);
        assert!(!quiescence(&e, QuiescenceKind::Quiescent).unwrap());
        assert!(!quiescence(&e, QuiescenceKind::TQuiescent).unwrap());
    }
}
