//! Transactions over exactly one object, committed with one compare-and-swap.
//!
//! Each transactional object is a single base object holding a versioned
//! cell. A transaction snapshots the cell on first access (one load),
//! buffers at most one write, and commits by compare-and-swapping the
//! snapshot for the updated cell with the version bumped — or, if read-only,
//! by one re-load that confirms the version. A transaction aborts only when
//! that final check loses, which happens exactly when some other transaction
//! committed an update to the same object in the meantime: in any group of
//! transactions contending on one object, somebody always wins.
//!
//! Asking it to touch a second object is a host error, reported as a fault
//! rather than an abort.

use crate::ids::{BaseObjectId, ProcessId, TObjectId, TxnId};
use crate::sim::memory::{MemError, Memory};
use crate::sim::primitive::PrimitiveOp;
use crate::tm::ops::{TOpCall, TOpOutcome};
use crate::tm::{TmAlgorithm, TxnLogic, TxnPoised};
use crate::value::Value;
use std::collections::BTreeMap;

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct SingleObjectTm {
    cells: BTreeMap<TObjectId, BaseObjectId>,
}

impl TmAlgorithm for SingleObjectTm {
    type Txn = SingleObjectTxn;

    const NAME: &'static str = "single";

    fn setup(
        mem: &mut Memory,
        tobjects: &[(TObjectId, Value)],
        owner: Option<ProcessId>,
    ) -> Result<Self, MemError> {
        let mut cells = BTreeMap::new();
        for (x, init) in tobjects {
            let cell = mem.alloc(Value::versioned(init.clone(), 0), owner)?;
            cells.insert(*x, cell);
            mem.set_tobject_initial(*x, init.clone());
        }
        Ok(SingleObjectTm { cells })
    }

    fn begin(&self, _process: ProcessId, txn: TxnId) -> SingleObjectTxn {
        SingleObjectTxn {
            tm: self.clone(),
            txn,
            target: None,
            snapshot: None,
            buffered: None,
            state: State::Idle,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
enum State {
    Idle,
    Finish(TOpOutcome),
    /// Load the cell to establish the snapshot; `then_buffer` carries the
    /// value when the snapshot is being taken for a first-access write.
    Snapshot {
        then_buffer: Option<Value>,
    },
    /// Read-only commit: one confirming load.
    CommitCheck,
    /// Updating commit: the one compare-and-swap.
    CommitCas,
    Faulted(String),
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct SingleObjectTxn {
    tm: SingleObjectTm,
    txn: TxnId,
    /// The one object this transaction works on, fixed by first use.
    target: Option<TObjectId>,
    /// The whole cell as first observed.
    snapshot: Option<Value>,
    /// Buffered write value, if any.
    buffered: Option<Value>,
    state: State,
}

impl SingleObjectTxn {
    fn cell(&self) -> BaseObjectId {
        self.tm.cells[&self.target.expect("target fixed")]
    }

    /// Fix the transaction's object, faulting on a second distinct one.
    fn claim(&mut self, x: TObjectId) -> bool {
        if !self.tm.cells.contains_key(&x) {
            self.state = State::Faulted(format!("unknown t-object {x}"));
            return false;
        }
        match self.target {
            None => {
                self.target = Some(x);
                true
            }
            Some(t) if t == x => true,
            Some(t) => {
                self.state = State::Faulted(format!(
                    "serves one object per transaction: already bound to {t}, asked for {x}"
                ));
                false
            }
        }
    }

    fn snapshot_parts(&self) -> (Value, u64) {
        match self.snapshot.as_ref().expect("snapshot taken") {
            Value::Versioned { value, version } => ((**value).clone(), *version),
            other => panic!("snapshot is not a versioned cell: {other}"),
        }
    }
}

impl TxnLogic for SingleObjectTxn {
    fn begin_op(&mut self, call: &TOpCall) {
        debug_assert!(
            match &self.state {
                State::Idle => true,
                State::Finish(o) => !o.is_terminal(),
                _ => false,
            },
            "operation in flight"
        );
        match call {
            TOpCall::Read { x } => {
                if !self.claim(*x) {
                    return;
                }
                if let Some(v) = &self.buffered {
                    self.state = State::Finish(TOpOutcome::Value(v.clone()));
                } else if self.snapshot.is_some() {
                    let (value, _) = self.snapshot_parts();
                    self.state = State::Finish(TOpOutcome::Value(value));
                } else {
                    self.state = State::Snapshot { then_buffer: None };
                }
            }
            TOpCall::Write { x, v } => {
                if !self.claim(*x) {
                    return;
                }
                if self.snapshot.is_some() {
                    self.buffered = Some(v.clone());
                    self.state = State::Finish(TOpOutcome::Ok);
                } else {
                    // First access: fetch the cell once so commit knows what
                    // to compare against.
                    self.state = State::Snapshot {
                        then_buffer: Some(v.clone()),
                    };
                }
            }
            TOpCall::TryCommit => {
                if self.target.is_none() {
                    self.state = State::Finish(TOpOutcome::Committed);
                } else if self.buffered.is_none() {
                    self.state = State::CommitCheck;
                } else {
                    self.state = State::CommitCas;
                }
            }
        }
    }

    fn poised_op(&self) -> TxnPoised {
        match &self.state {
            State::Idle => TxnPoised::Fault("no operation in flight".into()),
            State::Faulted(msg) => TxnPoised::Fault(msg.clone()),
            State::Finish(outcome) => TxnPoised::Done(outcome.clone()),
            State::Snapshot { .. } | State::CommitCheck => TxnPoised::Rmw {
                object: self.cell(),
                primitive: PrimitiveOp::read(),
            },
            State::CommitCas => {
                let (_, version) = self.snapshot_parts();
                let new_cell =
                    Value::versioned(self.buffered.clone().expect("updating commit"), version + 1);
                TxnPoised::Rmw {
                    object: self.cell(),
                    primitive: PrimitiveOp::cas(
                        self.snapshot.clone().expect("snapshot taken"),
                        new_cell,
                    ),
                }
            }
        }
    }

    fn advance_op(&mut self, response: &Value) {
        match self.state.clone() {
            State::Idle | State::Finish(_) | State::Faulted(_) => {
                panic!("advance without a pending memory access")
            }
            State::Snapshot { then_buffer } => {
                if !matches!(response, Value::Versioned { .. }) {
                    self.state =
                        State::Faulted(format!("expected a versioned cell, found {response}"));
                    return;
                }
                self.snapshot = Some(response.clone());
                match then_buffer {
                    Some(v) => {
                        self.buffered = Some(v);
                        self.state = State::Finish(TOpOutcome::Ok);
                    }
                    None => {
                        let (value, _) = self.snapshot_parts();
                        self.state = State::Finish(TOpOutcome::Value(value));
                    }
                }
            }
            State::CommitCheck => {
                let (_, version) = self.snapshot_parts();
                let ok =
                    matches!(response, Value::Versioned { version: now, .. } if *now == version);
                self.state = State::Finish(if ok {
                    TOpOutcome::Committed
                } else {
                    TOpOutcome::Aborted
                });
            }
            State::CommitCas => {
                self.state = State::Finish(if response == &Value::Bool(true) {
                    TOpOutcome::Committed
                } else {
                    TOpOutcome::Aborted
                });
            }
        }
    }
}
