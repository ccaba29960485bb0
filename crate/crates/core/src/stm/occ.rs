//! Deferred-update optimistic transactions with per-object version locks.
//!
//! Each transactional object is encoded as two base objects: a value cell
//! and a version lock (monotone version counter plus a lock bit taken only
//! while committing). The protocol:
//!
//! - **read(x)**: load x's version lock, load the value, re-load the version
//!   lock (unchanged and unlocked, or abort), then re-validate every
//!   previously read object in read order. Loads only — reads leave no
//!   trace in memory.
//! - **write(x, v)**: buffer locally; no memory accesses until commit.
//! - **tryCommit**: lock the write set in object order (load + compare-and-
//!   swap each), re-validate the read set, write the buffered values, then
//!   bump-and-release each lock. Read-only transactions just re-validate.
//!   Any surprise — a held lock, a moved version, a lost compare-and-swap —
//!   releases whatever is held and aborts.
//!
//! Versions only grow, and they change only at commit, so every abort is
//! evidence of a concurrent transaction contending on a shared object.

use crate::ids::{BaseObjectId, ProcessId, TObjectId, TxnId};
use crate::sim::memory::{MemError, Memory};
use crate::sim::primitive::PrimitiveOp;
use crate::tm::ops::{TOpCall, TOpOutcome};
use crate::tm::{TmAlgorithm, TxnLogic, TxnPoised};
use crate::value::Value;
use std::collections::BTreeMap;

/// Base objects backing one transactional object.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
struct Cells {
    val: BaseObjectId,
    vlock: BaseObjectId,
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct OccTm {
    cells: BTreeMap<TObjectId, Cells>,
}

impl TmAlgorithm for OccTm {
    type Txn = OccTxn;

    const NAME: &'static str = "occ";

    fn setup(
        mem: &mut Memory,
        tobjects: &[(TObjectId, Value)],
        owner: Option<ProcessId>,
    ) -> Result<Self, MemError> {
        let mut cells = BTreeMap::new();
        for (x, init) in tobjects {
            let val = mem.alloc(init.clone(), owner)?;
            let vlock = mem.alloc(Value::unlocked(0), owner)?;
            cells.insert(*x, Cells { val, vlock });
            mem.set_tobject_initial(*x, init.clone());
        }
        Ok(OccTm { cells })
    }

    fn begin(&self, _process: ProcessId, txn: TxnId) -> OccTxn {
        OccTxn {
            tm: self.clone(),
            txn,
            rset: Vec::new(),
            wset: BTreeMap::new(),
            locked: Vec::new(),
            state: State::Idle,
        }
    }
}

/// Where an in-flight operation stands. Each state names the next memory
/// access (or the finished outcome); responses move the state along.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
enum State {
    /// Between operations.
    Idle,
    /// Operation finished; report this outcome.
    Finish(TOpOutcome),
    /// read: first load of x's version lock.
    RLock1 { x: TObjectId },
    /// read: load of x's value.
    RVal { x: TObjectId, v0: u64 },
    /// read: confirming load of x's version lock.
    RLock2 { x: TObjectId, v0: u64, value: Value },
    /// read: re-validating the idx-th previously read object.
    RValidate {
        x: TObjectId,
        v0: u64,
        value: Value,
        idx: usize,
    },
    /// commit: load the idx-th write-set object's version lock.
    CLockRead { idx: usize },
    /// commit: compare-and-swap it from unlocked(v) to locked.
    CLockCas { idx: usize, v: u64 },
    /// commit: re-validate the idx-th read-set entry.
    CValidate { idx: usize },
    /// commit: store the idx-th buffered value.
    CWrite { idx: usize },
    /// commit: bump-and-release the idx-th lock.
    CBump { idx: usize },
    /// abort: release the idx-th held lock, restoring its version.
    CRelease { idx: usize },
    /// Unservable request (host error).
    Faulted(String),
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct OccTxn {
    tm: OccTm,
    txn: TxnId,
    /// Objects read, with the version each read observed, in read order.
    rset: Vec<(TObjectId, u64)>,
    /// Buffered updates.
    wset: BTreeMap<TObjectId, Value>,
    /// Locks currently held: object and its pre-lock version, in
    /// acquisition (= object) order.
    locked: Vec<(TObjectId, u64)>,
    state: State,
}

/// A version-lock word split into parts.
struct Lock {
    version: u64,
    locked: bool,
    owner: Option<TxnId>,
}

impl OccTxn {
    fn cells(&self, x: TObjectId) -> Cells {
        self.tm.cells[&x]
    }

    fn wlist(&self) -> Vec<TObjectId> {
        self.wset.keys().copied().collect()
    }

    fn decode_lock(v: &Value) -> Result<Lock, String> {
        match v {
            Value::VersionLock {
                version,
                locked,
                owner,
            } => Ok(Lock {
                version: *version,
                locked: *locked,
                owner: *owner,
            }),
            other => Err(format!("expected a version lock, found {other}")),
        }
    }

    /// A validation observation is good if the version is the one we read
    /// and nobody else holds the lock.
    fn entry_valid(&self, lock: &Lock, recorded: u64) -> bool {
        lock.version == recorded && (!lock.locked || lock.owner == Some(self.txn))
    }

    /// Enter read-set re-validation at `idx`, or go where validation
    /// success leads when there is nothing (left) to validate.
    fn enter_rvalidate(&mut self, x: TObjectId, v0: u64, value: Value, idx: usize) {
        if idx < self.rset.len() {
            self.state = State::RValidate { x, v0, value, idx };
        } else {
            if !self.rset.iter().any(|(y, _)| *y == x) {
                self.rset.push((x, v0));
            }
            self.state = State::Finish(TOpOutcome::Value(value));
        }
    }

    fn enter_cvalidate(&mut self, idx: usize) {
        if idx < self.rset.len() {
            self.state = State::CValidate { idx };
        } else if self.wset.is_empty() {
            self.state = State::Finish(TOpOutcome::Committed);
        } else {
            self.state = State::CWrite { idx: 0 };
        }
    }

    fn enter_cwrite(&mut self, idx: usize) {
        if idx < self.wset.len() {
            self.state = State::CWrite { idx };
        } else {
            self.state = State::CBump { idx: 0 };
        }
    }

    fn enter_cbump(&mut self, idx: usize) {
        if idx < self.locked.len() {
            self.state = State::CBump { idx };
        } else {
            self.locked.clear();
            self.state = State::Finish(TOpOutcome::Committed);
        }
    }

    fn enter_release(&mut self, idx: usize) {
        if idx < self.locked.len() {
            self.state = State::CRelease { idx };
        } else {
            self.locked.clear();
            self.state = State::Finish(TOpOutcome::Aborted);
        }
    }

    fn fault(&mut self, msg: String) {
        self.state = State::Faulted(msg);
    }
}

impl TxnLogic for OccTxn {
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
                if !self.tm.cells.contains_key(x) {
                    return self.fault(format!("unknown t-object {x}"));
                }
                if let Some(buffered) = self.wset.get(x) {
                    self.state = State::Finish(TOpOutcome::Value(buffered.clone()));
                } else {
                    self.state = State::RLock1 { x: *x };
                }
            }
            TOpCall::Write { x, v } => {
                if !self.tm.cells.contains_key(x) {
                    return self.fault(format!("unknown t-object {x}"));
                }
                self.wset.insert(*x, v.clone());
                self.state = State::Finish(TOpOutcome::Ok);
            }
            TOpCall::TryCommit => {
                if self.wset.is_empty() {
                    self.enter_cvalidate(0);
                } else {
                    self.state = State::CLockRead { idx: 0 };
                }
            }
        }
    }

    fn poised_op(&self) -> TxnPoised {
        match &self.state {
            State::Idle => TxnPoised::Fault("no operation in flight".into()),
            State::Faulted(msg) => TxnPoised::Fault(msg.clone()),
            State::Finish(outcome) => TxnPoised::Done(outcome.clone()),
            State::RLock1 { x } => TxnPoised::Rmw {
                object: self.cells(*x).vlock,
                primitive: PrimitiveOp::read(),
            },
            State::RVal { x, .. } => TxnPoised::Rmw {
                object: self.cells(*x).val,
                primitive: PrimitiveOp::read(),
            },
            State::RLock2 { x, .. } => TxnPoised::Rmw {
                object: self.cells(*x).vlock,
                primitive: PrimitiveOp::read(),
            },
            State::RValidate { idx, .. } => TxnPoised::Rmw {
                object: self.cells(self.rset[*idx].0).vlock,
                primitive: PrimitiveOp::read(),
            },
            State::CLockRead { idx } => TxnPoised::Rmw {
                object: self.cells(self.wlist()[*idx]).vlock,
                primitive: PrimitiveOp::read(),
            },
            State::CLockCas { idx, v } => TxnPoised::Rmw {
                object: self.cells(self.wlist()[*idx]).vlock,
                primitive: PrimitiveOp::cas(Value::unlocked(*v), Value::locked_by(*v, self.txn)),
            },
            State::CValidate { idx } => TxnPoised::Rmw {
                object: self.cells(self.rset[*idx].0).vlock,
                primitive: PrimitiveOp::read(),
            },
            State::CWrite { idx } => {
                let x = self.wlist()[*idx];
                TxnPoised::Rmw {
                    object: self.cells(x).val,
                    primitive: PrimitiveOp::write(self.wset[&x].clone()),
                }
            }
            State::CBump { idx } => {
                let (x, v) = self.locked[*idx];
                TxnPoised::Rmw {
                    object: self.cells(x).vlock,
                    primitive: PrimitiveOp::write(Value::unlocked(v + 1)),
                }
            }
            State::CRelease { idx } => {
                let (x, v) = self.locked[*idx];
                TxnPoised::Rmw {
                    object: self.cells(x).vlock,
                    primitive: PrimitiveOp::write(Value::unlocked(v)),
                }
            }
        }
    }

    fn advance_op(&mut self, response: &Value) {
        match self.state.clone() {
            State::Idle | State::Finish(_) | State::Faulted(_) => {
                panic!("advance without a pending memory access")
            }
            State::RLock1 { x } => match Self::decode_lock(response) {
                Err(e) => self.fault(e),
                Ok(lock) if lock.locked => self.state = State::Finish(TOpOutcome::Aborted),
                Ok(lock) => {
                    self.state = State::RVal {
                        x,
                        v0: lock.version,
                    }
                }
            },
            State::RVal { x, v0 } => {
                self.state = State::RLock2 {
                    x,
                    v0,
                    value: response.clone(),
                }
            }
            State::RLock2 { x, v0, value } => match Self::decode_lock(response) {
                Err(e) => self.fault(e),
                Ok(lock) if lock.locked || lock.version != v0 => {
                    self.state = State::Finish(TOpOutcome::Aborted)
                }
                Ok(_) => self.enter_rvalidate(x, v0, value, 0),
            },
            State::RValidate { x, v0, value, idx } => match Self::decode_lock(response) {
                Err(e) => self.fault(e),
                Ok(lock) if !self.entry_valid(&lock, self.rset[idx].1) => {
                    self.state = State::Finish(TOpOutcome::Aborted)
                }
                Ok(_) => self.enter_rvalidate(x, v0, value, idx + 1),
            },
            State::CLockRead { idx } => match Self::decode_lock(response) {
                Err(e) => self.fault(e),
                Ok(lock) if lock.locked => self.enter_release(0),
                Ok(lock) => {
                    self.state = State::CLockCas {
                        idx,
                        v: lock.version,
                    }
                }
            },
            State::CLockCas { idx, v } => {
                if response == &Value::Bool(true) {
                    self.locked.push((self.wlist()[idx], v));
                    if idx + 1 < self.wset.len() {
                        self.state = State::CLockRead { idx: idx + 1 };
                    } else {
                        self.enter_cvalidate(0);
                    }
                } else {
                    self.enter_release(0);
                }
            }
            State::CValidate { idx } => match Self::decode_lock(response) {
                Err(e) => self.fault(e),
                Ok(lock) if !self.entry_valid(&lock, self.rset[idx].1) => self.enter_release(0),
                Ok(_) => self.enter_cvalidate(idx + 1),
            },
            State::CWrite { idx } => self.enter_cwrite(idx + 1),
            State::CBump { idx } => self.enter_cbump(idx + 1),
            State::CRelease { idx } => self.enter_release(idx + 1),
        }
    }
}
