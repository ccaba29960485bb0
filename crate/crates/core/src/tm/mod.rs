//! The transactional interface: operation calls/outcomes, histories derived
//! from executions, and the glue that drives transaction algorithms as step
//! machines.
//!
//! A transaction algorithm is split in two:
//!
//! - [`TmAlgorithm`]: the shared, immutable part — which base objects encode
//!   which transactional objects. Installed once into a [`Memory`].
//! - [`TxnLogic`]: one in-flight transaction's state. It is handed one
//!   operation at a time and yields the memory primitives that implement it,
//!   one per step, until the operation completes with an outcome.
//!
//! [`ScriptDriver`] adapts a per-process list of scripted transactions into a
//! [`StepMachine`], so algorithms can run under any scheduler, be logged, and
//! be exhaustively explored.

pub mod gen;
pub mod history;
pub mod ops;

pub use history::{derive_history, History, TxnStatus, TxnView};
pub use ops::{TOpCall, TOpKind, TOpOutcome};

use crate::ids::{ProcessId, TObjectId, TxnId};
use crate::sim::machine::{Poised, StepMachine};
use crate::sim::memory::{MemError, Memory};
use crate::sim::primitive::PrimitiveOp;
use crate::value::Value;
use serde::{Deserialize, Serialize};
use std::hash::Hash;

/// What a transaction is about to do for its current operation.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum TxnPoised {
    /// Apply this primitive to shared memory next.
    Rmw {
        object: crate::ids::BaseObjectId,
        primitive: PrimitiveOp,
    },
    /// The current operation completes with this outcome (no further memory
    /// accesses). `Committed`/`Aborted` end the transaction.
    Done(TOpOutcome),
    /// The algorithm cannot serve the request (host misuse, not a scheduling
    /// outcome); surfaced as a simulation error.
    Fault(String),
}

/// One in-flight transaction of some algorithm, driven one operation at a
/// time. Between `begin_op` and the `Done` outcome, `poised_op`/`advance_op`
/// walk the operation's memory accesses step by step. `poised_op` must be
/// pure: repeated calls without `advance_op` return the same answer.
pub trait TxnLogic: Clone + PartialEq + Eq + Hash + std::fmt::Debug {
    fn begin_op(&mut self, call: &TOpCall);
    fn poised_op(&self) -> TxnPoised;
    fn advance_op(&mut self, response: &Value);
}

/// The shared part of a transaction algorithm: base-object layout plus a
/// factory for per-transaction state.
pub trait TmAlgorithm: Clone + PartialEq + Eq + Hash + std::fmt::Debug {
    type Txn: TxnLogic;

    /// Short stable name for reports and CLI selection.
    const NAME: &'static str;

    /// Allocate and initialize this algorithm's base objects for the given
    /// transactional objects. `owner` is the home process for the allocated
    /// base objects when distributed-memory accounting is active.
    fn setup(
        mem: &mut Memory,
        tobjects: &[(TObjectId, Value)],
        owner: Option<ProcessId>,
    ) -> Result<Self, MemError>
    where
        Self: Sized;

    /// Start a fresh transaction with the given identifier.
    fn begin(&self, process: ProcessId, txn: TxnId) -> Self::Txn;
}

/// A scripted transaction: the operations one transaction will attempt, in
/// order. Scripts normally end with `TryCommit`; if an operation aborts, the
/// rest of the script is skipped.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct TxnScript {
    pub txn: TxnId,
    pub ops: Vec<TOpCall>,
}

/// All transactions one process will run, in order.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct ProcessScript {
    pub process: ProcessId,
    pub txns: Vec<TxnScript>,
}

/// A complete scripted scenario: transactional objects with initial values
/// plus per-process transaction scripts.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Workload {
    pub tobjects: Vec<(TObjectId, Value)>,
    pub processes: Vec<ProcessScript>,
}

impl Workload {
    /// Every transaction id must be unique across the whole workload.
    pub fn validate(&self) -> Result<(), String> {
        let mut seen_t = std::collections::BTreeSet::new();
        for (x, _) in &self.tobjects {
            if !seen_t.insert(*x) {
                return Err(format!("duplicate t-object {x}"));
            }
        }
        let mut seen_p = std::collections::BTreeSet::new();
        let mut seen_txn = std::collections::BTreeSet::new();
        for ps in &self.processes {
            if !seen_p.insert(ps.process) {
                return Err(format!("duplicate process {}", ps.process));
            }
            for ts in &ps.txns {
                if !seen_txn.insert(ts.txn) {
                    return Err(format!("duplicate transaction {}", ts.txn));
                }
                for call in &ts.ops {
                    if let Some(x) = call.object() {
                        if !seen_t.contains(&x) {
                            return Err(format!("transaction {} uses undeclared {x}", ts.txn));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
enum DriverPhase {
    /// Poised to invoke the current operation.
    Invoking,
    /// The current operation is in the algorithm's hands.
    InOp,
    /// All scripted transactions finished (or abandoned mid-transaction).
    Finished,
}

/// Runs a process's scripted transactions through a transaction algorithm,
/// as a schedulable step machine. Emits the operation invocation, then the
/// algorithm's memory steps, then the response, for each operation; on a
/// terminal outcome (commit or abort) it moves to the next scripted
/// transaction. A script that ends without a terminal outcome leaves the
/// transaction live and stops the process.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct ScriptDriver<A: TmAlgorithm> {
    tm: A,
    process: ProcessId,
    txns: Vec<TxnScript>,
    t_idx: usize,
    op_idx: usize,
    logic: Option<A::Txn>,
    phase: DriverPhase,
}

impl<A: TmAlgorithm> ScriptDriver<A> {
    pub fn new(tm: A, process: ProcessId, txns: Vec<TxnScript>) -> Self {
        let mut d = ScriptDriver {
            tm,
            process,
            txns,
            t_idx: 0,
            op_idx: 0,
            logic: None,
            phase: DriverPhase::Finished,
        };
        d.enter_txn(0);
        d
    }

    pub fn from_script(tm: A, script: ProcessScript) -> Self {
        Self::new(tm, script.process, script.txns)
    }

    /// Position at the first transaction from `idx` that has operations;
    /// finish if none remain.
    fn enter_txn(&mut self, idx: usize) {
        self.t_idx = idx;
        self.op_idx = 0;
        self.logic = None;
        while self.t_idx < self.txns.len() && self.txns[self.t_idx].ops.is_empty() {
            self.t_idx += 1;
        }
        if self.t_idx < self.txns.len() {
            let txn = self.txns[self.t_idx].txn;
            self.logic = Some(self.tm.begin(self.process, txn));
            self.phase = DriverPhase::Invoking;
        } else {
            self.phase = DriverPhase::Finished;
        }
    }

    fn cur_txn(&self) -> TxnId {
        self.txns[self.t_idx].txn
    }

    fn cur_call(&self) -> &TOpCall {
        &self.txns[self.t_idx].ops[self.op_idx]
    }
}

impl<A: TmAlgorithm> StepMachine for ScriptDriver<A> {
    fn poised(&self) -> Poised {
        match self.phase {
            DriverPhase::Finished => Poised::Done,
            DriverPhase::Invoking => Poised::Invoke {
                txn: self.cur_txn(),
                top: self.op_idx as u32,
                call: self.cur_call().clone(),
            },
            DriverPhase::InOp => match self.logic.as_ref().expect("op in flight").poised_op() {
                TxnPoised::Rmw { object, primitive } => Poised::Rmw { object, primitive },
                TxnPoised::Done(outcome) => Poised::Respond {
                    txn: self.cur_txn(),
                    top: self.op_idx as u32,
                    outcome,
                },
                TxnPoised::Fault(msg) => Poised::Fault(msg),
            },
        }
    }

    fn advance(&mut self, response: Option<&Value>) {
        match self.phase {
            DriverPhase::Finished => panic!("advance on finished driver"),
            DriverPhase::Invoking => {
                let call = self.cur_call().clone();
                self.logic.as_mut().expect("logic exists").begin_op(&call);
                self.phase = DriverPhase::InOp;
            }
            DriverPhase::InOp => {
                let logic = self.logic.as_mut().expect("op in flight");
                match logic.poised_op() {
                    TxnPoised::Rmw { .. } => {
                        logic.advance_op(response.expect("memory response"));
                    }
                    TxnPoised::Done(outcome) => {
                        if outcome.is_terminal() {
                            self.enter_txn(self.t_idx + 1);
                        } else {
                            self.op_idx += 1;
                            if self.op_idx < self.txns[self.t_idx].ops.len() {
                                self.phase = DriverPhase::Invoking;
                            } else {
                                // Script exhausted without commit/abort: the
                                // transaction stays live; the process stops.
                                self.phase = DriverPhase::Finished;
                            }
                        }
                    }
                    TxnPoised::Fault(msg) => panic!("advance on faulted driver: {msg}"),
                }
            }
        }
    }
}

/// Install an algorithm and wire one [`ScriptDriver`] per process of the
/// workload into a ready-to-run simulation.
pub fn simulation_for_workload<A: TmAlgorithm + 'static>(
    workload: &Workload,
    mem_config: crate::sim::memory::MemoryConfig,
    owner: Option<ProcessId>,
) -> Result<crate::sim::sim::Simulation, MemError> {
    let mut mem = Memory::new(mem_config)?;
    let tm = A::setup(&mut mem, &workload.tobjects, owner)?;
    let mut sim = crate::sim::sim::Simulation::new(mem);
    for ps in &workload.processes {
        sim.add_machine(
            ps.process,
            Box::new(ScriptDriver::new(tm.clone(), ps.process, ps.txns.clone())),
        );
    }
    Ok(sim)
}
