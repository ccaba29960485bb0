//! Mutual exclusion built from the one-object transactional memory.
//!
//! Shared state: one t-object `X` (initially ⊥) holding the last entrant's
//! process/face token, plus plain registers — per process and face a
//! `done` flag and a `succ` cell, and per ordered pair a spin gate
//! `lock[spinner][peer]` homed at the spinner (so spinning is local under
//! distributed memory).
//!
//! A passage:
//!
//! - **Entry**: flip the face; `done[p][face] := false`; `succ[p][face] :=
//!   ⊥`; then run the transaction `{ prev := read X; write X := (p, face);
//!   commit }`, retrying with a fresh transaction id on abort. The
//!   committed read names the predecessor. If there is one: lock the own
//!   gate, publish yourself in the predecessor's `succ` cell, read the
//!   predecessor's `done` flag, and — only if it was still false — spin on
//!   the own gate until the predecessor unlocks it.
//! - **Critical section**: a single marker event.
//! - **Exit**: `done[p][face] := true`; read `succ[p][face]`; unlock the
//!   successor's gate if one registered. At most three plain events.
//!
//! The handshake order matters: the spinner locks its gate and registers
//! *before* checking `done`, so either it sees `done = true` and skips the
//! spin, or its registration precedes the predecessor's `succ` read and
//! the unlock is guaranteed.
//!
//! [`explore_mutual_exclusion`] model-checks every interleaving for small
//! configurations; [`run_mutex_experiment`] runs a schedule and accounts
//! remote memory references per passage, with transactional, plain, and
//! spin-read costs separated.

use crate::ids::{BaseObjectId, ProcessId, TObjectId, TxnId};
use crate::sim::event::{Event, Execution, MarkerKind};
use crate::sim::explore::{explore_states, ExploreOverflow, ExploreStats, MiniMem};
use crate::sim::machine::{Poised, StepMachine};
use crate::sim::memory::{MemError, Memory, MemoryConfig};
use crate::sim::primitive::{PrimKind, PrimitiveOp};
use crate::sim::rmr::MemModel;
use crate::sim::schedule::Schedule;
use crate::sim::sim::{SimError, Simulation};
use crate::stm::SingleObjectTm;
use crate::tm::ops::{TOpCall, TOpOutcome};
use crate::tm::{TmAlgorithm, TxnLogic, TxnPoised};
use crate::value::Value;
use serde::Serialize;
use std::collections::BTreeMap;

type SoTxn = <SingleObjectTm as TmAlgorithm>::Txn;

const X: TObjectId = TObjectId(0);
const LOCKED: Value = Value::Bool(true);
const UNLOCKED: Value = Value::Bool(false);

/// Base-object layout of the lock: registers per process/face and the
/// spin gates, plus the installed one-object TM.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct MutexLayout {
    pub n: u32,
    pub tm: SingleObjectTm,
    pub done: BTreeMap<(ProcessId, u8), BaseObjectId>,
    pub succ: BTreeMap<(ProcessId, u8), BaseObjectId>,
    /// `lock[(spinner, peer)]`, homed at the spinner.
    pub lock: BTreeMap<(ProcessId, ProcessId), BaseObjectId>,
}

impl MutexLayout {
    pub fn processes(&self) -> Vec<ProcessId> {
        (0..self.n).map(ProcessId).collect()
    }

    /// Is this object one of `p`'s spin gates?
    fn is_own_gate(&self, p: ProcessId, object: BaseObjectId) -> bool {
        self.lock
            .iter()
            .any(|((spinner, _), b)| *spinner == p && *b == object)
    }
}

/// Allocate the lock's memory for `n` processes: the TM cell (homed at
/// process 0), then per-process registers homed at their owners.
pub fn build_mutex_memory(n: u32) -> Result<(Memory, MutexLayout), MemError> {
    let mut mem = Memory::new(MemoryConfig {
        objects: Vec::new(),
        models: MemoryConfig::all_models(),
        dsm_owner: Default::default(),
    })?;
    let tm = SingleObjectTm::setup(&mut mem, &[(X, Value::Bottom)], Some(ProcessId(0)))?;
    let mut done = BTreeMap::new();
    let mut succ = BTreeMap::new();
    let mut lock = BTreeMap::new();
    for i in 0..n {
        let p = ProcessId(i);
        for f in 0..2u8 {
            done.insert((p, f), mem.alloc(Value::Bool(false), Some(p))?);
            succ.insert((p, f), mem.alloc(Value::Bottom, Some(p))?);
        }
    }
    // The full matrix, diagonal included: a process whose two passages are
    // consecutive entrants is its own predecessor and runs the same
    // handshake. It locks and registers on the diagonal harmlessly — the
    // predecessor's done flag is necessarily already true (its exit
    // finished before this entry began), so the diagonal gate is never
    // spun on.
    for i in 0..n {
        for j in 0..n {
            let (pi, pj) = (ProcessId(i), ProcessId(j));
            lock.insert((pi, pj), mem.alloc(UNLOCKED, Some(pi))?);
        }
    }
    Ok((
        mem,
        MutexLayout {
            n,
            tm,
            done,
            succ,
            lock,
        },
    ))
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
enum Phase {
    PassageBegin,
    WriteDone,
    WriteSucc,
    /// Poised to invoke operation `top` of the current attempt.
    FuncInvoke {
        txn: TxnId,
        top: u32,
        logic: SoTxn,
        prev: Option<Value>,
    },
    /// The operation is in the transaction's hands.
    FuncRun {
        txn: TxnId,
        top: u32,
        logic: SoTxn,
        prev: Option<Value>,
    },
    LockPrev {
        prev_pid: ProcessId,
        prev_face: u8,
    },
    RegisterSucc {
        prev_pid: ProcessId,
        prev_face: u8,
    },
    ReadDone {
        prev_pid: ProcessId,
        prev_face: u8,
    },
    Spin {
        prev_pid: ProcessId,
    },
    Cs,
    ExitWriteDone,
    ExitReadSucc,
    ExitUnlock {
        succ: ProcessId,
    },
    PassageEnd,
    Finished,
    Faulted(String),
}

/// One process running `passes` entry/exit passages.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct MutexMachine {
    layout: MutexLayout,
    process: ProcessId,
    index: u32,
    passes_left: u32,
    face: u8,
    /// Transaction attempts so far, across passages; makes fresh ids.
    attempts: u64,
    phase: Phase,
}

impl MutexMachine {
    pub fn new(layout: MutexLayout, index: u32, passes: u32) -> MutexMachine {
        MutexMachine {
            process: ProcessId(index),
            index,
            passes_left: passes,
            face: 0,
            attempts: 0,
            phase: if passes == 0 {
                Phase::Finished
            } else {
                Phase::PassageBegin
            },
            layout,
        }
    }

    /// Poised exactly at the critical-section marker.
    pub fn in_critical_section(&self) -> bool {
        matches!(self.phase, Phase::Cs)
    }

    fn func_call(&self, top: u32) -> TOpCall {
        match top {
            0 => TOpCall::read(X),
            1 => TOpCall::Write {
                x: X,
                v: Value::Face {
                    pid: self.process,
                    face: self.face,
                },
            },
            _ => TOpCall::TryCommit,
        }
    }

    fn fresh_attempt(&mut self) -> (TxnId, SoTxn) {
        let txn = TxnId(1 + self.index as u64 + self.attempts * self.layout.n as u64);
        self.attempts += 1;
        (txn, self.layout.tm.begin(self.process, txn))
    }

    fn reg(
        &self,
        map: &BTreeMap<(ProcessId, u8), BaseObjectId>,
        p: ProcessId,
        f: u8,
    ) -> BaseObjectId {
        *map.get(&(p, f))
            .expect("register exists for every process/face")
    }
}

impl StepMachine for MutexMachine {
    fn poised(&self) -> Poised {
        let me = self.process;
        match &self.phase {
            Phase::PassageBegin => Poised::Marker(MarkerKind::PassageBegin),
            // Entry writes target the face this passage will use (the
            // flip happens when the passage-begin marker lands).
            Phase::WriteDone => Poised::Rmw {
                object: self.reg(&self.layout.done, me, self.face),
                primitive: PrimitiveOp::write(Value::Bool(false)),
            },
            Phase::WriteSucc => Poised::Rmw {
                object: self.reg(&self.layout.succ, me, self.face),
                primitive: PrimitiveOp::write(Value::Bottom),
            },
            Phase::FuncInvoke { txn, top, .. } => Poised::Invoke {
                txn: *txn,
                top: *top,
                call: self.func_call(*top),
            },
            Phase::FuncRun {
                txn, top, logic, ..
            } => match logic.poised_op() {
                TxnPoised::Rmw { object, primitive } => Poised::Rmw { object, primitive },
                TxnPoised::Done(outcome) => Poised::Respond {
                    txn: *txn,
                    top: *top,
                    outcome,
                },
                TxnPoised::Fault(msg) => Poised::Fault(msg),
            },
            Phase::LockPrev { prev_pid, .. } => Poised::Rmw {
                object: self.layout.lock[&(me, *prev_pid)],
                primitive: PrimitiveOp::write(LOCKED),
            },
            Phase::RegisterSucc {
                prev_pid,
                prev_face,
            } => Poised::Rmw {
                object: self.reg(&self.layout.succ, *prev_pid, *prev_face),
                primitive: PrimitiveOp::write(Value::Pid(me)),
            },
            Phase::ReadDone {
                prev_pid,
                prev_face,
            } => Poised::Rmw {
                object: self.reg(&self.layout.done, *prev_pid, *prev_face),
                primitive: PrimitiveOp::read(),
            },
            Phase::Spin { prev_pid } => Poised::Rmw {
                object: self.layout.lock[&(me, *prev_pid)],
                primitive: PrimitiveOp::read(),
            },
            Phase::Cs => Poised::Marker(MarkerKind::CriticalSection),
            Phase::ExitWriteDone => Poised::Rmw {
                object: self.reg(&self.layout.done, me, self.face),
                primitive: PrimitiveOp::write(Value::Bool(true)),
            },
            Phase::ExitReadSucc => Poised::Rmw {
                object: self.reg(&self.layout.succ, me, self.face),
                primitive: PrimitiveOp::read(),
            },
            Phase::ExitUnlock { succ } => Poised::Rmw {
                object: self.layout.lock[&(*succ, me)],
                primitive: PrimitiveOp::write(UNLOCKED),
            },
            Phase::PassageEnd => Poised::Marker(MarkerKind::PassageEnd),
            Phase::Finished => Poised::Done,
            Phase::Faulted(msg) => Poised::Fault(msg.clone()),
        }
    }

    fn advance(&mut self, response: Option<&Value>) {
        let phase = std::mem::replace(&mut self.phase, Phase::Finished);
        self.phase = match phase {
            Phase::PassageBegin => {
                self.face = 1 - self.face;
                Phase::WriteDone
            }
            Phase::WriteDone => Phase::WriteSucc,
            Phase::WriteSucc => {
                let (txn, logic) = self.fresh_attempt();
                Phase::FuncInvoke {
                    txn,
                    top: 0,
                    logic,
                    prev: None,
                }
            }
            Phase::FuncInvoke {
                txn,
                top,
                mut logic,
                prev,
            } => {
                logic.begin_op(&self.func_call(top));
                Phase::FuncRun {
                    txn,
                    top,
                    logic,
                    prev,
                }
            }
            Phase::FuncRun {
                txn,
                top,
                mut logic,
                prev,
            } => match logic.poised_op() {
                TxnPoised::Rmw { .. } => {
                    logic.advance_op(response.expect("rmw step carries a response"));
                    Phase::FuncRun {
                        txn,
                        top,
                        logic,
                        prev,
                    }
                }
                TxnPoised::Done(outcome) => match outcome {
                    TOpOutcome::Value(v) => Phase::FuncInvoke {
                        txn,
                        top: 1,
                        logic,
                        prev: Some(v),
                    },
                    TOpOutcome::Ok => Phase::FuncInvoke {
                        txn,
                        top: 2,
                        logic,
                        prev,
                    },
                    TOpOutcome::Aborted => {
                        let (txn, logic) = self.fresh_attempt();
                        Phase::FuncInvoke {
                            txn,
                            top: 0,
                            logic,
                            prev: None,
                        }
                    }
                    TOpOutcome::Committed => match prev {
                        Some(Value::Bottom) => Phase::Cs,
                        Some(Value::Face { pid, face }) => Phase::LockPrev {
                            prev_pid: pid,
                            prev_face: face,
                        },
                        other => Phase::Faulted(format!(
                            "transaction read {other:?} from the shared cell, \
                             expected a process/face token or nothing"
                        )),
                    },
                },
                TxnPoised::Fault(msg) => Phase::Faulted(msg),
            },
            Phase::LockPrev {
                prev_pid,
                prev_face,
            } => Phase::RegisterSucc {
                prev_pid,
                prev_face,
            },
            Phase::RegisterSucc {
                prev_pid,
                prev_face,
            } => Phase::ReadDone {
                prev_pid,
                prev_face,
            },
            Phase::ReadDone { prev_pid, .. } => match response {
                Some(Value::Bool(true)) => Phase::Cs,
                Some(Value::Bool(false)) => Phase::Spin { prev_pid },
                other => Phase::Faulted(format!("done flag held {other:?}")),
            },
            Phase::Spin { prev_pid } => match response {
                Some(v) if *v == LOCKED => Phase::Spin { prev_pid },
                Some(v) if *v == UNLOCKED => Phase::Cs,
                other => Phase::Faulted(format!("spin gate held {other:?}")),
            },
            Phase::Cs => Phase::ExitWriteDone,
            Phase::ExitWriteDone => Phase::ExitReadSucc,
            Phase::ExitReadSucc => match response {
                Some(Value::Pid(q)) => Phase::ExitUnlock { succ: *q },
                Some(Value::Bottom) => Phase::PassageEnd,
                other => Phase::Faulted(format!("successor cell held {other:?}")),
            },
            Phase::ExitUnlock { .. } => Phase::PassageEnd,
            Phase::PassageEnd => {
                self.passes_left -= 1;
                if self.passes_left == 0 {
                    Phase::Finished
                } else {
                    Phase::PassageBegin
                }
            }
            Phase::Finished => Phase::Finished,
            Phase::Faulted(msg) => Phase::Faulted(msg),
        };
    }
}

/// Fresh machines for `n` processes × `passes` passages.
pub fn build_mutex_machines(layout: &MutexLayout, passes: u32) -> Vec<(ProcessId, MutexMachine)> {
    (0..layout.n)
        .map(|i| (ProcessId(i), MutexMachine::new(layout.clone(), i, passes)))
        .collect()
}

/// Remote-memory-reference accounting for one passage of one process.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct PassageCost {
    pub process: ProcessId,
    pub passage: u32,
    /// RMRs per model charged to events inside transactional operations.
    pub tm_rmr: BTreeMap<MemModel, u64>,
    /// RMRs per model charged to plain (non-transactional) events.
    pub non_tm_rmr: BTreeMap<MemModel, u64>,
    /// The subset of `non_tm_rmr` charged to spin-gate reads.
    pub spin_rmr: BTreeMap<MemModel, u64>,
    pub non_tm_events: u64,
    pub spin_reads: u64,
    /// Plain events from the critical-section marker to passage end.
    pub exit_events: u64,
}

impl PassageCost {
    fn new(process: ProcessId, passage: u32) -> PassageCost {
        PassageCost {
            process,
            passage,
            tm_rmr: BTreeMap::new(),
            non_tm_rmr: BTreeMap::new(),
            spin_rmr: BTreeMap::new(),
            non_tm_events: 0,
            spin_reads: 0,
            exit_events: 0,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct MutexRunReport {
    pub n: u32,
    pub passes: u32,
    /// No two processes ever occupied the critical section at once.
    pub safety_ok: bool,
    /// Passages completed per process.
    pub completed: BTreeMap<ProcessId, u32>,
    pub passages: Vec<PassageCost>,
    #[serde(skip)]
    pub execution: Execution,
}

/// Run `n` processes × `passes` passages under a schedule and account the
/// costs per passage.
pub fn run_mutex_experiment(
    n: u32,
    passes: u32,
    schedule: &Schedule,
    max_steps: u64,
) -> Result<MutexRunReport, SimError> {
    let (mem, layout) = build_mutex_memory(n).map_err(SimError::Memory)?;
    let mut sim = Simulation::new(mem);
    for (p, machine) in build_mutex_machines(&layout, passes) {
        sim.add_machine(p, Box::new(machine));
    }
    sim.run(schedule, max_steps)?;
    let execution = sim.execution();
    Ok(analyze_mutex_execution(&layout, n, passes, execution))
}

/// Derive the per-passage accounting and the safety verdict from a log.
pub fn analyze_mutex_execution(
    layout: &MutexLayout,
    n: u32,
    passes: u32,
    execution: Execution,
) -> MutexRunReport {
    // A process occupies its critical section from the step that completed
    // its entry until its section marker executes. Two occupancies that
    // overlap in that open span mean both processes stood ready to run
    // their sections at the same instant — a violation.
    let mut last_seq: BTreeMap<ProcessId, u64> = BTreeMap::new();
    let mut windows: Vec<(u64, u64)> = Vec::new();
    for ev in &execution.events {
        if let Event::Marker {
            kind: MarkerKind::CriticalSection,
            process,
            seq,
        } = ev
        {
            let start = last_seq.get(process).copied().unwrap_or(0);
            windows.push((start, *seq));
        }
        last_seq.insert(ev.process(), ev.seq());
    }
    let mut safety_ok = true;
    for (i, &(a_start, a_marker)) in windows.iter().enumerate() {
        for &(b_start, b_marker) in &windows[i + 1..] {
            if a_start.max(b_start) < a_marker.min(b_marker) {
                safety_ok = false;
            }
        }
    }

    // Passage windows and per-passage cost extraction.
    let mut completed: BTreeMap<ProcessId, u32> = BTreeMap::new();
    let mut passages: Vec<PassageCost> = Vec::new();
    let mut open: BTreeMap<ProcessId, (PassageCost, bool)> = BTreeMap::new();
    let mut passage_index: BTreeMap<ProcessId, u32> = BTreeMap::new();
    for ev in &execution.events {
        let p = ev.process();
        match ev {
            Event::Marker {
                kind: MarkerKind::PassageBegin,
                ..
            } => {
                let idx = passage_index.entry(p).or_insert(0);
                let cost = PassageCost::new(p, *idx);
                *idx += 1;
                open.insert(p, (cost, false));
            }
            Event::Marker {
                kind: MarkerKind::CriticalSection,
                ..
            } => {
                if let Some((_, in_exit)) = open.get_mut(&p) {
                    *in_exit = true;
                }
            }
            Event::Marker {
                kind: MarkerKind::PassageEnd,
                ..
            } => {
                if let Some((cost, _)) = open.remove(&p) {
                    passages.push(cost);
                    *completed.entry(p).or_insert(0) += 1;
                }
            }
            Event::Rmw(r) => {
                if let Some((cost, in_exit)) = open.get_mut(&p) {
                    let is_tm = r.txn.is_some();
                    let spin =
                        !is_tm && r.primitive == PrimKind::Read && layout.is_own_gate(p, r.object);
                    for model in MemModel::ALL {
                        let charge = r.rmr.for_model(model) as u64;
                        if is_tm {
                            *cost.tm_rmr.entry(model).or_insert(0) += charge;
                        } else {
                            *cost.non_tm_rmr.entry(model).or_insert(0) += charge;
                            if spin {
                                *cost.spin_rmr.entry(model).or_insert(0) += charge;
                            }
                        }
                    }
                    if !is_tm {
                        cost.non_tm_events += 1;
                        if spin {
                            cost.spin_reads += 1;
                        }
                        if *in_exit {
                            cost.exit_events += 1;
                        }
                    }
                }
            }
            _ => {}
        }
    }

    MutexRunReport {
        n,
        passes,
        safety_ok,
        completed,
        passages,
        execution,
    }
}

/// A reachable state with two processes in the critical section, plus the
/// replayed trace that exhibits it.
#[derive(Clone, Debug)]
pub struct MutexCounterexample {
    pub schedule: Vec<ProcessId>,
    pub execution: Execution,
}

/// Model-check mutual exclusion: walk every reachable state of `n`
/// processes × `passes` passages and verify at most one process is at its
/// critical-section marker.
pub fn explore_mutual_exclusion(
    n: u32,
    passes: u32,
    max_states: u64,
) -> Result<Result<ExploreStats, Box<MutexCounterexample>>, ExploreOverflow> {
    let (mem, layout) = build_mutex_memory(n).expect("mutex memory");
    let machines = build_mutex_machines(&layout, passes);
    let mini = MiniMem::from_memory(&mem);
    let mut check = |_: &MiniMem, ms: &[(ProcessId, MutexMachine)]| {
        ms.iter().filter(|(_, m)| m.in_critical_section()).count() <= 1
    };
    match explore_states(&mini, &machines, max_states, &mut check)? {
        Ok(stats) => Ok(Ok(stats)),
        Err(violation) => {
            // Replay the scheduler choices in a full simulation so the
            // counterexample comes with a complete trace.
            let (mem, layout) = build_mutex_memory(n).expect("mutex memory");
            let mut sim = Simulation::new(mem);
            for (p, machine) in build_mutex_machines(&layout, passes) {
                sim.add_machine(p, Box::new(machine));
            }
            for &p in &violation.schedule {
                sim.step(p).expect("replaying explored schedule");
            }
            Ok(Err(Box::new(MutexCounterexample {
                schedule: violation.schedule,
                execution: sim.execution(),
            })))
        }
    }
}

/// Under a fair round-robin schedule every process must finish all its
/// passages within the budget.
pub fn check_deadlock_freedom(
    n: u32,
    passes: u32,
    max_steps: u64,
) -> Result<MutexRunReport, String> {
    let schedule = Schedule::RoundRobin {
        procs: (0..n).map(ProcessId).collect(),
    };
    let report =
        run_mutex_experiment(n, passes, &schedule, max_steps).map_err(|e| e.to_string())?;
    for i in 0..n {
        let p = ProcessId(i);
        let done = report.completed.get(&p).copied().unwrap_or(0);
        if done != passes {
            return Err(format!(
                "{p} completed {done} of {passes} passages under a fair schedule"
            ));
        }
    }
    if !report.safety_ok {
        return Err("two processes occupied the critical section at once".into());
    }
    Ok(report)
}
