//! The cooperative simulation loop.
//!
//! One process steps at a time. A step asks the process's machine what it is
//! poised to do, performs it (primitive application, marker record, or
//! recorded no-op when the machine is done), and feeds the response back.
//! Transactional attribution is centralized here: every primitive issued
//! between an operation's invocation and response markers is stamped with
//! that transaction and operation index.

use crate::ids::{ProcessId, TxnId};
use crate::sim::event::{Event, Execution, MarkerKind};
use crate::sim::machine::{Poised, StepMachine};
use crate::sim::memory::{MemError, Memory};
use crate::sim::schedule::{Chooser, Schedule};
use crate::tm::ops::TOpOutcome;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Error, Debug)]
pub enum SimError {
    #[error("no machine registered for {0}")]
    UnknownProcess(ProcessId),
    #[error(transparent)]
    Memory(#[from] MemError),
    #[error("{process}: machine fault: {message}")]
    MachineFault { process: ProcessId, message: String },
    #[error("{process}: step budget {budget} exhausted while waiting for {what}")]
    BudgetExhausted {
        process: ProcessId,
        budget: u64,
        what: String,
    },
}

/// What a single scheduled step did.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Stepped {
    /// The machine performed an event (primitive or marker).
    Performed,
    /// The machine was done; a no-op was recorded.
    NoopRecorded,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct RunSummary {
    /// Scheduler ticks consumed (including recorded no-ops).
    pub steps: u64,
    /// True when every machine finished.
    pub completed: bool,
    /// True when the budget cut a scripted schedule short.
    pub truncated: bool,
}

pub struct Simulation {
    pub mem: Memory,
    machines: BTreeMap<ProcessId, Box<dyn StepMachine>>,
    /// Open transactional operation per process: (txn, top index).
    open_top: BTreeMap<ProcessId, (TxnId, u32)>,
}

impl Simulation {
    pub fn new(mem: Memory) -> Simulation {
        Simulation {
            mem,
            machines: BTreeMap::new(),
            open_top: BTreeMap::new(),
        }
    }

    pub fn add_machine(&mut self, process: ProcessId, machine: Box<dyn StepMachine>) {
        self.machines.insert(process, machine);
    }

    pub fn processes(&self) -> Vec<ProcessId> {
        self.machines.keys().copied().collect()
    }

    pub fn is_done(&self, process: ProcessId) -> bool {
        self.machines
            .get(&process)
            .map(|m| m.is_done())
            .unwrap_or(true)
    }

    pub fn all_done(&self) -> bool {
        self.machines.values().all(|m| m.is_done())
    }

    /// Perform one step of `process`.
    pub fn step(&mut self, process: ProcessId) -> Result<Stepped, SimError> {
        let machine = self
            .machines
            .get_mut(&process)
            .ok_or(SimError::UnknownProcess(process))?;
        match machine.poised() {
            Poised::Done => {
                self.mem.push_noop(process);
                Ok(Stepped::NoopRecorded)
            }
            Poised::Fault(message) => Err(SimError::MachineFault { process, message }),
            Poised::Rmw { object, primitive } => {
                let (txn, top) = match self.open_top.get(&process) {
                    Some((t, i)) => (Some(*t), Some(*i)),
                    None => (None, None),
                };
                let ev = self
                    .mem
                    .apply_attributed(process, object, &primitive, txn, top)?;
                machine.advance(Some(&ev.response));
                Ok(Stepped::Performed)
            }
            Poised::Invoke { txn, top, call } => {
                self.mem.push_inv(process, txn, top, call);
                self.open_top.insert(process, (txn, top));
                machine.advance(None);
                Ok(Stepped::Performed)
            }
            Poised::Respond { txn, top, outcome } => {
                self.mem.push_resp(process, txn, top, outcome);
                self.open_top.remove(&process);
                machine.advance(None);
                Ok(Stepped::Performed)
            }
            Poised::Marker(kind) => {
                self.mem.push_marker(process, kind);
                machine.advance(None);
                Ok(Stepped::Performed)
            }
        }
    }

    /// Drive machines under `schedule`, stopping at schedule end, global
    /// completion, or after `max_steps` scheduler ticks. Exhausting the
    /// budget with a scripted schedule unfinished flags the execution as
    /// truncated rather than failing.
    pub fn run(&mut self, schedule: &Schedule, max_steps: u64) -> Result<RunSummary, SimError> {
        let mut chooser = Chooser::new(schedule);
        let mut steps = 0u64;
        loop {
            if self.all_done() {
                return Ok(RunSummary {
                    steps,
                    completed: true,
                    truncated: false,
                });
            }
            if steps >= max_steps {
                let truncated = chooser.is_scripted() && chooser.scripted_remaining() > 0;
                if truncated {
                    self.mem.mark_truncated();
                }
                return Ok(RunSummary {
                    steps,
                    completed: false,
                    truncated,
                });
            }
            let machines = &self.machines;
            let unfinished = |p: ProcessId| machines.get(&p).map(|m| !m.is_done()).unwrap_or(false);
            let Some(p) = chooser.next_process(&unfinished) else {
                return Ok(RunSummary {
                    steps,
                    completed: self.all_done(),
                    truncated: false,
                });
            };
            self.step(p)?;
            steps += 1;
        }
    }

    /// Step `process` until operation `top` of `txn` responds; returns the
    /// outcome. Used by harnesses that run solo fragments to a boundary.
    pub fn run_until_response(
        &mut self,
        process: ProcessId,
        txn: TxnId,
        top: u32,
        budget: u64,
    ) -> Result<TOpOutcome, SimError> {
        for _ in 0..budget {
            let before = self.mem.log().len();
            self.step(process)?;
            for ev in &self.mem.log()[before..] {
                if let Event::Resp {
                    txn: t,
                    top: i,
                    outcome,
                    ..
                } = ev
                {
                    if *t == txn && *i == top {
                        return Ok(outcome.clone());
                    }
                }
            }
        }
        Err(SimError::BudgetExhausted {
            process,
            budget,
            what: format!("response of op {top} of {txn}"),
        })
    }

    /// Step `process` until its machine finishes.
    pub fn run_until_done(&mut self, process: ProcessId, budget: u64) -> Result<(), SimError> {
        for _ in 0..budget {
            if self.is_done(process) {
                return Ok(());
            }
            self.step(process)?;
        }
        if self.is_done(process) {
            Ok(())
        } else {
            Err(SimError::BudgetExhausted {
                process,
                budget,
                what: "machine completion".to_string(),
            })
        }
    }

    /// Step `process` until its machine emits the given marker.
    pub fn run_until_marker(
        &mut self,
        process: ProcessId,
        kind: MarkerKind,
        budget: u64,
    ) -> Result<(), SimError> {
        for _ in 0..budget {
            let before = self.mem.log().len();
            self.step(process)?;
            let hit = self.mem.log()[before..].iter().any(|ev| {
                matches!(ev, Event::Marker { kind: k, process: p, .. } if *k == kind && *p == process)
            });
            if hit {
                return Ok(());
            }
        }
        Err(SimError::BudgetExhausted {
            process,
            budget,
            what: format!("marker {kind:?}"),
        })
    }

    pub fn execution(&self) -> Execution {
        self.mem.to_execution()
    }
}
