//! Sequential progress prober: a transaction running with the world to
//! itself must commit.
//!
//! Each workload is replayed with a fully sequential schedule — every
//! transaction runs start to finish alone, each starting from the quiet
//! configuration its predecessors left behind. Any abort, fault, or blown
//! step budget is a violation: with no concurrency there is nobody to lose
//! to.

use crate::ids::{ProcessId, TxnId};
use crate::sim::memory::MemoryConfig;
use crate::sim::sim::SimError;
use crate::tm::history::derive_history;
use crate::tm::{simulation_for_workload, TmAlgorithm, Workload};
use serde::Serialize;

/// Default per-process step budget for solo runs.
pub const DEFAULT_SOLO_BUDGET: u64 = 1_000_000;

#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct SeqProgressViolation {
    pub workload: usize,
    pub process: Option<ProcessId>,
    pub txn: Option<TxnId>,
    pub reason: String,
}

#[derive(Clone, PartialEq, Eq, Debug, Default, Serialize)]
pub struct SeqProgressReport {
    /// Transactions that ran and committed.
    pub committed: usize,
    pub violations: Vec<SeqProgressViolation>,
}

impl SeqProgressReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Run every workload with a sequential schedule and demand commits across
/// the board. The memory model configuration is taken care of internally —
/// progress is model-independent.
pub fn check_sequential_progress<A: TmAlgorithm + 'static>(
    workloads: &[Workload],
    budget: u64,
) -> SeqProgressReport {
    let mut report = SeqProgressReport::default();
    for (wi, workload) in workloads.iter().enumerate() {
        if let Err(e) = workload.validate() {
            report.violations.push(SeqProgressViolation {
                workload: wi,
                process: None,
                txn: None,
                reason: format!("invalid workload: {e}"),
            });
            continue;
        }
        let mem_config = MemoryConfig {
            objects: Vec::new(),
            models: MemoryConfig::all_models(),
            dsm_owner: Default::default(),
        };
        let mut sim = match simulation_for_workload::<A>(workload, mem_config, Some(ProcessId(0))) {
            Ok(sim) => sim,
            Err(e) => {
                report.violations.push(SeqProgressViolation {
                    workload: wi,
                    process: None,
                    txn: None,
                    reason: format!("setup failed: {e}"),
                });
                continue;
            }
        };
        // One process at a time, start to finish: no two transactions ever
        // overlap, so every transaction runs solo.
        let mut run_failed = false;
        for ps in &workload.processes {
            match sim.run_until_done(ps.process, budget) {
                Ok(()) => {}
                Err(SimError::BudgetExhausted { .. }) => {
                    report.violations.push(SeqProgressViolation {
                        workload: wi,
                        process: Some(ps.process),
                        txn: None,
                        reason: format!("step budget of {budget} exhausted in a solo run"),
                    });
                    run_failed = true;
                    break;
                }
                Err(e) => {
                    report.violations.push(SeqProgressViolation {
                        workload: wi,
                        process: Some(ps.process),
                        txn: None,
                        reason: format!("solo run failed: {e}"),
                    });
                    run_failed = true;
                    break;
                }
            }
        }
        if run_failed {
            continue;
        }
        let execution = sim.execution();
        let h = match derive_history(&execution) {
            Ok(h) => h,
            Err(e) => {
                report.violations.push(SeqProgressViolation {
                    workload: wi,
                    process: None,
                    txn: None,
                    reason: format!("malformed history: {e}"),
                });
                continue;
            }
        };
        for view in h.views() {
            if view.committed() {
                report.committed += 1;
            } else {
                report.violations.push(SeqProgressViolation {
                    workload: wi,
                    process: view.process,
                    txn: Some(view.txn),
                    reason: format!(
                        "transaction ran solo but finished {:?} instead of committing",
                        view.status
                    ),
                });
            }
        }
    }
    report
}
