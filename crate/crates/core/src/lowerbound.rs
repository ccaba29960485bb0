//! Adversarial execution families that exhibit the inherent cost of
//! validating a growing read set.
//!
//! The core scenario is a chain: one long-running reader opens t-objects
//! `X_1 … X_i` one at a time, and right before the reader's k-th read a
//! dedicated writer commits a fresh value into `X_k`. Every fragment runs
//! with the scheduler to itself. In the plain chain the k-th read must
//! return the fresh value (the writer committed before it and nothing
//! conflicts). In the *invalidated* chain a late writer overwrites an
//! earlier object `X_l` after the reader saw it; the final read is then
//! forbidden from returning the fresh value of `X_i` — doing so would leave
//! the reader with an unserializable view — so a correct algorithm returns
//! the old value or aborts.
//!
//! A consistency-checking reader pays for this: the [`measure`] helpers pin
//! the per-read step and footprint growth against their analytic floors —
//! total read steps at least m(m−1)/2, and in the worst case over `l` at
//! least m−1 distinct base objects touched by the final read plus commit.

use crate::ids::{BaseObjectId, ProcessId, TObjectId, TxnId};
use crate::sim::event::{verify_replay, Event, Execution, RmwEvent};
use crate::sim::memory::{MemError, Memory, MemoryConfig};
use crate::sim::primitive::is_nontrivial;
use crate::sim::sim::{SimError, Simulation};
use crate::tm::history::{derive_history, step_contention_free, ScfScope};
use crate::tm::ops::{TOpCall, TOpOutcome};
use crate::tm::{ScriptDriver, TmAlgorithm, TxnScript};
use crate::value::Value;
use serde::Serialize;
use std::collections::BTreeSet;

/// The reader's transaction id; writers use small ids, the invalidating
/// writer a dedicated one.
const READER_TXN: TxnId = TxnId(1_000_000);
const INVALIDATOR_TXN: TxnId = TxnId(2_000_000);
const READER_PROCESS: ProcessId = ProcessId(0);
const INVALIDATOR_PROCESS: ProcessId = ProcessId(999);

/// Fresh value committed into `X_k` by the k-th chain writer.
pub fn fresh_value(k: usize) -> Value {
    Value::Int(1000 + k as i64)
}

/// Value the invalidating writer puts into `X_l`.
pub fn invalidating_value(l: usize) -> Value {
    Value::Int(2000 + l as i64)
}

fn initial_value() -> Value {
    Value::Int(0)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChainError {
    #[error("chain parameters invalid: {0}")]
    BadParams(String),
    #[error("memory setup failed: {0}")]
    Setup(String),
    #[error("simulation failed while driving {fragment}: {error}")]
    Fragment { fragment: String, error: String },
    #[error("writer {k} of the chain finished without committing")]
    WriterDidNotCommit { k: String },
    #[error("read {k} of the chain returned {got:?}, expected the fresh value {expected:?}")]
    StaleRead {
        k: usize,
        got: TOpOutcome,
        expected: Value,
    },
    #[error(
        "final read returned the fresh value it must not see; \
         opacity checker confirms violation: {opacity_violated}"
    )]
    ForbiddenFreshValue { opacity_violated: bool },
    #[error("expected the final read to {expected:?}, observed {got:?}")]
    ExpectationMismatch { expected: ReadFate, got: ReadFate },
    #[error(
        "invalidating writer and final writer contend on base objects {objects:?}, \
         but their footprints must be disjoint"
    )]
    WritersContend { objects: BTreeSet<BaseObjectId> },
    #[error("execution fails replay verification: {0}")]
    Replay(String),
    #[error("fragments are not step contention-free")]
    NotStepContentionFree,
}

impl From<MemError> for ChainError {
    fn from(e: MemError) -> Self {
        ChainError::Setup(e.to_string())
    }
}

/// How the final read of an invalidated chain ended.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadFate {
    /// Returned the pre-invalidation value.
    OldValue,
    /// The read aborted the reader.
    Abort,
    /// Returned the fresh value — forbidden in an invalidated chain.
    FreshValue,
}

/// A finished chain run plus accessors for per-operation cost extraction.
#[derive(Clone, Debug)]
pub struct ChainRun {
    pub execution: Execution,
    pub reader: TxnId,
    /// Outcome of each driven reader operation, in operation order.
    pub outcomes: Vec<TOpOutcome>,
}

impl ChainRun {
    /// Primitive events the reader performed inside operation `top`.
    pub fn reader_op_events(&self, top: u32) -> Vec<&RmwEvent> {
        self.execution
            .rmw_events()
            .filter(|e| e.txn == Some(self.reader) && e.top == Some(top))
            .collect()
    }

    pub fn op_steps(&self, top: u32) -> u64 {
        self.reader_op_events(top).len() as u64
    }

    /// Distinct base objects touched in operation `top`; trivial accesses
    /// count.
    pub fn op_objects(&self, top: u32) -> BTreeSet<BaseObjectId> {
        self.reader_op_events(top)
            .into_iter()
            .map(|e| e.object)
            .collect()
    }

    fn txn_events(&self, txn: TxnId) -> Vec<&RmwEvent> {
        self.execution
            .rmw_events()
            .filter(|e| e.txn == Some(txn))
            .collect()
    }
}

struct ChainOptions {
    /// Number of reads the reader performs (the chain length).
    reads: usize,
    /// `Some(l)`: before the final writer, an extra writer overwrites `X_l`.
    invalidate: Option<usize>,
    /// Drive the reader's commit after the final read (if still live).
    commit: bool,
}

/// Drive the chain fragment by fragment, each solo.
fn run_chain<A: TmAlgorithm + 'static>(opts: &ChainOptions) -> Result<ChainRun, ChainError> {
    let i = opts.reads;
    if i < 1 {
        return Err(ChainError::BadParams("need at least one read".into()));
    }
    if let Some(l) = opts.invalidate {
        if l < 1 || l >= i {
            return Err(ChainError::BadParams(format!(
                "invalidated object index {l} must satisfy 1 <= l < {i}"
            )));
        }
    }

    let tobjects: Vec<(TObjectId, Value)> = (1..=i)
        .map(|k| (TObjectId(k as u32), initial_value()))
        .collect();
    let mut mem = Memory::new(MemoryConfig {
        objects: Vec::new(),
        models: MemoryConfig::all_models(),
        dsm_owner: Default::default(),
    })?;
    let tm = A::setup(&mut mem, &tobjects, Some(READER_PROCESS))?;
    let mut sim = Simulation::new(mem);

    let mut reader_ops: Vec<TOpCall> = (1..=i)
        .map(|k| TOpCall::read(TObjectId(k as u32)))
        .collect();
    if opts.commit {
        reader_ops.push(TOpCall::TryCommit);
    }
    sim.add_machine(
        READER_PROCESS,
        Box::new(ScriptDriver::new(
            tm.clone(),
            READER_PROCESS,
            vec![TxnScript {
                txn: READER_TXN,
                ops: reader_ops,
            }],
        )),
    );
    for k in 1..=i {
        sim.add_machine(
            ProcessId(k as u32),
            Box::new(ScriptDriver::new(
                tm.clone(),
                ProcessId(k as u32),
                vec![TxnScript {
                    txn: TxnId(k as u64),
                    ops: vec![
                        TOpCall::write(TObjectId(k as u32), fresh_value(k)),
                        TOpCall::TryCommit,
                    ],
                }],
            )),
        );
    }
    if let Some(l) = opts.invalidate {
        sim.add_machine(
            INVALIDATOR_PROCESS,
            Box::new(ScriptDriver::new(
                tm.clone(),
                INVALIDATOR_PROCESS,
                vec![TxnScript {
                    txn: INVALIDATOR_TXN,
                    ops: vec![
                        TOpCall::write(TObjectId(l as u32), invalidating_value(l)),
                        TOpCall::TryCommit,
                    ],
                }],
            )),
        );
    }

    const BUDGET: u64 = 100_000;
    let fragment = |what: &str, e: SimError| ChainError::Fragment {
        fragment: what.to_string(),
        error: e.to_string(),
    };

    let mut outcomes = Vec::new();
    let drive_writer =
        |sim: &mut Simulation, p: ProcessId, txn: TxnId, what: &str| -> Result<(), ChainError> {
            sim.run_until_done(p, BUDGET)
                .map_err(|e| fragment(what, e))?;
            let committed = sim.execution().events.iter().any(|ev| {
                matches!(ev, Event::Resp { txn: t, outcome, .. }
                    if *t == txn && *outcome == TOpOutcome::Committed)
            });
            if committed {
                Ok(())
            } else {
                Err(ChainError::WriterDidNotCommit { k: what.into() })
            }
        };

    // Fragments 1..i-1 (or 1..i when not invalidating the order): writer k
    // commits, then the reader's k-th read runs.
    for k in 1..i {
        drive_writer(
            &mut sim,
            ProcessId(k as u32),
            TxnId(k as u64),
            &format!("writer {k}"),
        )?;
        let outcome = sim
            .run_until_response(READER_PROCESS, READER_TXN, (k - 1) as u32, BUDGET)
            .map_err(|e| fragment(&format!("read {k}"), e))?;
        if outcome != TOpOutcome::Value(fresh_value(k)) {
            return Err(ChainError::StaleRead {
                k,
                got: outcome,
                expected: fresh_value(k),
            });
        }
        outcomes.push(outcome);
    }

    if opts.invalidate.is_some() {
        drive_writer(
            &mut sim,
            INVALIDATOR_PROCESS,
            INVALIDATOR_TXN,
            "invalidating writer",
        )?;
    }
    drive_writer(
        &mut sim,
        ProcessId(i as u32),
        TxnId(i as u64),
        &format!("writer {i}"),
    )?;

    let last = sim
        .run_until_response(READER_PROCESS, READER_TXN, (i - 1) as u32, BUDGET)
        .map_err(|e| fragment(&format!("read {i}"), e))?;
    let last_terminal = last.is_terminal();
    outcomes.push(last);

    if opts.commit && !last_terminal {
        let c = sim
            .run_until_response(READER_PROCESS, READER_TXN, i as u32, BUDGET)
            .map_err(|e| fragment("reader commit", e))?;
        outcomes.push(c);
    }

    let execution = sim.execution();
    verify_replay(&execution).map_err(|e| ChainError::Replay(e.to_string()))?;
    // Every fragment ran solo, so each transactional operation's steps must
    // be contiguous in the log.
    if let Ok(h) = derive_history(&execution) {
        for view in h.views() {
            for top in 0..view.ops.len() as u32 {
                if !step_contention_free(&execution, &ScfScope::Top(view.txn, top)) {
                    return Err(ChainError::NotStepContentionFree);
                }
            }
        }
    }

    Ok(ChainRun {
        execution,
        reader: READER_TXN,
        outcomes,
    })
}

/// Per-read cost figures of a plain chain of length `i`. The i-th read is
/// required to return the value committed immediately before it.
#[derive(Clone, Debug)]
pub struct FreshReadChain {
    pub run: ChainRun,
    pub i: usize,
}

/// Build the plain chain: i committed writers interleaved with the
/// reader's i reads, each read returning the value committed just before.
pub fn build_growing_read_chain<A: TmAlgorithm + 'static>(
    i: usize,
) -> Result<FreshReadChain, ChainError> {
    let run = run_chain::<A>(&ChainOptions {
        reads: i,
        invalidate: None,
        commit: false,
    })?;
    Ok(FreshReadChain { run, i })
}

/// Result of an invalidated chain: how the final read fared, and proof
/// that the two late writers never touched a common base object.
#[derive(Clone, Debug)]
pub struct InvalidatedReadChain {
    pub run: ChainRun,
    pub i: usize,
    pub l: usize,
    pub fate: ReadFate,
}

fn classify_final_read(outcome: &TOpOutcome, i: usize) -> ReadFate {
    match outcome {
        TOpOutcome::Aborted => ReadFate::Abort,
        TOpOutcome::Value(v) if *v == fresh_value(i) => ReadFate::FreshValue,
        _ => ReadFate::OldValue,
    }
}

/// Cross-check a forbidden fresh-value outcome against the opacity
/// decider (diagnostic; the bound is widened to fit the chain).
fn opacity_rejects(execution: &Execution) -> bool {
    let Ok(h) = derive_history(execution) else {
        return false;
    };
    let bound = h.txns().len();
    matches!(crate::check::serialize::check_opacity(&h, bound), Ok(None))
}

/// Build the invalidated chain: like the plain chain of length `i`, but an
/// extra writer overwrites `X_l` (`1 <= l < i`) right before the final
/// writer. The final read must not return the final writer's fresh value.
/// `expect` optionally pins which of the two allowed fates must occur.
pub fn build_invalidated_read_chain<A: TmAlgorithm + 'static>(
    i: usize,
    l: usize,
    expect: Option<ReadFate>,
) -> Result<InvalidatedReadChain, ChainError> {
    let run = run_chain::<A>(&ChainOptions {
        reads: i,
        invalidate: Some(l),
        commit: false,
    })?;

    // The two late writers must have disjoint memory footprints: no base
    // object accessed by both with a nontrivial primitive involved.
    let beta = run.txn_events(INVALIDATOR_TXN);
    let rho = run.txn_events(TxnId(i as u64));
    let mut contended = BTreeSet::new();
    for a in &beta {
        for b in &rho {
            if a.object == b.object && (is_nontrivial(a.primitive) || is_nontrivial(b.primitive)) {
                contended.insert(a.object);
            }
        }
    }
    if !contended.is_empty() {
        return Err(ChainError::WritersContend { objects: contended });
    }

    let fate = classify_final_read(run.outcomes.last().expect("final read driven"), i);
    if fate == ReadFate::FreshValue {
        return Err(ChainError::ForbiddenFreshValue {
            opacity_violated: opacity_rejects(&run.execution),
        });
    }
    if let Some(expected) = expect {
        if fate != expected {
            return Err(ChainError::ExpectationMismatch {
                expected,
                got: fate,
            });
        }
    }
    Ok(InvalidatedReadChain { run, i, l, fate })
}

/// One row of the read-cost table: the i-th read of a fresh chain of
/// length i.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
pub struct CostRow {
    pub i: usize,
    pub steps: u64,
    pub distinct_objects: usize,
    /// Floor on distinct objects for this read.
    pub analytic_bound: usize,
    pub pass: bool,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct QuadraticReport {
    pub m: usize,
    pub rows: Vec<CostRow>,
    pub total_steps: u64,
    /// Floor on total steps across all reads: m(m−1)/2.
    pub total_bound: u64,
    pub pass: bool,
}

/// For each i ≤ m, build the fresh chain of length i and record the cost
/// of its i-th read. Requires m ≥ 2.
pub fn measure_read_validation_cost<A: TmAlgorithm + 'static>(
    m: usize,
) -> Result<QuadraticReport, ChainError> {
    if m < 2 {
        return Err(ChainError::BadParams(format!(
            "chain length m = {m} must be at least 2"
        )));
    }
    let mut rows = Vec::new();
    let mut total_steps = 0u64;
    for i in 1..=m {
        let chain = build_growing_read_chain::<A>(i)?;
        let top = (i - 1) as u32;
        let steps = chain.run.op_steps(top);
        let distinct = chain.run.op_objects(top).len();
        let analytic = i - 1;
        total_steps += steps;
        rows.push(CostRow {
            i,
            steps,
            distinct_objects: distinct,
            analytic_bound: analytic,
            pass: distinct >= analytic,
        });
    }
    let total_bound = (m * (m - 1) / 2) as u64;
    let pass = rows.iter().all(|r| r.pass) && total_steps >= total_bound;
    Ok(QuadraticReport {
        m,
        rows,
        total_steps,
        total_bound,
        pass,
    })
}

/// One row of the footprint table: the invalidated chain with invalidation
/// at `l`, measuring the reader's final read plus commit attempt.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
pub struct FootprintRow {
    pub l: usize,
    pub fate: ReadFate,
    /// `Some(true)` iff the reader's commit was driven and committed.
    pub tryc_committed: Option<bool>,
    /// Distinct base objects touched by the final read plus commit.
    pub distinct_objects: usize,
    /// Fresh value returned yet the commit went through anyway.
    pub forbidden_commit: bool,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct SpaceReport {
    pub m: usize,
    pub rows: Vec<FootprintRow>,
    pub max_distinct: usize,
    /// Floor on the worst-case footprint: m−1.
    pub analytic_bound: usize,
    pub pass: bool,
}

/// For each l < m, run the invalidated chain of length m and measure how
/// many distinct base objects the reader's final read plus commit touch.
/// The worst case over l must reach m−1. Requires m ≥ 2.
pub fn measure_final_read_footprint<A: TmAlgorithm + 'static>(
    m: usize,
) -> Result<SpaceReport, ChainError> {
    if m < 2 {
        return Err(ChainError::BadParams(format!(
            "chain length m = {m} must be at least 2"
        )));
    }
    let mut rows = Vec::new();
    let mut max_distinct = 0usize;
    for l in 1..m {
        let run = run_chain::<A>(&ChainOptions {
            reads: m,
            invalidate: Some(l),
            commit: true,
        })?;
        let read_top = (m - 1) as u32;
        let commit_top = m as u32;
        let mut objects = run.op_objects(read_top);
        objects.extend(run.op_objects(commit_top));
        let distinct = objects.len();
        max_distinct = max_distinct.max(distinct);

        let read_outcome = &run.outcomes[m - 1];
        let fate = classify_final_read(read_outcome, m);
        let tryc_committed = run.outcomes.get(m).map(|o| *o == TOpOutcome::Committed);
        let forbidden_commit = fate == ReadFate::FreshValue && tryc_committed == Some(true);
        rows.push(FootprintRow {
            l,
            fate,
            tryc_committed,
            distinct_objects: distinct,
            forbidden_commit,
        });
    }
    let analytic_bound = m - 1;
    let pass = max_distinct >= analytic_bound && rows.iter().all(|r| !r.forbidden_commit);
    Ok(SpaceReport {
        m,
        rows,
        max_distinct,
        analytic_bound,
        pass,
    })
}
