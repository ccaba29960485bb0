//! End-to-end acceptance suite: one test per shipped guarantee.
//!
//! Each test is self-contained and prints a one-line summary; the test name
//! states the guarantee it locks in. The suite drives the public API and the
//! installed `tmlab` binary exactly the way a user would:
//!
//! 1. per-read validation cost of the versioned-lock TM grows quadratically
//!    over chains (measured through the CLI),
//! 2. the final read plus commit of an invalidated chain touches linearly
//!    many distinct base objects (measured through the CLI),
//! 3. fresh chains return exactly the latest committed value and the traces
//!    are opaque,
//! 4. invalidated chains never return the overwritten fresh value, and a
//!    hand-built trace that does is rejected by the opacity decider,
//! 5. ten thousand seeded random schedules plus every interleaving of
//!    two-transaction scenarios uphold all advertised properties of both TMs,
//! 6. the strict-serializability decider matches a hand-labeled corpus and
//!    an independent brute-force oracle,
//! 7. the TM-backed lock is mutually exclusive under exhaustive exploration
//!    and deadlock-free under fair scheduling,
//! 8. per-passage cache-coherent RMR cost of the lock is bounded by a
//!    constant independent of the process count, and spinning on a local
//!    gate is free under distributed memory,
//! 9. the RMR ledger matches hand-computed charges on ten scenarios under
//!    all three memory models.

use std::collections::{BTreeMap, BTreeSet};
use std::process::Command;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde_json::json;
use tmlab::check::dap::check_weak_dap;
use tmlab::check::invisible::{check_invisible_reads, ReadVisibilityScope};
use tmlab::check::progress::{check_progressiveness, check_strong_progressiveness};
use tmlab::check::serialize::{
    bruteforce_strict_serializability, check_opacity, check_strict_serializability,
};
use tmlab::ids::{ProcessId, TObjectId, TxnId};
use tmlab::lowerbound::{
    build_growing_read_chain, build_invalidated_read_chain, fresh_value, ReadFate,
};
use tmlab::mutex::{
    analyze_mutex_execution, build_mutex_machines, build_mutex_memory, check_deadlock_freedom,
    explore_mutual_exclusion, run_mutex_experiment, MutexRunReport,
};
use tmlab::sim::event::{Execution, ExecutionMeta, MarkerKind};
use tmlab::sim::explore::{explore_paths, MiniMem};
use tmlab::sim::memory::{Memory, MemoryConfig};
use tmlab::sim::primitive::PrimitiveOp;
use tmlab::sim::rmr::{EventTag, MemModel, RmrCost};
use tmlab::sim::schedule::Schedule;
use tmlab::sim::sim::Simulation;
use tmlab::stm::{OccTm, SingleObjectTm};
use tmlab::tm::gen::{random_workload, GenParams};
use tmlab::tm::history::{derive_history, History};
use tmlab::tm::ops::{TOpCall, TOpOutcome};
use tmlab::tm::{simulation_for_workload, ScriptDriver, TmAlgorithm, TxnScript};
use tmlab::value::Value;

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

/// Run the installed CLI binary and return (stdout, exit code).
fn tmlab_cli(args: &[&str]) -> (String, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_tmlab"))
        .args(args)
        .output()
        .expect("spawn tmlab binary");
    let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
    (stdout, out.status.code().unwrap_or(-1))
}

/// Comma-separated rows of a CSV report, ignoring `key = value` echo lines,
/// comments, and blank lines.
fn csv_rows(output: &str) -> Vec<Vec<String>> {
    output
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#') && l.contains(','))
        .map(|l| l.split(',').map(|c| c.trim().to_string()).collect())
        .collect()
}

fn all_models_config() -> MemoryConfig {
    MemoryConfig {
        objects: Vec::new(),
        models: MemoryConfig::all_models(),
        dsm_owner: BTreeMap::new(),
    }
}

/// Fan `0..total` out over worker threads; returns collected failure
/// messages (capped per worker so a broken run does not flood the log).
fn run_sharded(total: u64, f: impl Fn(u64) -> Result<(), String> + Sync) -> Vec<String> {
    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(4)
        .min(16) as u64;
    let failures: Mutex<Vec<String>> = Mutex::new(Vec::new());
    std::thread::scope(|scope| {
        for w in 0..workers {
            let f = &f;
            let failures = &failures;
            scope.spawn(move || {
                let mut local = Vec::new();
                let mut seed = w;
                while seed < total && local.len() < 4 {
                    if let Err(e) = f(seed) {
                        local.push(e);
                    }
                    seed += workers;
                }
                failures.lock().unwrap().extend(local);
            });
        }
    });
    failures.into_inner().unwrap()
}

// History-row builders for the hand-written corpora (the JSON import format
// of the `check` subcommand).

fn row_write(txn: u64, x: u32, v: i64, inv: u64, resp: u64) -> serde_json::Value {
    json!({"txn": txn, "kind": "write", "object": x, "arg": {"int": v},
           "invSeq": inv, "respSeq": resp, "outcome": "ok"})
}

fn row_read(txn: u64, x: u32, v: i64, inv: u64, resp: u64) -> serde_json::Value {
    json!({"txn": txn, "kind": "read", "object": x,
           "invSeq": inv, "respSeq": resp, "outcome": {"value": {"int": v}}})
}

fn row_commit(txn: u64, inv: u64, resp: u64) -> serde_json::Value {
    json!({"txn": txn, "kind": "try_commit", "invSeq": inv, "respSeq": resp,
           "outcome": "committed"})
}

fn row_abort(txn: u64, inv: u64, resp: u64) -> serde_json::Value {
    json!({"txn": txn, "kind": "try_commit", "invSeq": inv, "respSeq": resp,
           "outcome": "aborted"})
}

/// A commit attempt that never got a response: the transaction is left
/// commit-pending and the checker must consider both completions.
fn row_commit_pending(txn: u64, inv: u64) -> serde_json::Value {
    json!({"txn": txn, "kind": "try_commit", "invSeq": inv})
}

fn import(rows: &[serde_json::Value]) -> History {
    History::import_json(&serde_json::Value::Array(rows.to_vec()), BTreeMap::new())
        .expect("hand-written history imports")
}

/// The five-transaction chain trace: writers commit fresh values into
/// X1..X3, the reader snapshots X1 and X2, an extra writer overwrites X1,
/// the last writer commits X3, and the reader's final read of X3 returns
/// `final_read` before the reader commits. With the fresh value 1003 the
/// reader is forced after the overwrite yet read the overwritten X1 — no
/// serialization exists. With the initial value 0 the reader slots in
/// before the overwrite.
fn chain_trace(final_read: i64) -> Vec<serde_json::Value> {
    vec![
        row_write(1, 1, 1001, 1, 2),
        row_commit(1, 3, 4),
        row_write(2, 2, 1002, 5, 6),
        row_commit(2, 7, 8),
        row_read(10, 1, 1001, 9, 10),
        row_read(10, 2, 1002, 11, 12),
        row_write(100, 1, 2001, 13, 14),
        row_commit(100, 15, 16),
        row_write(3, 3, 1003, 17, 18),
        row_commit(3, 19, 20),
        row_read(10, 3, final_read, 21, 22),
        row_commit(10, 23, 24),
    ]
}

// ---------------------------------------------------------------------------
// 1. Quadratic validation cost
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_per_read_validation_cost_grows_quadratically() {
    for (m, total_bound) in [(2u64, 1u64), (4, 6), (6, 15), (8, 28)] {
        let started = Instant::now();
        let (out, code) = tmlab_cli(&[
            "lowerbound",
            "quadratic",
            "--tm",
            "ref",
            "--m",
            &m.to_string(),
        ]);
        let elapsed = started.elapsed();
        assert_eq!(code, 0, "m={m}: CLI run must pass\n{out}");
        assert!(
            elapsed < Duration::from_secs(5),
            "m={m}: run took {elapsed:?}, budget is 5s"
        );

        let rows = csv_rows(&out);
        let data: Vec<&Vec<String>> = rows
            .iter()
            .filter(|r| r[0].parse::<u64>().is_ok())
            .collect();
        assert_eq!(data.len(), m as usize, "m={m}: one row per read\n{out}");
        for row in &data {
            let i: u64 = row[0].parse().unwrap();
            let distinct: u64 = row[2].parse().unwrap();
            let bound: u64 = row[3].parse().unwrap();
            assert_eq!(bound, i - 1, "m={m}: echoed floor for read {i}");
            assert!(
                distinct >= i - 1,
                "m={m}: read {i} touched {distinct} distinct base objects, needs at least {}",
                i - 1
            );
            assert_eq!(row[4], "true", "m={m}: read {i} row must pass\n{out}");
        }
        let total = rows
            .iter()
            .find(|r| r[0] == "total")
            .unwrap_or_else(|| panic!("m={m}: total row present\n{out}"));
        let total_steps: u64 = total[1].parse().unwrap();
        assert!(
            total_steps >= total_bound,
            "m={m}: {total_steps} total read steps, needs at least {total_bound}"
        );
        assert_eq!(total[4], "true", "m={m}: total row must pass\n{out}");
        println!(
            "criterion 1: m={m} total read steps {total_steps} >= {total_bound} in {elapsed:?}"
        );
    }
}

// ---------------------------------------------------------------------------
// 2. Linear final-read footprint
// ---------------------------------------------------------------------------

#[test]
fn criterion_2_final_read_footprint_grows_linearly() {
    for m in [2u64, 4, 8] {
        let (out, code) = tmlab_cli(&["lowerbound", "space", "--tm", "ref", "--m", &m.to_string()]);
        assert_eq!(code, 0, "m={m}: CLI run must pass\n{out}");

        let rows = csv_rows(&out);
        let data: Vec<&Vec<String>> = rows
            .iter()
            .filter(|r| r[0].parse::<u64>().is_ok())
            .collect();
        assert_eq!(
            data.len(),
            (m - 1) as usize,
            "m={m}: one row per overwrite slot"
        );
        for row in &data {
            // Columns: l, fate, trycCommitted, distinctObjects, forbiddenCommit.
            assert_eq!(
                row[4], "false",
                "m={m}, l={}: fresh value must never commit\n{out}",
                row[0]
            );
            if row[1] == "fresh_value" {
                assert_ne!(
                    row[2], "true",
                    "m={m}, l={}: a fresh final read must be followed by an abort",
                    row[0]
                );
            }
        }
        let max = rows
            .iter()
            .find(|r| r[0] == "max")
            .unwrap_or_else(|| panic!("m={m}: max row present\n{out}"));
        let max_distinct: u64 = max[3].parse().unwrap();
        assert!(
            max_distinct >= m - 1,
            "m={m}: worst final read + commit touched {max_distinct} distinct base objects, needs {}",
            m - 1
        );
        assert_eq!(max[4], "true", "m={m}: max row must pass\n{out}");
        println!(
            "criterion 2: m={m} worst footprint {max_distinct} distinct base objects >= {}",
            m - 1
        );
    }
}

// ---------------------------------------------------------------------------
// 3. Fresh chains read the latest committed value; traces are opaque
// ---------------------------------------------------------------------------

#[test]
fn criterion_3_fresh_chain_reads_return_the_latest_committed_value() {
    for i in 1..=8usize {
        let chain = build_growing_read_chain::<OccTm>(i).expect("chain builds");
        assert_eq!(chain.run.outcomes.len(), i, "one outcome per read");
        for k in 1..=i {
            assert_eq!(
                chain.run.outcomes[k - 1],
                TOpOutcome::Value(fresh_value(k)),
                "chain {i}: read {k} must return exactly the value committed just before it"
            );
        }
        let h = derive_history(&chain.run.execution).expect("trace projects to a history");
        assert_eq!(h.txns().len(), i + 1, "chain {i}: writers plus the reader");
        let witness = check_opacity(&h, h.txns().len())
            .expect("within bound")
            .unwrap_or_else(|| panic!("chain {i}: trace must be opaque"));
        assert_eq!(witness.order.len(), h.txns().len());
    }
    println!("criterion 3: chains 1..=8 returned the latest committed value; all traces opaque");
}

// ---------------------------------------------------------------------------
// 4. Invalidated chains never return the fresh value
// ---------------------------------------------------------------------------

#[test]
fn criterion_4_invalidated_chains_never_return_the_fresh_value() {
    let mut fates = Vec::new();
    for i in 2..=5usize {
        for l in 1..i {
            let chain = build_invalidated_read_chain::<OccTm>(i, l, None)
                .unwrap_or_else(|e| panic!("chain i={i}, l={l}: {e:?}"));
            assert!(
                matches!(chain.fate, ReadFate::OldValue | ReadFate::Abort),
                "i={i}, l={l}: final read must return the old value or abort, got {:?}",
                chain.fate
            );
            let h = derive_history(&chain.run.execution).expect("trace projects to a history");
            assert!(
                check_opacity(&h, h.txns().len())
                    .expect("within bound")
                    .is_some(),
                "i={i}, l={l}: trace must be opaque"
            );
            fates.push((i, l, chain.fate));
        }
    }

    // A hand-built trace in which the final read does return the fresh
    // value must be rejected: the witness search exhausts with no order.
    let forbidden = import(&chain_trace(1003));
    assert!(
        check_opacity(&forbidden, forbidden.txns().len())
            .expect("within bound")
            .is_none(),
        "fresh final read after an overwrite must not be opaque"
    );
    // Control: the same trace with the old value is fine.
    let allowed = import(&chain_trace(0));
    assert!(
        check_opacity(&allowed, allowed.txns().len())
            .expect("within bound")
            .is_some(),
        "old final read after an overwrite is opaque"
    );
    println!(
        "criterion 4: {} invalidated chains all returned old value or abort; forbidden trace rejected",
        fates.len()
    );
}

// ---------------------------------------------------------------------------
// 5. Random schedules and exhaustive interleavings
// ---------------------------------------------------------------------------

/// One seeded random run of the versioned-lock TM, checked against every
/// property it advertises.
fn occ_random_run(seed: u64) -> Result<(), String> {
    let params = match seed % 3 {
        0 => GenParams {
            processes: 2,
            txns_per_process: 2,
            ops_per_txn: 3,
            tobjects: 2,
        },
        1 => GenParams {
            processes: 3,
            txns_per_process: 1,
            ops_per_txn: 2,
            tobjects: 2,
        },
        _ => GenParams {
            processes: 2,
            txns_per_process: 2,
            ops_per_txn: 2,
            tobjects: 3,
        },
    };
    let workload = random_workload(&params, seed);
    let mut sim =
        simulation_for_workload::<OccTm>(&workload, all_models_config(), Some(ProcessId(0)))
            .map_err(|e| format!("seed {seed}: setup: {e}"))?;
    let procs = sim.processes();
    let summary = sim
        .run(
            &Schedule::Random {
                procs,
                seed: seed ^ 0x9E37_79B9_7F4A_7C15,
            },
            100_000,
        )
        .map_err(|e| format!("seed {seed}: run: {e}"))?;
    if !summary.completed {
        return Err(format!("seed {seed}: run did not finish in budget"));
    }
    let execution = sim.execution();
    let h = derive_history(&execution).map_err(|e| format!("seed {seed}: history: {e}"))?;
    if h.txns().len() > 5 {
        return Err(format!(
            "seed {seed}: {} transactions exceed the checked bound",
            h.txns().len()
        ));
    }
    if check_opacity(&h, 5)
        .map_err(|e| format!("seed {seed}: opacity refused: {e}"))?
        .is_none()
    {
        return Err(format!("seed {seed}: opacity violated"));
    }
    let prog = check_progressiveness(&h);
    if !prog.ok() {
        return Err(format!(
            "seed {seed}: progressiveness violated: {:?}",
            prog.violations
        ));
    }
    let dap = check_weak_dap(&execution).map_err(|e| format!("seed {seed}: dap: {e}"))?;
    if !dap.ok() {
        return Err(format!("seed {seed}: disjoint-access parallelism violated"));
    }
    let inv = check_invisible_reads(&execution, ReadVisibilityScope::Weak)
        .map_err(|e| format!("seed {seed}: invisible reads: {e}"))?;
    if !inv.ok() {
        return Err(format!(
            "seed {seed}: read visibility violated: {:?}",
            inv.violations
        ));
    }
    Ok(())
}

/// One seeded random run of the single-object TM, checked against strict
/// serializability and strong progressiveness.
fn single_random_run(seed: u64) -> Result<(), String> {
    let params = match seed % 2 {
        0 => GenParams {
            processes: 2,
            txns_per_process: 2,
            ops_per_txn: 3,
            tobjects: 1,
        },
        _ => GenParams {
            processes: 3,
            txns_per_process: 1,
            ops_per_txn: 2,
            tobjects: 1,
        },
    };
    let workload = random_workload(&params, seed);
    let mut sim = simulation_for_workload::<SingleObjectTm>(
        &workload,
        all_models_config(),
        Some(ProcessId(0)),
    )
    .map_err(|e| format!("seed {seed}: setup: {e}"))?;
    let procs = sim.processes();
    let summary = sim
        .run(
            &Schedule::Random {
                procs,
                seed: seed ^ 0xD1B5_4A32_D192_ED03,
            },
            100_000,
        )
        .map_err(|e| format!("seed {seed}: run: {e}"))?;
    if !summary.completed {
        return Err(format!("seed {seed}: run did not finish in budget"));
    }
    let h = derive_history(&sim.execution()).map_err(|e| format!("seed {seed}: history: {e}"))?;
    if check_strict_serializability(&h, h.txns().len().max(1))
        .map_err(|e| format!("seed {seed}: refused: {e}"))?
        .is_none()
    {
        return Err(format!("seed {seed}: strict serializability violated"));
    }
    let strong = check_strong_progressiveness(&h, 12)
        .map_err(|e| format!("seed {seed}: strong progress refused: {e}"))?;
    if !strong.ok() {
        return Err(format!("seed {seed}: strong progressiveness violated"));
    }
    Ok(())
}

/// Enumerate every interleaving of two scripted transactions over `tm` and
/// run `check` on each completed path. Returns (paths, failures).
fn exhaustive_two_txn<A: TmAlgorithm + 'static>(
    tobjects: &[(TObjectId, Value)],
    ops1: Vec<TOpCall>,
    ops2: Vec<TOpCall>,
    check: &dyn Fn(&Execution) -> Result<(), String>,
) -> (u64, Vec<String>) {
    let cfg = MemoryConfig {
        objects: Vec::new(),
        models: BTreeSet::new(),
        dsm_owner: BTreeMap::new(),
    };
    let mut mem = Memory::new(cfg).expect("empty memory");
    let tm = A::setup(&mut mem, tobjects, None).expect("TM installs");
    let mini = MiniMem::from_memory(&mem);
    let machines: BTreeMap<ProcessId, ScriptDriver<A>> = [
        (
            ProcessId(1),
            ScriptDriver::new(
                tm.clone(),
                ProcessId(1),
                vec![TxnScript {
                    txn: TxnId(1),
                    ops: ops1,
                }],
            ),
        ),
        (
            ProcessId(2),
            ScriptDriver::new(
                tm.clone(),
                ProcessId(2),
                vec![TxnScript {
                    txn: TxnId(2),
                    ops: ops2,
                }],
            ),
        ),
    ]
    .into_iter()
    .collect();
    let tobject_initial: BTreeMap<TObjectId, Value> = tobjects.iter().cloned().collect();
    let mut failures = Vec::new();
    let paths = explore_paths(&mini, &machines, &mut |events| {
        if failures.len() >= 4 {
            return;
        }
        let execution = Execution {
            meta: ExecutionMeta {
                tobject_initial: tobject_initial.clone(),
                ..ExecutionMeta::default()
            },
            events: events.to_vec(),
        };
        if let Err(e) = check(&execution) {
            failures.push(e);
        }
    });
    (paths, failures)
}

fn check_occ_path(execution: &Execution) -> Result<(), String> {
    let h = derive_history(execution).map_err(|e| format!("history: {e}"))?;
    if check_opacity(&h, 5).map_err(|e| e.to_string())?.is_none() {
        return Err("opacity violated".into());
    }
    if !check_progressiveness(&h).ok() {
        return Err("progressiveness violated".into());
    }
    if !check_weak_dap(execution).map_err(|e| e.to_string())?.ok() {
        return Err("disjoint-access parallelism violated".into());
    }
    if !check_invisible_reads(execution, ReadVisibilityScope::Weak)
        .map_err(|e| e.to_string())?
        .ok()
    {
        return Err("read visibility violated".into());
    }
    Ok(())
}

fn check_single_path(execution: &Execution) -> Result<(), String> {
    let h = derive_history(execution).map_err(|e| format!("history: {e}"))?;
    if check_strict_serializability(&h, 5)
        .map_err(|e| e.to_string())?
        .is_none()
    {
        return Err("strict serializability violated".into());
    }
    if !check_strong_progressiveness(&h, 12)
        .map_err(|e| e.to_string())?
        .ok()
    {
        return Err("strong progressiveness violated".into());
    }
    Ok(())
}

#[test]
fn criterion_5_random_and_exhaustive_schedules_uphold_all_properties() {
    const RUNS: u64 = 10_000;

    let occ_failures = run_sharded(RUNS, occ_random_run);
    assert!(
        occ_failures.is_empty(),
        "versioned-lock TM: {} of {RUNS} random runs violated a property; first: {}",
        occ_failures.len(),
        occ_failures[0]
    );
    let single_failures = run_sharded(RUNS, single_random_run);
    assert!(
        single_failures.is_empty(),
        "single-object TM: {} of {RUNS} random runs violated a property; first: {}",
        single_failures.len(),
        single_failures[0]
    );

    // Exhaustive interleavings of every two-transaction scenario shape:
    // read/read, read/write, and write/write on a shared object, plus
    // read/write and write/write on disjoint objects.
    let x0 = TObjectId(0);
    let x1 = TObjectId(1);
    let two = vec![(x0, Value::Int(0)), (x1, Value::Int(0))];
    let one = vec![(x0, Value::Int(0))];
    let r = |x| vec![TOpCall::read(x), TOpCall::TryCommit];
    let w = |x, v: i64| vec![TOpCall::write(x, v), TOpCall::TryCommit];

    let occ_scenarios: Vec<(&str, Vec<(TObjectId, Value)>, Vec<TOpCall>, Vec<TOpCall>)> = vec![
        ("read/read shared", two.clone(), r(x0), r(x0)),
        ("read/write shared", two.clone(), r(x0), w(x0, 7)),
        ("write/write shared", two.clone(), w(x0, 5), w(x0, 7)),
        ("read/write disjoint", two.clone(), r(x0), w(x1, 7)),
        ("write/write disjoint", two.clone(), w(x0, 5), w(x1, 7)),
    ];
    let mut total_paths = 0u64;
    for (name, tobjects, ops1, ops2) in occ_scenarios {
        let (paths, failures) = exhaustive_two_txn::<OccTm>(&tobjects, ops1, ops2, &check_occ_path);
        assert!(
            failures.is_empty(),
            "versioned-lock TM, {name}: {} interleavings failed; first: {}",
            failures.len(),
            failures[0]
        );
        assert!(
            paths > 100,
            "{name}: exploration must be nontrivial ({paths} paths)"
        );
        total_paths += paths;
    }

    let single_scenarios: Vec<(&str, Vec<TOpCall>, Vec<TOpCall>)> = vec![
        ("read/read", r(x0), r(x0)),
        ("read/write", r(x0), w(x0, 7)),
        ("write/write", w(x0, 5), w(x0, 7)),
    ];
    for (name, ops1, ops2) in single_scenarios {
        let (paths, failures) =
            exhaustive_two_txn::<SingleObjectTm>(&one, ops1, ops2, &check_single_path);
        assert!(
            failures.is_empty(),
            "single-object TM, {name}: {} interleavings failed; first: {}",
            failures.len(),
            failures[0]
        );
        assert!(
            paths > 100,
            "{name}: exploration must be nontrivial ({paths} paths)"
        );
        total_paths += paths;
    }

    println!(
        "criterion 5: {RUNS}+{RUNS} random runs clean; {total_paths} exhaustive interleavings clean"
    );
}

// ---------------------------------------------------------------------------
// 6. Hand-labeled corpus and oracle agreement
// ---------------------------------------------------------------------------

/// The labeled corpus: (name, rows, strictly serializable?).
fn labeled_corpus() -> Vec<(&'static str, Vec<serde_json::Value>, bool)> {
    vec![
        ("empty history", vec![], true),
        (
            "solo committed writer",
            vec![row_write(1, 0, 5, 1, 2), row_commit(1, 3, 4)],
            true,
        ),
        (
            "solo aborted reader",
            vec![row_read(1, 0, 0, 1, 2), row_abort(1, 3, 4)],
            true,
        ),
        (
            "sequential fresh read",
            vec![
                row_write(1, 0, 5, 1, 2),
                row_commit(1, 3, 4),
                row_read(2, 0, 5, 5, 6),
                row_commit(2, 7, 8),
            ],
            true,
        ),
        (
            "sequential stale read",
            vec![
                row_write(1, 0, 5, 1, 2),
                row_commit(1, 3, 4),
                row_read(2, 0, 0, 5, 6),
                row_commit(2, 7, 8),
            ],
            false,
        ),
        (
            "write skew",
            vec![
                row_read(1, 0, 0, 1, 2),
                row_read(2, 0, 0, 3, 4),
                row_read(1, 1, 0, 5, 6),
                row_read(2, 1, 0, 7, 8),
                row_write(1, 0, 1, 9, 10),
                row_write(2, 1, 1, 11, 12),
                row_commit(1, 13, 14),
                row_commit(2, 15, 16),
            ],
            false,
        ),
        (
            "lost update",
            vec![
                row_read(1, 0, 0, 1, 2),
                row_read(2, 0, 0, 3, 4),
                row_write(1, 0, 1, 5, 6),
                row_write(2, 0, 2, 7, 8),
                row_commit(1, 9, 10),
                row_commit(2, 11, 12),
            ],
            false,
        ),
        (
            "disjoint concurrent writers",
            vec![
                row_write(1, 0, 1, 1, 2),
                row_write(2, 1, 2, 3, 4),
                row_commit(1, 5, 6),
                row_commit(2, 7, 8),
            ],
            true,
        ),
        (
            "late reader with one stale read",
            vec![
                row_write(1, 0, 1, 1, 2),
                row_commit(1, 3, 4),
                row_write(2, 1, 2, 5, 6),
                row_commit(2, 7, 8),
                row_read(3, 0, 1, 9, 10),
                row_read(3, 1, 0, 11, 12),
                row_commit(3, 13, 14),
            ],
            false,
        ),
        (
            "aborted write stays invisible",
            vec![
                row_write(1, 0, 7, 1, 2),
                row_abort(1, 3, 4),
                row_read(2, 0, 0, 5, 6),
                row_commit(2, 7, 8),
            ],
            true,
        ),
        (
            "aborted write observed",
            vec![
                row_write(1, 0, 7, 1, 2),
                row_abort(1, 3, 4),
                row_read(2, 0, 7, 5, 6),
                row_commit(2, 7, 8),
            ],
            false,
        ),
        (
            "transaction reads its own write",
            vec![
                row_write(1, 0, 3, 1, 2),
                row_read(1, 0, 3, 3, 4),
                row_commit(1, 5, 6),
            ],
            true,
        ),
        (
            "transaction misses its own write",
            vec![
                row_write(1, 0, 3, 1, 2),
                row_read(1, 0, 0, 3, 4),
                row_commit(1, 5, 6),
            ],
            false,
        ),
        (
            "read inside the writer's commit window",
            vec![
                row_write(1, 0, 5, 1, 2),
                row_commit(1, 5, 8),
                row_read(2, 0, 5, 6, 7),
                row_commit(2, 9, 10),
            ],
            true,
        ),
        (
            "overwritten value read after both commits",
            vec![
                row_write(1, 0, 1, 1, 2),
                row_commit(1, 3, 4),
                row_write(2, 0, 2, 5, 6),
                row_commit(2, 7, 8),
                row_read(3, 0, 1, 9, 10),
                row_commit(3, 11, 12),
            ],
            false,
        ),
        (
            "three-transaction chain",
            vec![
                row_write(1, 0, 1, 1, 2),
                row_commit(1, 3, 4),
                row_read(2, 0, 1, 5, 6),
                row_write(2, 1, 2, 7, 8),
                row_commit(2, 9, 10),
                row_read(3, 1, 2, 11, 12),
                row_commit(3, 13, 14),
            ],
            true,
        ),
        (
            "mutual future reads",
            vec![
                row_read(1, 1, 20, 1, 2),
                row_write(1, 0, 10, 3, 4),
                row_read(2, 0, 10, 5, 6),
                row_write(2, 1, 20, 7, 8),
                row_commit(1, 9, 10),
                row_commit(2, 11, 12),
            ],
            false,
        ),
        (
            "concurrent initial readers",
            vec![
                row_read(1, 0, 0, 1, 2),
                row_read(2, 0, 0, 3, 4),
                row_commit(1, 5, 6),
                row_commit(2, 7, 8),
            ],
            true,
        ),
        (
            "reader aborts after a conflicting write",
            vec![
                row_read(2, 0, 0, 1, 2),
                row_write(1, 0, 9, 3, 4),
                row_commit(1, 5, 6),
                row_abort(2, 7, 8),
            ],
            true,
        ),
        (
            "late reader sees neither concurrent writer",
            vec![
                row_write(1, 0, 1, 1, 2),
                row_write(2, 0, 2, 3, 4),
                row_commit(1, 5, 6),
                row_commit(2, 7, 8),
                row_read(3, 0, 0, 9, 10),
                row_commit(3, 11, 12),
            ],
            false,
        ),
        (
            // The reader snapshots X0 before two sequential writers commit
            // into X0 and X1; reading the second writer's fresh value forces
            // the reader after the first, contradicting its initial read.
            "fresh second read after an initial first read",
            vec![
                row_read(3, 0, 0, 1, 2),
                row_write(1, 0, 101, 3, 4),
                row_commit(1, 5, 6),
                row_write(2, 1, 102, 7, 8),
                row_commit(2, 9, 10),
                row_read(3, 1, 102, 11, 12),
                row_commit(3, 13, 14),
            ],
            false,
        ),
        (
            "old second read after an initial first read",
            vec![
                row_read(3, 0, 0, 1, 2),
                row_write(1, 0, 101, 3, 4),
                row_commit(1, 5, 6),
                row_write(2, 1, 102, 7, 8),
                row_commit(2, 9, 10),
                row_read(3, 1, 0, 11, 12),
                row_commit(3, 13, 14),
            ],
            true,
        ),
        (
            "invalidated chain, fresh final read",
            chain_trace(1003),
            false,
        ),
        ("invalidated chain, old final read", chain_trace(0), true),
        (
            "commit-pending writer completes as committed",
            vec![
                row_write(1, 0, 1, 1, 2),
                row_commit_pending(1, 3),
                row_read(2, 0, 1, 4, 5),
                row_commit(2, 6, 7),
            ],
            true,
        ),
        (
            "commit-pending writer cannot satisfy both readers",
            vec![
                row_write(1, 0, 1, 1, 2),
                row_commit_pending(1, 3),
                row_read(2, 0, 1, 4, 5),
                row_commit(2, 6, 7),
                row_read(3, 0, 0, 8, 9),
                row_commit(3, 10, 11),
            ],
            false,
        ),
    ]
}

#[test]
fn criterion_6_serializability_checker_matches_labels_and_oracle() {
    let corpus = labeled_corpus();
    assert!(corpus.len() >= 20, "corpus must hold at least 20 histories");
    let mut crosschecked = 0usize;
    for (name, rows, expected) in &corpus {
        let h = import(rows);
        let got = check_strict_serializability(&h, h.txns().len().max(1))
            .unwrap_or_else(|e| panic!("{name}: refused: {e}"))
            .is_some();
        assert_eq!(
            got, *expected,
            "{name}: decider says {got}, hand label says {expected}"
        );
        if h.txns().len() <= 4 {
            let oracle = bruteforce_strict_serializability(&h).is_some();
            assert_eq!(
                oracle, *expected,
                "{name}: brute-force oracle says {oracle}, hand label says {expected}"
            );
            crosschecked += 1;
        }
    }
    println!(
        "criterion 6: {}/{} labels matched; {} histories cross-checked against the brute-force oracle",
        corpus.len(),
        corpus.len(),
        crosschecked
    );
}

// ---------------------------------------------------------------------------
// 7. Mutual exclusion and deadlock freedom
// ---------------------------------------------------------------------------

#[test]
fn criterion_7_mutual_exclusion_holds_and_fair_runs_complete() {
    for passes in [1u32, 2] {
        let stats = explore_mutual_exclusion(2, passes, 10_000_000)
            .expect("state space fits the cap")
            .unwrap_or_else(|cex| {
                panic!(
                    "two processes entered their critical sections at once; schedule: {:?}",
                    cex.schedule
                )
            });
        assert!(
            stats.states > 100,
            "exploration must be nontrivial: {stats:?}"
        );
        println!(
            "criterion 7: exhaustive n=2 passes={passes}: {} states, {} transitions, zero violations",
            stats.states, stats.transitions
        );
    }
    for n in 2..=5u32 {
        let report = check_deadlock_freedom(n, 3, 1_000_000)
            .unwrap_or_else(|e| panic!("n={n}: fair run failed: {e}"));
        assert_eq!(report.completed.len(), n as usize);
        for (p, done) in &report.completed {
            assert_eq!(*done, 3, "{p}: all passages complete under a fair schedule");
        }
        for cost in &report.passages {
            assert!(
                cost.exit_events <= 5,
                "{} passage {}: exit took {} plain shared-memory events, cap is 5",
                cost.process,
                cost.passage,
                cost.exit_events
            );
        }
        println!(
            "criterion 7: n={n} fair round-robin: {} passages complete, exit <= 5 events each",
            report.passages.len()
        );
    }
}

// ---------------------------------------------------------------------------
// 8. Constant cache-coherent cost; free local spinning
// ---------------------------------------------------------------------------

fn assert_passage_costs(report: &MutexRunReport, label: &str) -> (u64, u64) {
    let mut max_wt = 0u64;
    let mut max_wb = 0u64;
    for cost in &report.passages {
        let wt = cost
            .non_tm_rmr
            .get(&MemModel::WriteThrough)
            .copied()
            .unwrap_or(0);
        let wb = cost
            .non_tm_rmr
            .get(&MemModel::WriteBack)
            .copied()
            .unwrap_or(0);
        assert!(
            wt <= 12 && wb <= 12,
            "{label}, {} passage {}: cache-coherent cost per passage must stay <= 12 \
             (write-through {wt}, write-back {wb})",
            cost.process,
            cost.passage
        );
        assert_eq!(
            cost.spin_rmr.get(&MemModel::Dsm).copied().unwrap_or(0),
            0,
            "{label}, {} passage {}: spinning on the process's own gate must be free \
             under distributed memory",
            cost.process,
            cost.passage
        );
        assert!(
            cost.exit_events <= 5,
            "{label}, {} passage {}: exit took {} plain events, cap is 5",
            cost.process,
            cost.passage,
            cost.exit_events
        );
        max_wt = max_wt.max(wt);
        max_wb = max_wb.max(wb);
    }
    (max_wt, max_wb)
}

#[test]
fn criterion_8_lock_rmr_cost_is_constant_and_local_spins_are_free() {
    // Fair runs: the per-passage cache-coherent maximum must not grow with n.
    let mut maxima = Vec::new();
    for n in [2u32, 4, 8, 16] {
        let schedule = Schedule::RoundRobin {
            procs: (0..n).map(ProcessId).collect(),
        };
        let report = run_mutex_experiment(n, 3, &schedule, 10_000_000).expect("run completes");
        assert!(report.safety_ok, "n={n}: mutual exclusion");
        assert_eq!(
            report.passages.len(),
            (3 * n) as usize,
            "n={n}: all passages complete"
        );
        let (max_wt, max_wb) = assert_passage_costs(&report, &format!("fair n={n}"));
        maxima.push((n, max_wt, max_wb));
    }
    let (_, wt_base, wb_base) = maxima[0];
    for &(n, wt, wb) in &maxima {
        assert!(
            wt <= wt_base && wb <= wb_base,
            "per-passage cost grew with the process count: n={n} reached ({wt},{wb}), \
             n=2 reached ({wt_base},{wb_base})"
        );
        println!(
            "criterion 8: n={n}: max per-passage non-transactional RMRs \
             write-through={wt} write-back={wb} (cap 12)"
        );
    }

    // Forced spinning: park process 0 inside its critical section, let
    // process 1 reach its gate and spin, then release everyone. The spin
    // must be observable (hundreds of gate reads) and cost zero remote
    // references under distributed memory.
    for n in [2u32, 4, 8, 16] {
        let (mem, layout) = build_mutex_memory(n).expect("mutex memory");
        let mut sim = Simulation::new(mem);
        for (p, machine) in build_mutex_machines(&layout, 1) {
            sim.add_machine(p, Box::new(machine));
        }
        sim.run_until_marker(ProcessId(0), MarkerKind::CriticalSection, 100_000)
            .expect("process 0 reaches its critical section");
        for _ in 0..400 {
            sim.step(ProcessId(1)).expect("process 1 steps");
        }
        let schedule = Schedule::RoundRobin {
            procs: (0..n).map(ProcessId).collect(),
        };
        sim.run(&schedule, 10_000_000).expect("everyone finishes");
        let report = analyze_mutex_execution(&layout, n, 1, sim.execution());
        assert!(report.safety_ok, "forced-spin n={n}: mutual exclusion");
        let total_spins: u64 = report.passages.iter().map(|c| c.spin_reads).sum();
        assert!(
            total_spins > 100,
            "forced-spin n={n}: the waiter must actually have spun, saw {total_spins} gate reads"
        );
        assert_passage_costs(&report, &format!("forced-spin n={n}"));
        println!("criterion 8: n={n}: {total_spins} spin reads, zero distributed-memory RMRs");
    }
}

// ---------------------------------------------------------------------------
// 9. RMR ledger vs. hand-computed charges
// ---------------------------------------------------------------------------

/// One scripted access and its hand-computed per-model charge.
struct HandAccess {
    process: u32,
    object: usize,
    op: PrimitiveOp,
    /// Expected (write-through, write-back, distributed) charge.
    expect: (u32, u32, u32),
    /// Expected primitive response, where pinned.
    response: Option<Value>,
}

struct HandScenario {
    name: &'static str,
    /// (initial value, distributed-memory owner) per allocated object.
    objects: Vec<(i64, u32)>,
    accesses: Vec<HandAccess>,
}

fn acc(process: u32, object: usize, op: PrimitiveOp, expect: (u32, u32, u32)) -> HandAccess {
    HandAccess {
        process,
        object,
        op,
        expect,
        response: None,
    }
}

fn acc_resp(
    process: u32,
    object: usize,
    op: PrimitiveOp,
    expect: (u32, u32, u32),
    response: Value,
) -> HandAccess {
    HandAccess {
        process,
        object,
        op,
        expect,
        response: Some(response),
    }
}

/// Ten scenarios, each hand-computed from the model rules:
/// - write-through: reads hit iff the reader holds a valid copy; every write
///   costs one, invalidates other copies, and installs none;
/// - write-back: reads hit on shared or exclusive copies and demote remote
///   exclusives; writes hit only on an own exclusive copy and invalidate
///   everything else;
/// - distributed: every access by a non-owner costs one, owner accesses are
///   free, no caching.
/// Failed conditionals (CAS, store-conditional) are write-class accesses.
fn hand_scenarios() -> Vec<HandScenario> {
    use PrimitiveOp as P;
    vec![
        HandScenario {
            name: "cold and cached reads",
            objects: vec![(0, 0)],
            accesses: vec![
                acc_resp(0, 0, P::read(), (1, 1, 0), Value::Int(0)),
                acc(0, 0, P::read(), (0, 0, 0)),
                acc(1, 0, P::read(), (1, 1, 1)),
                acc(1, 0, P::read(), (0, 0, 1)),
            ],
        },
        HandScenario {
            name: "a write invalidates the readers",
            objects: vec![(0, 0)],
            accesses: vec![
                acc(0, 0, P::read(), (1, 1, 0)),
                acc(1, 0, P::read(), (1, 1, 1)),
                acc(1, 0, P::write(5), (1, 1, 1)),
                // The writer's exclusive copy is demoted by this read miss,
                // while under write-through the writer kept its own copy.
                acc_resp(0, 0, P::read(), (1, 1, 0), Value::Int(5)),
                acc_resp(1, 0, P::read(), (0, 1, 1), Value::Int(5)),
            ],
        },
        HandScenario {
            name: "write-back write locality",
            objects: vec![(0, 1)],
            accesses: vec![
                acc(1, 0, P::write(1), (1, 1, 0)),
                // Same writer again: free only under write-back.
                acc(1, 0, P::write(2), (1, 0, 0)),
                acc(0, 0, P::write(3), (1, 1, 1)),
                acc(1, 0, P::write(4), (1, 1, 0)),
            ],
        },
        HandScenario {
            name: "a failed compare-and-swap still travels",
            objects: vec![(0, 0)],
            accesses: vec![
                acc(1, 0, P::read(), (1, 1, 1)),
                // Expected 5, actual 0: the CAS fails yet invalidates the
                // reader's copy under both cache models.
                acc_resp(0, 0, P::cas(5, 6), (1, 1, 0), Value::Bool(false)),
                acc_resp(1, 0, P::read(), (1, 1, 1), Value::Int(0)),
            ],
        },
        HandScenario {
            name: "load-link and store-conditional classes",
            objects: vec![(0, 0)],
            accesses: vec![
                // Load-link is read-class.
                acc_resp(1, 0, P::ll(), (1, 1, 1), Value::Int(0)),
                acc_resp(1, 0, P::sc(7), (1, 1, 1), Value::Bool(true)),
                acc_resp(1, 0, P::ll(), (0, 0, 1), Value::Int(7)),
                // This write breaks the link.
                acc(0, 0, P::write(9), (1, 1, 0)),
                // The store-conditional fails but is still write-class and
                // still claims the cache line.
                acc_resp(1, 0, P::sc(8), (1, 1, 1), Value::Bool(false)),
                acc_resp(0, 0, P::read(), (1, 1, 0), Value::Int(9)),
            ],
        },
        HandScenario {
            name: "fetch-add is write-class",
            objects: vec![(10, 1)],
            accesses: vec![
                acc_resp(0, 0, P::fetch_add(5), (1, 1, 1), Value::Int(10)),
                // Write-through installed no copy, write-back holds it
                // exclusive: the read misses under one model only.
                acc_resp(0, 0, P::read(), (1, 0, 1), Value::Int(15)),
                acc_resp(1, 0, P::read(), (1, 1, 0), Value::Int(15)),
            ],
        },
        HandScenario {
            name: "a writer clears a reader crowd",
            objects: vec![(0, 2)],
            accesses: vec![
                acc(0, 0, P::read(), (1, 1, 1)),
                acc(1, 0, P::read(), (1, 1, 1)),
                acc(2, 0, P::read(), (1, 1, 0)),
                acc(2, 0, P::write(3), (1, 1, 0)),
                acc_resp(0, 0, P::read(), (1, 1, 1), Value::Int(3)),
                acc_resp(1, 0, P::read(), (1, 1, 1), Value::Int(3)),
            ],
        },
        HandScenario {
            name: "ownership is per object",
            objects: vec![(0, 0), (0, 1)],
            accesses: vec![
                acc(0, 0, P::read(), (1, 1, 0)),
                acc(0, 1, P::read(), (1, 1, 1)),
                acc(1, 0, P::read(), (1, 1, 1)),
                acc(1, 1, P::read(), (1, 1, 0)),
                acc(0, 0, P::read(), (0, 0, 0)),
                acc(1, 1, P::read(), (0, 0, 0)),
                acc(1, 0, P::write(4), (1, 1, 1)),
                acc_resp(0, 0, P::read(), (1, 1, 0), Value::Int(4)),
                // Traffic on the first object never disturbed the second.
                acc(0, 1, P::read(), (0, 0, 1)),
            ],
        },
        HandScenario {
            name: "write-through writes install no copy",
            objects: vec![(0, 0)],
            accesses: vec![
                acc(0, 0, P::write(1), (1, 1, 0)),
                // The writer itself misses under write-through.
                acc_resp(0, 0, P::read(), (1, 0, 0), Value::Int(1)),
                acc(0, 0, P::read(), (0, 0, 0)),
                // A write through an existing copy keeps it valid.
                acc(0, 0, P::write(2), (1, 0, 0)),
                acc_resp(0, 0, P::read(), (0, 0, 0), Value::Int(2)),
            ],
        },
        HandScenario {
            name: "write ping-pong",
            objects: vec![(0, 0)],
            accesses: vec![
                acc(0, 0, P::write(1), (1, 1, 0)),
                acc(1, 0, P::write(2), (1, 1, 1)),
                acc(0, 0, P::write(3), (1, 1, 0)),
                acc(1, 0, P::write(4), (1, 1, 1)),
            ],
        },
    ]
}

#[test]
fn criterion_9_rmr_ledger_matches_hand_computed_charges() {
    let scenarios = hand_scenarios();
    assert_eq!(scenarios.len(), 10);
    let mut verdicts: Vec<(String, bool)> = Vec::new();

    for scenario in &scenarios {
        let mut mem = Memory::new(all_models_config()).expect("memory");
        let mut ids = Vec::new();
        for (init, owner) in &scenario.objects {
            ids.push(
                mem.alloc(Value::Int(*init), Some(ProcessId(*owner)))
                    .expect("alloc"),
            );
        }

        // Replay the script once, recording actual charges.
        let mut actual: Vec<RmrCost> = Vec::new();
        for (idx, a) in scenario.accesses.iter().enumerate() {
            let ev = mem
                .apply(ProcessId(a.process), ids[a.object], &a.op)
                .unwrap_or_else(|e| panic!("{}: access {idx}: {e}", scenario.name));
            if let Some(resp) = &a.response {
                assert_eq!(
                    &ev.response, resp,
                    "{}: access {idx} response",
                    scenario.name
                );
            }
            actual.push(ev.rmr);
        }

        // Judge each memory model independently: every per-event charge and
        // the final per-process ledger totals must match the hand numbers.
        for model in MemModel::ALL {
            let mut ok = true;
            for (idx, a) in scenario.accesses.iter().enumerate() {
                let want = match model {
                    MemModel::WriteThrough => a.expect.0,
                    MemModel::WriteBack => a.expect.1,
                    MemModel::Dsm => a.expect.2,
                };
                let got = actual[idx].for_model(model);
                if got != want {
                    eprintln!(
                        "{} / {model}: access {idx} charged {got}, hand computation says {want}",
                        scenario.name
                    );
                    ok = false;
                }
            }
            let processes: BTreeSet<u32> = scenario.accesses.iter().map(|a| a.process).collect();
            for p in processes {
                let want: u64 = scenario
                    .accesses
                    .iter()
                    .filter(|a| a.process == p)
                    .map(|a| match model {
                        MemModel::WriteThrough => u64::from(a.expect.0),
                        MemModel::WriteBack => u64::from(a.expect.1),
                        MemModel::Dsm => u64::from(a.expect.2),
                    })
                    .sum();
                let got = mem.ledger().count(model, ProcessId(p), EventTag::NonTm);
                if got != want {
                    eprintln!(
                        "{} / {model}: ledger total for p{p} is {got}, hand computation says {want}",
                        scenario.name
                    );
                    ok = false;
                }
                // Plain accesses never show up as transactional charges.
                if mem.ledger().count(model, ProcessId(p), EventTag::Tm) != 0 {
                    eprintln!(
                        "{} / {model}: unexpected transactional charge",
                        scenario.name
                    );
                    ok = false;
                }
            }
            verdicts.push((format!("{} / {model}", scenario.name), ok));
        }
    }

    assert_eq!(verdicts.len(), 30);
    let passed = verdicts.iter().filter(|(_, ok)| *ok).count();
    for (name, ok) in &verdicts {
        println!(
            "criterion 9: {name}: {}",
            if *ok { "ok" } else { "MISMATCH" }
        );
    }
    assert_eq!(passed, 30, "all 30 scenario/model verdicts must match");
}
