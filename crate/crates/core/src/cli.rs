//! Command-line interface.
//!
//! Subcommands:
//!
//! - `simulate` — run a scripted workload (from a JSON file or generated
//!   from a seed) under a schedule and write the execution log as JSONL.
//! - `check` — check a property of a recorded trace. `--in *.jsonl` is an
//!   execution log; `--in *.json` is a history: either a JSON array of
//!   operation records `{txn, kind, object, arg, outcome, invSeq,
//!   respSeq}` or an object `{"initial": {…}, "events": […]}` that also
//!   sets initial t-object values. The `weak-dap` and `inv-reads`
//!   properties inspect base-object accesses, so they require an
//!   execution log.
//! - `lowerbound quadratic|space` — drive the adversarial read chains
//!   against a named TM and report per-read step/footprint costs as CSV.
//! - `mutex` — run the TM-backed lock and report per-passage
//!   remote-memory-reference counts, or `--exhaustive`ly model-check
//!   mutual exclusion.
//!
//! Exit codes: 0 = pass, 1 = property violation, 2 = refusal (search
//! bound, state-space or step budget, I/O failure), 3 = usage error.
//!
//! Every run first prints its fully resolved configuration, one
//! `key = value` line per parameter, defaults included. The same format is
//! accepted back via `--config FILE`: file values fill any flag not given
//! on the command line, and a `command` key (plus `kind` for
//! `lowerbound`) may select the subcommand when none is on the command
//! line.

use crate::check::dap::check_weak_dap;
use crate::check::invisible::{check_invisible_reads, ReadVisibilityScope};
use crate::check::progress::{check_progressiveness, check_strong_progressiveness};
use crate::check::serialize::{check_opacity, check_strict_serializability};
use crate::check::{serialize, BoundExceeded};
use crate::ids::ProcessId;
use crate::lowerbound::{measure_final_read_footprint, measure_read_validation_cost, ChainError};
use crate::mutex::{explore_mutual_exclusion, run_mutex_experiment};
use crate::report;
use crate::sim::event::Execution;
use crate::sim::memory::MemoryConfig;
use crate::sim::rmr::MemModel;
use crate::sim::schedule::Schedule;
use crate::stm::{OccTm, SingleObjectTm};
use crate::tm::gen::{random_workload, GenParams};
use crate::tm::history::{derive_history, History};
use crate::tm::{simulation_for_workload, Workload};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_REFUSAL: i32 = 2;
pub const EXIT_USAGE: i32 = 3;

/// Entry point for the binary; returns the process exit code.
pub fn run() -> i32 {
    let argv: Vec<String> = std::env::args().collect();
    let mut out = String::new();
    let code = run_captured(&argv, &mut out);
    print!("{out}");
    code
}

/// Run with an explicit argv (`argv[0]` is the program name), appending
/// everything the command prints to `out`.
pub fn run_captured(argv: &[String], out: &mut String) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(out, "{}", e.render());
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_PASS,
                _ => EXIT_USAGE,
            };
        }
    };
    match dispatch(cli, out) {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(out, "error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Refusal(msg)) => {
            let _ = writeln!(out, "refused: {msg}");
            EXIT_REFUSAL
        }
    }
}

#[derive(Parser)]
#[command(
    name = "tmlab",
    version,
    about = "Deterministic shared-memory lab: transactional memories, trace checkers, \
             adversarial cost harnesses, and a TM-backed lock"
)]
struct Cli {
    /// key = value file supplying any parameter not given as a flag
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<String>,
    #[command(subcommand)]
    command: Option<Cmd>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a workload under a schedule and write the execution log
    Simulate(SimulateArgs),
    /// Check a property of a recorded trace
    Check(CheckArgs),
    /// Measure adversarial read-chain costs of a TM
    Lowerbound(LowerboundArgs),
    /// Run or model-check the TM-backed lock
    Mutex(MutexArgs),
}

#[derive(Args, Default)]
struct SimulateArgs {
    /// transactional memory: ref | sp1
    #[arg(long)]
    tm: Option<String>,
    /// workload JSON file; omitted = generate one from the sizes below
    #[arg(long)]
    workload: Option<String>,
    /// generated workload: number of processes
    #[arg(long)]
    procs: Option<String>,
    /// generated workload: transactions per process
    #[arg(long)]
    txns: Option<String>,
    /// generated workload: reads/writes per transaction
    #[arg(long)]
    ops: Option<String>,
    /// generated workload: number of t-objects
    #[arg(long)]
    tobjects: Option<String>,
    /// seed for workload generation and random scheduling
    #[arg(long)]
    seed: Option<String>,
    /// roundrobin | random
    #[arg(long)]
    schedule: Option<String>,
    /// step budget
    #[arg(long)]
    steps: Option<String>,
    /// execution log destination (JSONL); "-" = stdout
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args, Default)]
struct CheckArgs {
    /// opacity | strict-ser | prog | strong-prog | weak-dap | inv-reads
    #[arg(long)]
    property: Option<String>,
    /// trace file: *.jsonl execution log or *.json history
    #[arg(long = "in")]
    input: Option<String>,
    /// transaction-count cap for the exhaustive searches
    #[arg(long)]
    bound: Option<String>,
}

#[derive(Args, Default)]
struct LowerboundArgs {
    #[command(subcommand)]
    kind: Option<LbKind>,
}

#[derive(Subcommand, Clone)]
enum LbKind {
    /// Per-read step counts across growing fresh chains
    Quadratic(LbParams),
    /// Distinct base objects under the final read of invalidated chains
    Space(LbParams),
}

#[derive(Args, Default, Clone)]
struct LbParams {
    /// transactional memory: ref | sp1
    #[arg(long)]
    tm: Option<String>,
    /// chain length
    #[arg(long)]
    m: Option<String>,
    /// CSV destination; "-" = stdout only
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args, Default)]
struct MutexArgs {
    /// number of processes
    #[arg(long)]
    n: Option<String>,
    /// passages per process
    #[arg(long)]
    passes: Option<String>,
    /// RMR columns to report: wt | wb | dsm | all
    #[arg(long)]
    model: Option<String>,
    /// roundrobin | random
    #[arg(long)]
    schedule: Option<String>,
    /// seed for random scheduling
    #[arg(long)]
    seed: Option<String>,
    /// step budget for scheduled runs
    #[arg(long)]
    steps: Option<String>,
    /// CSV (or counterexample log) destination; "-" = stdout
    #[arg(long)]
    out: Option<String>,
    /// model-check every interleaving instead of running a schedule
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    exhaustive: Option<String>,
    /// state cap for --exhaustive
    #[arg(long)]
    max_states: Option<String>,
}

enum CliError {
    Usage(String),
    Refusal(String),
}

/// Which transactional memory a run drives.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum TmName {
    /// The versioned-lock TM with invisible reads.
    Ref,
    /// The single-object compare-and-swap TM.
    Sp1,
}

impl FromStr for TmName {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ref" | "occ" => Ok(TmName::Ref),
            "sp1" | "single" => Ok(TmName::Sp1),
            other => Err(format!("unknown TM {other:?} (expected ref or sp1)")),
        }
    }
}

impl fmt::Display for TmName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TmName::Ref => "ref",
            TmName::Sp1 => "sp1",
        })
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Property {
    Opacity,
    StrictSer,
    Prog,
    StrongProg,
    WeakDap,
    InvReads,
}

impl FromStr for Property {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "opacity" => Ok(Property::Opacity),
            "strict-ser" => Ok(Property::StrictSer),
            "prog" => Ok(Property::Prog),
            "strong-prog" => Ok(Property::StrongProg),
            "weak-dap" => Ok(Property::WeakDap),
            "inv-reads" => Ok(Property::InvReads),
            other => Err(format!(
                "unknown property {other:?} (expected opacity, strict-ser, prog, \
                 strong-prog, weak-dap, or inv-reads)"
            )),
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Property::Opacity => "opacity",
            Property::StrictSer => "strict-ser",
            Property::Prog => "prog",
            Property::StrongProg => "strong-prog",
            Property::WeakDap => "weak-dap",
            Property::InvReads => "inv-reads",
        })
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum SchedChoice {
    RoundRobin,
    Random,
}

impl FromStr for SchedChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "roundrobin" => Ok(SchedChoice::RoundRobin),
            "random" => Ok(SchedChoice::Random),
            other => Err(format!(
                "unknown schedule {other:?} (expected roundrobin or random)"
            )),
        }
    }
}

impl fmt::Display for SchedChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchedChoice::RoundRobin => "roundrobin",
            SchedChoice::Random => "random",
        })
    }
}

impl SchedChoice {
    fn build(self, procs: Vec<ProcessId>, seed: u64) -> Schedule {
        match self {
            SchedChoice::RoundRobin => Schedule::RoundRobin { procs },
            SchedChoice::Random => Schedule::Random { procs, seed },
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum ModelChoice {
    One(MemModel),
    All,
}

impl FromStr for ModelChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "wt" | "write-through" => Ok(ModelChoice::One(MemModel::WriteThrough)),
            "wb" | "write-back" => Ok(ModelChoice::One(MemModel::WriteBack)),
            "dsm" => Ok(ModelChoice::One(MemModel::Dsm)),
            "all" => Ok(ModelChoice::All),
            other => Err(format!(
                "unknown model {other:?} (expected wt, wb, dsm, or all)"
            )),
        }
    }
}

impl fmt::Display for ModelChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelChoice::One(MemModel::WriteThrough) => f.write_str("wt"),
            ModelChoice::One(MemModel::WriteBack) => f.write_str("wb"),
            ModelChoice::One(MemModel::Dsm) => f.write_str("dsm"),
            ModelChoice::All => f.write_str("all"),
        }
    }
}

impl ModelChoice {
    fn models(self) -> Vec<MemModel> {
        match self {
            ModelChoice::One(m) => vec![m],
            ModelChoice::All => MemModel::ALL.to_vec(),
        }
    }
}

/// Parse a `key = value` config file. `#` starts a comment line.
fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(format!("config line {}: expected key = value", i + 1));
        };
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

/// Merges command-line flags with config-file values and records every
/// resolved parameter for the provenance printout.
struct Resolver {
    file: BTreeMap<String, String>,
    /// Keys of `file` consumed so far; leftovers are a usage error.
    used: std::collections::BTreeSet<String>,
    resolved: BTreeMap<String, String>,
}

impl Resolver {
    fn new(file: BTreeMap<String, String>) -> Resolver {
        Resolver {
            file,
            used: Default::default(),
            resolved: Default::default(),
        }
    }

    fn raw(&mut self, key: &str, cli: &Option<String>) -> Option<String> {
        if let Some(v) = cli {
            self.used.insert(key.to_string());
            return Some(v.clone());
        }
        if let Some(v) = self.file.get(key) {
            self.used.insert(key.to_string());
            return Some(v.clone());
        }
        None
    }

    /// A parameter with a default; records the value actually used.
    fn get<T>(&mut self, key: &str, cli: &Option<String>, default: T) -> Result<T, CliError>
    where
        T: FromStr + fmt::Display,
        T::Err: fmt::Display,
    {
        let raw = match self.raw(key, cli) {
            Some(raw) => raw,
            None => {
                let v = default;
                self.resolved.insert(key.to_string(), v.to_string());
                return Ok(v);
            }
        };
        let v: T = raw
            .parse()
            .map_err(|e| CliError::Usage(format!("--{key}: {e}")))?;
        self.resolved.insert(key.to_string(), v.to_string());
        Ok(v)
    }

    /// A parameter that must be present (flag or file).
    fn require<T>(&mut self, key: &str, cli: &Option<String>) -> Result<T, CliError>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        let raw = self
            .raw(key, cli)
            .ok_or_else(|| CliError::Usage(format!("--{key} is required")))?;
        let v: T = raw
            .parse()
            .map_err(|e| CliError::Usage(format!("--{key}: {e}")))?;
        self.resolved.insert(key.to_string(), raw);
        Ok(v)
    }

    /// An optional path-like parameter; absent is recorded as "-".
    fn path(&mut self, key: &str, cli: &Option<String>) -> Option<String> {
        match self.raw(key, cli) {
            Some(p) if p != "-" => {
                self.resolved.insert(key.to_string(), p.clone());
                Some(p)
            }
            _ => {
                self.resolved.insert(key.to_string(), "-".to_string());
                None
            }
        }
    }

    /// Reject config-file keys nothing consumed (likely typos).
    fn finish(&self) -> Result<(), CliError> {
        for key in self.file.keys() {
            if !self.used.contains(key) && key != "command" && key != "kind" {
                return Err(CliError::Usage(format!(
                    "config key {key:?} is not a parameter of this command"
                )));
            }
        }
        Ok(())
    }

    /// The `key = value` provenance block printed before execution.
    fn printout(&self, command: &str, kind: Option<&str>) -> String {
        let mut s = format!("command = {command}\n");
        if let Some(kind) = kind {
            let _ = writeln!(s, "kind = {kind}");
        }
        for (k, v) in &self.resolved {
            let _ = writeln!(s, "{k} = {v}");
        }
        s.push('\n');
        s
    }
}

fn dispatch(cli: Cli, out: &mut String) -> Result<i32, CliError> {
    let file = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("--config {path}: {e}")))?;
            parse_config_file(&text).map_err(CliError::Usage)?
        }
        None => BTreeMap::new(),
    };
    let command = match cli.command {
        Some(cmd) => cmd,
        None => match file.get("command").map(String::as_str) {
            Some("simulate") => Cmd::Simulate(SimulateArgs::default()),
            Some("check") => Cmd::Check(CheckArgs::default()),
            Some("lowerbound") => Cmd::Lowerbound(LowerboundArgs::default()),
            Some("mutex") => Cmd::Mutex(MutexArgs::default()),
            Some(other) => {
                return Err(CliError::Usage(format!(
                    "config names unknown command {other:?}"
                )))
            }
            None => {
                return Err(CliError::Usage(
                    "no subcommand given (and no `command` key in a config file)".into(),
                ))
            }
        },
    };
    let mut resolver = Resolver::new(file);
    match command {
        Cmd::Simulate(args) => cmd_simulate(args, &mut resolver, out),
        Cmd::Check(args) => cmd_check(args, &mut resolver, out),
        Cmd::Lowerbound(args) => cmd_lowerbound(args, &mut resolver, out),
        Cmd::Mutex(args) => cmd_mutex(args, &mut resolver, out),
    }
}

fn write_out(path: &str, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content).map_err(|e| CliError::Refusal(format!("writing {path}: {e}")))
}

fn pretty<T: serde::Serialize>(value: &T) -> String {
    report::to_json_pretty(value)
}

// ---------------------------------------------------------------- simulate

fn cmd_simulate(args: SimulateArgs, r: &mut Resolver, out: &mut String) -> Result<i32, CliError> {
    let tm: TmName = r.get("tm", &args.tm, TmName::Ref)?;
    let seed: u64 = r.get("seed", &args.seed, 0)?;
    let sched: SchedChoice = r.get("schedule", &args.schedule, SchedChoice::RoundRobin)?;
    let steps: u64 = r.get("steps", &args.steps, 100_000)?;
    let workload_path = r.path("workload", &args.workload);
    let workload = match &workload_path {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("--workload {path}: {e}")))?;
            serde_json::from_str::<Workload>(&text)
                .map_err(|e| CliError::Usage(format!("--workload {path}: {e}")))?
        }
        None => {
            let params = GenParams {
                processes: r.get("procs", &args.procs, 2u32)?,
                txns_per_process: r.get("txns", &args.txns, 2u32)?,
                ops_per_txn: r.get("ops", &args.ops, 3u32)?,
                tobjects: r.get("tobjects", &args.tobjects, 2u32)?,
            };
            random_workload(&params, seed)
        }
    };
    let out_path = r.path("out", &args.out);
    r.finish()?;
    out.push_str(&r.printout("simulate", None));

    workload
        .validate()
        .map_err(|e| CliError::Usage(format!("workload: {e}")))?;
    let procs: Vec<ProcessId> = workload.processes.iter().map(|ps| ps.process).collect();
    let owner = procs.first().copied();
    let mem_config = MemoryConfig {
        objects: Vec::new(),
        models: MemoryConfig::all_models(),
        dsm_owner: Default::default(),
    };
    let mut sim = match tm {
        TmName::Ref => simulation_for_workload::<OccTm>(&workload, mem_config, owner),
        TmName::Sp1 => simulation_for_workload::<SingleObjectTm>(&workload, mem_config, owner),
    }
    .map_err(|e| CliError::Usage(format!("workload setup: {e}")))?;
    let schedule = sched.build(procs, seed);
    let summary = sim
        .run(&schedule, steps)
        .map_err(|e| CliError::Refusal(e.to_string()))?;
    let execution = sim.execution();
    crate::sim::event::verify_replay(&execution)
        .map_err(|e| CliError::Refusal(format!("replay check failed: {e}")))?;

    let log = execution.to_jsonl_string();
    match &out_path {
        Some(path) => write_out(path, &log)?,
        None => out.push_str(&log),
    }

    let _ = writeln!(out, "events = {}", execution.events.len());
    if let Ok(h) = derive_history(&execution) {
        let (mut c, mut a, mut i) = (0, 0, 0);
        for view in h.views() {
            match view.status {
                crate::tm::TxnStatus::Committed => c += 1,
                crate::tm::TxnStatus::Aborted => a += 1,
                crate::tm::TxnStatus::TIncomplete => i += 1,
            }
        }
        let _ = writeln!(
            out,
            "txns = {} committed, {} aborted, {} incomplete",
            c, a, i
        );
    }
    if summary.truncated {
        let _ = writeln!(out, "step budget {steps} exhausted before completion");
        return Ok(EXIT_REFUSAL);
    }
    Ok(EXIT_PASS)
}

// ------------------------------------------------------------------- check

enum TraceInput {
    Execution(Execution),
    History(History),
}

fn load_trace(path: &str) -> Result<TraceInput, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("--in {path}: {e}")))?;
    if path.ends_with(".jsonl") {
        let execution = Execution::read_jsonl(text.as_bytes())
            .map_err(|e| CliError::Usage(format!("--in {path}: {e}")))?;
        return Ok(TraceInput::Execution(execution));
    }
    let json: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("--in {path}: {e}")))?;
    let (initial, rows) = match &json {
        serde_json::Value::Object(map) if map.contains_key("events") => {
            let initial = match map.get("initial") {
                Some(v) => serde_json::from_value(v.clone())
                    .map_err(|e| CliError::Usage(format!("--in {path}: initial: {e}")))?,
                None => BTreeMap::new(),
            };
            (initial, map["events"].clone())
        }
        _ => (BTreeMap::new(), json),
    };
    let history = History::import_json(&rows, initial)
        .map_err(|e| CliError::Usage(format!("--in {path}: {e}")))?;
    Ok(TraceInput::History(history))
}

fn history_of(input: TraceInput, path: &str) -> Result<History, CliError> {
    match input {
        TraceInput::History(h) => Ok(h),
        TraceInput::Execution(e) => {
            derive_history(&e).map_err(|err| CliError::Usage(format!("--in {path}: {err}")))
        }
    }
}

fn execution_of(input: TraceInput, property: Property) -> Result<Execution, CliError> {
    match input {
        TraceInput::Execution(e) => Ok(e),
        TraceInput::History(_) => Err(CliError::Usage(format!(
            "--property {property} inspects base-object accesses; \
             it needs an execution log (*.jsonl), not a history"
        ))),
    }
}

fn refusal_line(out: &mut String, b: BoundExceeded) -> i32 {
    let _ = writeln!(out, "refused: {b}");
    EXIT_REFUSAL
}

fn verdict<V: serde::Serialize>(out: &mut String, property: Property, violations: &[V]) -> i32 {
    if violations.is_empty() {
        let _ = writeln!(out, "PASS {property}");
        EXIT_PASS
    } else {
        let _ = writeln!(out, "FAIL {property}");
        out.push_str(&pretty(&violations));
        EXIT_VIOLATION
    }
}

fn cmd_check(args: CheckArgs, r: &mut Resolver, out: &mut String) -> Result<i32, CliError> {
    let property: Property = r.require("property", &args.property)?;
    let path: String = r.require("in", &args.input)?;
    let bound: usize = match property {
        Property::Opacity | Property::StrictSer => {
            r.get("bound", &args.bound, serialize::DEFAULT_TXN_BOUND)?
        }
        Property::StrongProg => r.get(
            "bound",
            &args.bound,
            crate::check::progress::DEFAULT_STRONG_BOUND,
        )?,
        _ => 0,
    };
    r.finish()?;
    out.push_str(&r.printout("check", None));

    let input = load_trace(&path)?;
    let code = match property {
        Property::Opacity | Property::StrictSer => {
            let h = history_of(input, &path)?;
            let result = if property == Property::Opacity {
                check_opacity(&h, bound)
            } else {
                check_strict_serializability(&h, bound)
            };
            match result {
                Err(b) => refusal_line(out, b),
                Ok(Some(witness)) => {
                    let _ = writeln!(out, "PASS {property}");
                    out.push_str(&pretty(&witness));
                    EXIT_PASS
                }
                Ok(None) => {
                    let _ = writeln!(out, "FAIL {property}");
                    let _ = writeln!(
                        out,
                        "{}",
                        serde_json::json!({
                            "property": property.to_string(),
                            "violation": "no serialization of the transactions is legal",
                        })
                    );
                    EXIT_VIOLATION
                }
            }
        }
        Property::Prog => {
            let h = history_of(input, &path)?;
            let report = check_progressiveness(&h);
            verdict(out, property, &report.violations)
        }
        Property::StrongProg => {
            let h = history_of(input, &path)?;
            match check_strong_progressiveness(&h, bound) {
                Err(b) => refusal_line(out, b),
                Ok(report) => verdict(out, property, &report.violations),
            }
        }
        Property::WeakDap => {
            let execution = execution_of(input, property)?;
            let report = check_weak_dap(&execution)
                .map_err(|e| CliError::Usage(format!("--in {path}: {e}")))?;
            let violations: Vec<_> = report.violations().cloned().collect();
            verdict(out, property, &violations)
        }
        Property::InvReads => {
            let execution = execution_of(input, property)?;
            let report = check_invisible_reads(&execution, ReadVisibilityScope::Strong)
                .map_err(|e| CliError::Usage(format!("--in {path}: {e}")))?;
            verdict(out, property, &report.violations)
        }
    };
    Ok(code)
}

// -------------------------------------------------------------- lowerbound

fn chain_error(e: ChainError) -> CliError {
    match e {
        ChainError::BadParams(msg) => CliError::Usage(msg),
        other => CliError::Refusal(other.to_string()),
    }
}

fn cmd_lowerbound(
    args: LowerboundArgs,
    r: &mut Resolver,
    out: &mut String,
) -> Result<i32, CliError> {
    let (kind_name, params) = match args.kind {
        Some(LbKind::Quadratic(p)) => ("quadratic", p),
        Some(LbKind::Space(p)) => ("space", p),
        None => match r.file.get("kind").map(String::as_str) {
            Some("quadratic") => ("quadratic", LbParams::default()),
            Some("space") => ("space", LbParams::default()),
            Some(other) => {
                return Err(CliError::Usage(format!(
                    "config names unknown lowerbound kind {other:?}"
                )))
            }
            None => {
                return Err(CliError::Usage(
                    "lowerbound needs a kind: quadratic or space".into(),
                ))
            }
        },
    };
    let tm: TmName = r.get("tm", &params.tm, TmName::Ref)?;
    let m: usize = r.get("m", &params.m, 8)?;
    let out_path = r.path("out", &params.out);
    r.finish()?;
    out.push_str(&r.printout("lowerbound", Some(kind_name)));

    let config = r.resolved.clone();
    let (csv, pass) = if kind_name == "quadratic" {
        let report = match tm {
            TmName::Ref => measure_read_validation_cost::<OccTm>(m),
            TmName::Sp1 => measure_read_validation_cost::<SingleObjectTm>(m),
        }
        .map_err(chain_error)?;
        (report::quadratic_csv(&report, &config), report.pass)
    } else {
        let report = match tm {
            TmName::Ref => measure_final_read_footprint::<OccTm>(m),
            TmName::Sp1 => measure_final_read_footprint::<SingleObjectTm>(m),
        }
        .map_err(chain_error)?;
        (report::space_csv(&report, &config), report.pass)
    };
    out.push_str(&csv);
    if let Some(path) = &out_path {
        write_out(path, &csv)?;
    }
    Ok(if pass { EXIT_PASS } else { EXIT_VIOLATION })
}

// ------------------------------------------------------------------- mutex

fn cmd_mutex(args: MutexArgs, r: &mut Resolver, out: &mut String) -> Result<i32, CliError> {
    let n: u32 = r.get("n", &args.n, 2)?;
    let passes: u32 = r.get("passes", &args.passes, 2)?;
    let model: ModelChoice = r.get("model", &args.model, ModelChoice::All)?;
    let exhaustive: bool = r.get("exhaustive", &args.exhaustive, false)?;
    if n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    if exhaustive {
        let max_states: u64 = r.get("max-states", &args.max_states, 10_000_000)?;
        let out_path = r.path("out", &args.out);
        r.finish()?;
        out.push_str(&r.printout("mutex", None));
        return match explore_mutual_exclusion(n, passes, max_states) {
            Err(overflow) => {
                let _ = writeln!(out, "refused: {overflow}");
                Ok(EXIT_REFUSAL)
            }
            Ok(Ok(stats)) => {
                let _ = writeln!(
                    out,
                    "PASS mutual exclusion: {} states, {} transitions, zero violations",
                    stats.states, stats.transitions
                );
                Ok(EXIT_PASS)
            }
            Ok(Err(cx)) => {
                let _ = writeln!(
                    out,
                    "FAIL mutual exclusion: two processes in the critical section \
                     after {} steps; counterexample execution log follows",
                    cx.schedule.len()
                );
                let log = cx.execution.to_jsonl_string();
                match &out_path {
                    Some(path) => write_out(path, &log)?,
                    None => out.push_str(&log),
                }
                Ok(EXIT_VIOLATION)
            }
        };
    }

    let sched: SchedChoice = r.get("schedule", &args.schedule, SchedChoice::RoundRobin)?;
    let seed: u64 = r.get("seed", &args.seed, 0)?;
    let steps: u64 = r.get("steps", &args.steps, 1_000_000)?;
    let out_path = r.path("out", &args.out);
    r.finish()?;
    out.push_str(&r.printout("mutex", None));

    let procs: Vec<ProcessId> = (0..n).map(ProcessId).collect();
    let schedule = sched.build(procs.clone(), seed);
    let report = run_mutex_experiment(n, passes, &schedule, steps)
        .map_err(|e| CliError::Refusal(e.to_string()))?;

    let csv = report::mutex_csv_models(&report, &model.models(), &r.resolved);
    out.push_str(&csv);
    if let Some(path) = &out_path {
        write_out(path, &csv)?;
    }
    if !report.safety_ok {
        let _ = writeln!(out, "FAIL mutual exclusion violated in this run");
        out.push_str(&report.execution.to_jsonl_string());
        return Ok(EXIT_VIOLATION);
    }
    for p in &procs {
        let done = report.completed.get(p).copied().unwrap_or(0);
        if done != passes {
            let _ = writeln!(
                out,
                "refused: {p} completed {done} of {passes} passages within {steps} steps"
            );
            return Ok(EXIT_REFUSAL);
        }
    }
    let _ = writeln!(out, "PASS mutual exclusion held; all passages completed");
    Ok(EXIT_PASS)
}
