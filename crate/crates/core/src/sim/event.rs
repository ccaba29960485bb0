//! Execution logs: the ground truth a simulation produces.
//!
//! An execution is a sequence of events — primitive applications on base
//! objects, transactional-operation invocation/response markers, structural
//! markers (critical-section occupancy, passage boundaries), and recorded
//! no-ops for scheduled processes with nothing to do. The log plus the
//! initial configuration replays deterministically; [`verify_replay`] checks
//! that every recorded response and RMR charge is reproduced.
//!
//! The on-disk format is JSON lines: one `meta` record followed by one
//! record per event.

use crate::ids::{BaseObjectId, ProcessId, TObjectId, TxnId};
use crate::sim::primitive::{PrimKind, PrimitiveOp};
use crate::sim::rmr::{EventTag, MemModel, RmrCost};
use crate::tm::ops::{TOpCall, TOpOutcome};
use crate::value::Value;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use thiserror::Error;

/// One primitive application, with its response and per-model RMR charge.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct RmwEvent {
    pub seq: u64,
    pub process: ProcessId,
    pub txn: Option<TxnId>,
    /// Index of the transactional operation this event belongs to, within
    /// its transaction; `None` outside transactional operations.
    pub top: Option<u32>,
    pub object: BaseObjectId,
    pub primitive: PrimKind,
    pub operands: Vec<Value>,
    pub response: Value,
    pub rmr: RmrCost,
}

impl RmwEvent {
    pub fn tag(&self) -> EventTag {
        if self.txn.is_some() {
            EventTag::Tm
        } else {
            EventTag::NonTm
        }
    }

    pub fn op(&self) -> PrimitiveOp {
        PrimitiveOp {
            kind: self.primitive,
            operands: self.operands.clone(),
        }
    }
}

/// Structural markers recorded by step machines.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarkerKind {
    /// The process occupies its critical section (single marker event).
    CriticalSection,
    /// An entry/exit passage starts.
    PassageBegin,
    /// An entry/exit passage is complete.
    PassageEnd,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    Rmw(RmwEvent),
    /// Invocation of transactional operation `top` of `txn`.
    Inv {
        seq: u64,
        process: ProcessId,
        txn: TxnId,
        top: u32,
        call: TOpCall,
    },
    /// Response of transactional operation `top` of `txn`.
    Resp {
        seq: u64,
        process: ProcessId,
        txn: TxnId,
        top: u32,
        outcome: TOpOutcome,
    },
    Marker {
        seq: u64,
        process: ProcessId,
        kind: MarkerKind,
    },
    /// A scheduled process had no enabled event.
    Noop {
        seq: u64,
        process: ProcessId,
    },
}

impl Event {
    pub fn seq(&self) -> u64 {
        match self {
            Event::Rmw(e) => e.seq,
            Event::Inv { seq, .. }
            | Event::Resp { seq, .. }
            | Event::Marker { seq, .. }
            | Event::Noop { seq, .. } => *seq,
        }
    }

    pub fn process(&self) -> ProcessId {
        match self {
            Event::Rmw(e) => e.process,
            Event::Inv { process, .. }
            | Event::Resp { process, .. }
            | Event::Marker { process, .. }
            | Event::Noop { process, .. } => *process,
        }
    }

    pub fn txn(&self) -> Option<TxnId> {
        match self {
            Event::Rmw(e) => e.txn,
            Event::Inv { txn, .. } | Event::Resp { txn, .. } => Some(*txn),
            Event::Marker { .. } | Event::Noop { .. } => None,
        }
    }

    /// No-ops are scheduler bookkeeping, not steps of the model.
    pub fn is_model_event(&self) -> bool {
        !matches!(self, Event::Noop { .. })
    }

    pub fn as_rmw(&self) -> Option<&RmwEvent> {
        match self {
            Event::Rmw(e) => Some(e),
            _ => None,
        }
    }
}

/// Initial configuration and provenance of an execution.
#[derive(Clone, PartialEq, Eq, Debug, Default, Serialize, Deserialize)]
pub struct ExecutionMeta {
    pub initial: BTreeMap<BaseObjectId, Value>,
    pub models: Vec<MemModel>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub dsm_owner: BTreeMap<BaseObjectId, ProcessId>,
    /// Initial values of t-objects, when a TM was installed.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tobject_initial: BTreeMap<TObjectId, Value>,
    /// True when a scripted schedule was cut short by the step budget.
    #[serde(default)]
    pub truncated: bool,
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Execution {
    pub meta: ExecutionMeta,
    pub events: Vec<Event>,
}

impl Execution {
    pub fn rmw_events(&self) -> impl Iterator<Item = &RmwEvent> {
        self.events.iter().filter_map(Event::as_rmw)
    }

    /// Serialize as JSON lines: one meta record, then one record per event.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        #[derive(Serialize)]
        #[serde(tag = "type", rename = "meta")]
        struct MetaLine<'a> {
            #[serde(flatten)]
            meta: &'a ExecutionMeta,
        }
        serde_json::to_writer(&mut w, &MetaLine { meta: &self.meta })?;
        w.write_all(b"\n")?;
        for ev in &self.events {
            serde_json::to_writer(&mut w, ev)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("json is utf-8")
    }

    /// Parse the JSON-lines form. The leading meta record is optional; when
    /// absent the execution gets a default (empty) initial configuration.
    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Execution, LogParseError> {
        let mut meta = ExecutionMeta::default();
        let mut events = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line.map_err(|e| LogParseError::Io(e.to_string()))?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let v: serde_json::Value =
                serde_json::from_str(trimmed).map_err(|e| LogParseError::Json {
                    line: lineno + 1,
                    err: e.to_string(),
                })?;
            if v.get("type").and_then(|t| t.as_str()) == Some("meta") {
                meta = serde_json::from_value(v).map_err(|e| LogParseError::Json {
                    line: lineno + 1,
                    err: e.to_string(),
                })?;
            } else {
                let ev: Event = serde_json::from_value(v).map_err(|e| LogParseError::Json {
                    line: lineno + 1,
                    err: e.to_string(),
                })?;
                events.push(ev);
            }
        }
        Ok(Execution { meta, events })
    }
}

#[derive(Error, Debug)]
pub enum LogParseError {
    #[error("i/o error reading log: {0}")]
    Io(String),
    #[error("line {line}: {err}")]
    Json { line: usize, err: String },
}

#[derive(Error, Debug, PartialEq, Eq)]
pub enum ReplayError {
    #[error("event {seq}: response mismatch: recorded {recorded}, replayed {replayed}")]
    Response {
        seq: u64,
        recorded: Value,
        replayed: Value,
    },
    #[error("event {seq}: rmr mismatch: recorded {recorded:?}, replayed {replayed:?}")]
    Rmr {
        seq: u64,
        recorded: RmrCost,
        replayed: RmrCost,
    },
    #[error("event {seq}: attribution mismatch (txn/top tags disagree with markers)")]
    Attribution { seq: u64 },
    #[error("event {seq}: {err}")]
    Apply { seq: u64, err: String },
}

/// Re-simulate an execution from its recorded initial configuration and
/// check that every response, RMR charge, and transactional attribution is
/// reproduced.
pub fn verify_replay(exec: &Execution) -> Result<(), ReplayError> {
    use crate::sim::memory::{Memory, MemoryConfig};
    let cfg = MemoryConfig {
        objects: exec.meta.initial.clone().into_iter().collect(),
        models: exec.meta.models.iter().copied().collect(),
        dsm_owner: exec.meta.dsm_owner.clone(),
    };
    let mut mem = Memory::new(cfg).map_err(|e| ReplayError::Apply {
        seq: 0,
        err: e.to_string(),
    })?;
    // Track the open transactional operation per process to re-derive
    // attribution.
    let mut open: BTreeMap<ProcessId, (TxnId, u32)> = BTreeMap::new();
    for ev in &exec.events {
        match ev {
            Event::Inv {
                process, txn, top, ..
            } => {
                open.insert(*process, (*txn, *top));
            }
            Event::Resp { process, .. } => {
                open.remove(process);
            }
            Event::Marker { .. } | Event::Noop { .. } => {}
            Event::Rmw(e) => {
                let expected = open.get(&e.process).copied();
                let recorded = e.txn.map(|t| (t, e.top.unwrap_or(u32::MAX)));
                if expected != recorded {
                    return Err(ReplayError::Attribution { seq: e.seq });
                }
                let (txn, top) = match expected {
                    Some((t, i)) => (Some(t), Some(i)),
                    None => (None, None),
                };
                let replayed = mem
                    .apply_attributed(e.process, e.object, &e.op(), txn, top)
                    .map_err(|err| ReplayError::Apply {
                        seq: e.seq,
                        err: err.to_string(),
                    })?;
                if replayed.response != e.response {
                    return Err(ReplayError::Response {
                        seq: e.seq,
                        recorded: e.response.clone(),
                        replayed: replayed.response.clone(),
                    });
                }
                if replayed.rmr != e.rmr {
                    return Err(ReplayError::Rmr {
                        seq: e.seq,
                        recorded: e.rmr,
                        replayed: replayed.rmr,
                    });
                }
            }
        }
    }
    Ok(())
}
