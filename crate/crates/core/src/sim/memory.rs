//! Simulated shared memory: base objects, primitive application, LL/SC link
//! tracking, the execution log, and RMR accounting.

use crate::ids::{BaseObjectId, ProcessId, TObjectId, TxnId};
use crate::sim::event::{Event, Execution, ExecutionMeta, MarkerKind, RmwEvent};
use crate::sim::primitive::{apply_primitive, is_nontrivial, PrimError, PrimKind, PrimitiveOp};
use crate::sim::rmr::{EventTag, MemModel, RmrFilter, RmrLedger, RmrReport};
use crate::tm::ops::{TOpCall, TOpOutcome};
use crate::value::Value;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Clone, Debug, Default)]
pub struct MemoryConfig {
    /// Base objects and their initial values. Ids must be distinct.
    pub objects: Vec<(BaseObjectId, Value)>,
    /// Memory models to account RMRs for.
    pub models: BTreeSet<MemModel>,
    /// Home process per object; required for every object when DSM is active.
    pub dsm_owner: BTreeMap<BaseObjectId, ProcessId>,
}

impl MemoryConfig {
    pub fn all_models() -> BTreeSet<MemModel> {
        MemModel::ALL.into_iter().collect()
    }
}

#[derive(Error, Debug, PartialEq, Eq)]
pub enum MemError {
    #[error("duplicate base object id {0}")]
    DuplicateObject(BaseObjectId),
    #[error("dsm model active but object {0} has no owner")]
    MissingDsmOwner(BaseObjectId),
    #[error("unknown base object {0}")]
    UnknownObject(BaseObjectId),
    #[error("primitive error on {object}: {err}")]
    Primitive {
        object: BaseObjectId,
        err: PrimError,
    },
}

/// Shared memory plus the execution log it accumulates.
///
/// All accesses funnel through [`Memory::apply_attributed`]; the memory owns
/// the event sequence numbering, the LL/SC link state, and the RMR ledger.
#[derive(Clone, Debug)]
pub struct Memory {
    values: BTreeMap<BaseObjectId, Value>,
    /// (process, object) pairs holding a valid load-link.
    links: BTreeSet<(ProcessId, BaseObjectId)>,
    ledger: RmrLedger,
    log: Vec<Event>,
    seq: u64,
    initial: BTreeMap<BaseObjectId, Value>,
    tobject_initial: BTreeMap<TObjectId, Value>,
    truncated: bool,
}

impl Memory {
    pub fn new(cfg: MemoryConfig) -> Result<Memory, MemError> {
        let mut values = BTreeMap::new();
        for (id, v) in &cfg.objects {
            if values.insert(*id, v.clone()).is_some() {
                return Err(MemError::DuplicateObject(*id));
            }
        }
        if cfg.models.contains(&MemModel::Dsm) {
            for id in values.keys() {
                if !cfg.dsm_owner.contains_key(id) {
                    return Err(MemError::MissingDsmOwner(*id));
                }
            }
        }
        Ok(Memory {
            initial: values.clone(),
            values,
            links: BTreeSet::new(),
            ledger: RmrLedger::new(cfg.models, cfg.dsm_owner),
            log: Vec::new(),
            seq: 0,
            tobject_initial: BTreeMap::new(),
            truncated: false,
        })
    }

    /// Allocate a fresh base object. The id is the smallest unused index.
    /// An owner is required when the DSM model is active.
    pub fn alloc(
        &mut self,
        value: Value,
        owner: Option<ProcessId>,
    ) -> Result<BaseObjectId, MemError> {
        let id = BaseObjectId(self.values.keys().last().map(|b| b.0 + 1).unwrap_or(0));
        match owner {
            Some(p) => self.ledger.set_owner(id, p),
            None => {
                if self.ledger.active_models().contains(&MemModel::Dsm) {
                    return Err(MemError::MissingDsmOwner(id));
                }
            }
        }
        self.values.insert(id, value.clone());
        self.initial.insert(id, value);
        Ok(id)
    }

    pub fn value(&self, object: BaseObjectId) -> Option<&Value> {
        self.values.get(&object)
    }

    pub fn objects(&self) -> impl Iterator<Item = (&BaseObjectId, &Value)> {
        self.values.iter()
    }

    pub fn models(&self) -> &BTreeSet<MemModel> {
        self.ledger.active_models()
    }

    /// Record the initial value of a t-object (TM installation bookkeeping;
    /// travels in the execution meta so checkers can judge read legality).
    pub fn set_tobject_initial(&mut self, x: TObjectId, v: Value) {
        self.tobject_initial.insert(x, v);
    }

    pub fn mark_truncated(&mut self) {
        self.truncated = true;
    }

    /// Apply a primitive as `process`, outside any transactional operation.
    pub fn apply(
        &mut self,
        process: ProcessId,
        object: BaseObjectId,
        op: &PrimitiveOp,
    ) -> Result<RmwEvent, MemError> {
        self.apply_attributed(process, object, op, None, None)
    }

    /// Apply a primitive with transactional attribution. The event is
    /// appended to the log and returned.
    pub fn apply_attributed(
        &mut self,
        process: ProcessId,
        object: BaseObjectId,
        op: &PrimitiveOp,
        txn: Option<TxnId>,
        top: Option<u32>,
    ) -> Result<RmwEvent, MemError> {
        let state = self
            .values
            .get(&object)
            .ok_or(MemError::UnknownObject(object))?;
        let link_valid = self.links.contains(&(process, object));
        let applied = apply_primitive(op, state, link_valid)
            .map_err(|err| MemError::Primitive { object, err })?;

        // Link bookkeeping: LL establishes the caller's link; any write-class
        // primitive (including a failed CAS, which still reaches the memory)
        // breaks every link on the object. SC consumes the caller's link.
        match op.kind {
            PrimKind::Ll => {
                self.links.insert((process, object));
            }
            PrimKind::Write | PrimKind::Cas | PrimKind::FetchAdd => {
                self.links.retain(|(_, b)| *b != object);
            }
            PrimKind::Sc => {
                self.links.retain(|(p, b)| *b != object || *p != process);
                if applied.response == Value::Bool(true) {
                    self.links.retain(|(_, b)| *b != object);
                }
            }
            PrimKind::Read => {}
        }

        let tag = if txn.is_some() {
            EventTag::Tm
        } else {
            EventTag::NonTm
        };
        let rmr = self
            .ledger
            .charge(process, object, is_nontrivial(op.kind), tag);
        self.values.insert(object, applied.new_state);
        let event = RmwEvent {
            seq: self.next_seq(),
            process,
            txn,
            top,
            object,
            primitive: op.kind,
            operands: op.operands.clone(),
            response: applied.response,
            rmr,
        };
        self.log.push(Event::Rmw(event.clone()));
        Ok(event)
    }

    pub fn push_inv(&mut self, process: ProcessId, txn: TxnId, top: u32, call: TOpCall) {
        let seq = self.next_seq();
        self.log.push(Event::Inv {
            seq,
            process,
            txn,
            top,
            call,
        });
    }

    pub fn push_resp(&mut self, process: ProcessId, txn: TxnId, top: u32, outcome: TOpOutcome) {
        let seq = self.next_seq();
        self.log.push(Event::Resp {
            seq,
            process,
            txn,
            top,
            outcome,
        });
    }

    pub fn push_marker(&mut self, process: ProcessId, kind: MarkerKind) {
        let seq = self.next_seq();
        self.log.push(Event::Marker { seq, process, kind });
    }

    pub fn push_noop(&mut self, process: ProcessId) {
        let seq = self.next_seq();
        self.log.push(Event::Noop { seq, process });
    }

    fn next_seq(&mut self) -> u64 {
        let s = self.seq;
        self.seq += 1;
        s
    }

    pub fn log(&self) -> &[Event] {
        &self.log
    }

    pub fn rmr_report(&self, filter: RmrFilter) -> RmrReport {
        self.ledger.report(filter)
    }

    pub fn ledger(&self) -> &RmrLedger {
        &self.ledger
    }

    /// Snapshot the accumulated log as an execution.
    pub fn to_execution(&self) -> Execution {
        Execution {
            meta: ExecutionMeta {
                initial: self.initial.clone(),
                models: self.ledger.active_models().iter().copied().collect(),
                dsm_owner: self.ledger.dsm_owner().clone(),
                tobject_initial: self.tobject_initial.clone(),
                truncated: self.truncated,
            },
            events: self.log.clone(),
        }
    }
}
