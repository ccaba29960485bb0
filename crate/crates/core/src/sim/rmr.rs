//! Remote-memory-reference accounting under three memory models.
//!
//! Every primitive application is classified as a read access (trivial
//! primitive) or a write access (nontrivial primitive — a failed CAS/SC still
//! travels to memory) and charged under each active model:
//!
//! - **Write-through cache-coherent**: a read is local iff the reader holds a
//!   cached copy that has not been invalidated since its previous read.
//!   Every write is an RMR; it writes through to memory and invalidates all
//!   *other* processes' copies. Writes do not create a cached copy.
//! - **Write-back cache-coherent**: a read is local iff the reader's copy is
//!   in shared or exclusive mode; otherwise it is an RMR that invalidates
//!   copies held in exclusive mode elsewhere and installs a shared copy. A
//!   write is local iff the writer holds the copy in exclusive mode;
//!   otherwise it is an RMR that invalidates every other copy and installs
//!   an exclusive one.
//! - **Distributed shared memory**: each object lives at one owner process;
//!   any access by a non-owner is an RMR. No caching.
//!
//! Caches are unbounded and start empty, so a process's first access to an
//! object is always remote under the cache-coherent models.

use crate::ids::{BaseObjectId, ProcessId};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemModel {
    WriteThrough,
    WriteBack,
    Dsm,
}

impl MemModel {
    pub const ALL: [MemModel; 3] = [MemModel::WriteThrough, MemModel::WriteBack, MemModel::Dsm];
}

impl fmt::Display for MemModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MemModel::WriteThrough => "write-through",
            MemModel::WriteBack => "write-back",
            MemModel::Dsm => "dsm",
        };
        f.write_str(s)
    }
}

/// Whether an event was issued inside a transactional operation.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventTag {
    Tm,
    NonTm,
}

/// Which events an RMR report aggregates.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RmrFilter {
    All,
    TmOnly,
    NonTmOnly,
}

/// Per-event RMR charge, one 0/1 entry per model (0 for inactive models).
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default, Serialize, Deserialize)]
pub struct RmrCost {
    pub wt: u32,
    pub wb: u32,
    pub dsm: u32,
}

impl RmrCost {
    pub fn for_model(&self, model: MemModel) -> u32 {
        match model {
            MemModel::WriteThrough => self.wt,
            MemModel::WriteBack => self.wb,
            MemModel::Dsm => self.dsm,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum WbMode {
    Shared,
    Exclusive,
}

/// Cache and ownership state plus accumulated per-process counters.
#[derive(Clone, Debug)]
pub struct RmrLedger {
    active: BTreeSet<MemModel>,
    /// Write-through: the set of (process, object) pairs holding a valid copy.
    wt_valid: BTreeSet<(ProcessId, BaseObjectId)>,
    /// Write-back: cache mode per (process, object); absent = invalid.
    wb_mode: BTreeMap<(ProcessId, BaseObjectId), WbMode>,
    dsm_owner: BTreeMap<BaseObjectId, ProcessId>,
    counts: BTreeMap<(MemModel, ProcessId, EventTag), u64>,
}

impl RmrLedger {
    pub fn new(active: BTreeSet<MemModel>, dsm_owner: BTreeMap<BaseObjectId, ProcessId>) -> Self {
        RmrLedger {
            active,
            wt_valid: BTreeSet::new(),
            wb_mode: BTreeMap::new(),
            dsm_owner,
            counts: BTreeMap::new(),
        }
    }

    pub fn active_models(&self) -> &BTreeSet<MemModel> {
        &self.active
    }

    pub fn dsm_owner(&self) -> &BTreeMap<BaseObjectId, ProcessId> {
        &self.dsm_owner
    }

    pub fn set_owner(&mut self, object: BaseObjectId, owner: ProcessId) {
        self.dsm_owner.insert(object, owner);
    }

    /// Charge one access and update cache state. `is_write` is the access
    /// class (nontrivial primitive), `tag` the TM attribution of the event.
    pub fn charge(
        &mut self,
        process: ProcessId,
        object: BaseObjectId,
        is_write: bool,
        tag: EventTag,
    ) -> RmrCost {
        let mut cost = RmrCost::default();
        if self.active.contains(&MemModel::WriteThrough) {
            cost.wt = self.charge_write_through(process, object, is_write);
        }
        if self.active.contains(&MemModel::WriteBack) {
            cost.wb = self.charge_write_back(process, object, is_write);
        }
        if self.active.contains(&MemModel::Dsm) {
            cost.dsm = self.charge_dsm(process, object, is_write);
        }
        for model in MemModel::ALL {
            let c = cost.for_model(model);
            if c > 0 {
                *self.counts.entry((model, process, tag)).or_insert(0) += u64::from(c);
            }
        }
        cost
    }

    fn charge_write_through(
        &mut self,
        process: ProcessId,
        object: BaseObjectId,
        is_write: bool,
    ) -> u32 {
        if is_write {
            // Every write goes to memory and invalidates the other copies;
            // the writer's own copy (if any) stays consistent because the
            // write goes through it.
            self.wt_valid.retain(|(p, b)| *b != object || *p == process);
            1
        } else if self.wt_valid.contains(&(process, object)) {
            0
        } else {
            self.wt_valid.insert((process, object));
            1
        }
    }

    fn charge_write_back(
        &mut self,
        process: ProcessId,
        object: BaseObjectId,
        is_write: bool,
    ) -> u32 {
        let own = self.wb_mode.get(&(process, object)).copied();
        let cost = if is_write {
            match own {
                Some(WbMode::Exclusive) => 0,
                _ => {
                    // Fetch exclusive: every other copy is invalidated.
                    self.wb_mode
                        .retain(|(p, b), _| *b != object || *p == process);
                    self.wb_mode.insert((process, object), WbMode::Exclusive);
                    1
                }
            }
        } else {
            match own {
                Some(_) => 0,
                None => {
                    // Fetch shared: exclusive copies elsewhere are written
                    // back and invalidated; shared copies survive.
                    self.wb_mode.retain(|(p, b), m| {
                        *b != object || *p == process || *m != WbMode::Exclusive
                    });
                    self.wb_mode.insert((process, object), WbMode::Shared);
                    1
                }
            }
        };
        debug_assert!(self.wb_exclusive_is_sole(object));
        cost
    }

    /// An exclusive copy coexists with no other copy of the same object.
    fn wb_exclusive_is_sole(&self, object: BaseObjectId) -> bool {
        let holders: Vec<_> = self
            .wb_mode
            .iter()
            .filter(|((_, b), _)| *b == object)
            .collect();
        let exclusive = holders
            .iter()
            .filter(|(_, m)| **m == WbMode::Exclusive)
            .count();
        exclusive == 0 || holders.len() == 1
    }

    fn charge_dsm(&mut self, process: ProcessId, object: BaseObjectId, _is_write: bool) -> u32 {
        match self.dsm_owner.get(&object) {
            Some(owner) if *owner == process => 0,
            _ => 1,
        }
    }

    pub fn count(&self, model: MemModel, process: ProcessId, tag: EventTag) -> u64 {
        self.counts
            .get(&(model, process, tag))
            .copied()
            .unwrap_or(0)
    }

    pub fn report(&self, filter: RmrFilter) -> RmrReport {
        let mut rows = Vec::new();
        let mut totals: BTreeMap<MemModel, u64> = BTreeMap::new();
        let processes: BTreeSet<ProcessId> = self.counts.keys().map(|(_, p, _)| *p).collect();
        for model in MemModel::ALL {
            if !self.active.contains(&model) {
                continue;
            }
            totals.insert(model, 0);
            for &process in &processes {
                let tm = self.count(model, process, EventTag::Tm);
                let non_tm = self.count(model, process, EventTag::NonTm);
                let rmrs = match filter {
                    RmrFilter::All => tm + non_tm,
                    RmrFilter::TmOnly => tm,
                    RmrFilter::NonTmOnly => non_tm,
                };
                if tm + non_tm > 0 {
                    rows.push(RmrRow {
                        model,
                        process,
                        rmrs,
                    });
                }
                *totals.get_mut(&model).unwrap() += rmrs;
            }
        }
        RmrReport {
            filter,
            rows,
            totals,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RmrRow {
    pub model: MemModel,
    pub process: ProcessId,
    pub rmrs: u64,
}

/// Aggregated RMR counts, split per model and process under the chosen
/// filter. Row order is deterministic (model, then process).
#[derive(Clone, Debug, Serialize)]
pub struct RmrReport {
    pub filter: RmrFilter,
    pub rows: Vec<RmrRow>,
    pub totals: BTreeMap<MemModel, u64>,
}

impl RmrReport {
    pub fn total(&self, model: MemModel) -> u64 {
        self.totals.get(&model).copied().unwrap_or(0)
    }
}
