//! Exhaustive exploration of schedules over snapshotable machines.
//!
//! Two strategies:
//!
//! - [`explore_paths`] enumerates every interleaving of the machines' events
//!   (depth-first over scheduling choices) and hands each complete event
//!   sequence to a visitor. Used to check every interleaving of two
//!   transactions.
//! - [`explore_states`] walks the reachable state graph with deduplication
//!   (breadth-first), checking a safety predicate in every state. Spinning
//!   machines make path enumeration diverge, but their state graphs are
//!   finite, which is exactly the mutual-exclusion case. On violation the
//!   scheduler choices leading to the bad state are returned so a real
//!   simulation can replay them into a counterexample trace.
//!
//! Both run against [`MiniMem`], a value-only memory snapshot without RMR
//! bookkeeping: cache state never influences responses, so safety and
//! history checking are unaffected.

use crate::ids::{BaseObjectId, ProcessId, TxnId};
use crate::sim::event::{Event, RmwEvent};
use crate::sim::machine::{Poised, StepMachine};
use crate::sim::memory::Memory;
use crate::sim::primitive::{apply_primitive, PrimKind, PrimitiveOp};
use crate::sim::rmr::RmrCost;
use crate::value::Value;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::hash::Hash;

/// A value-only snapshot of shared memory, cheap to clone and hashable.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct MiniMem {
    values: BTreeMap<BaseObjectId, Value>,
    links: BTreeSet<(ProcessId, BaseObjectId)>,
}

impl MiniMem {
    pub fn from_memory(mem: &Memory) -> MiniMem {
        MiniMem {
            values: mem.objects().map(|(b, v)| (*b, v.clone())).collect(),
            links: BTreeSet::new(),
        }
    }

    pub fn from_values(values: BTreeMap<BaseObjectId, Value>) -> MiniMem {
        MiniMem {
            values,
            links: BTreeSet::new(),
        }
    }

    pub fn value(&self, object: BaseObjectId) -> &Value {
        &self.values[&object]
    }

    /// Apply a primitive and return its response. Panics on unknown objects:
    /// explorer machines only touch what they allocated.
    pub fn apply(&mut self, process: ProcessId, object: BaseObjectId, op: &PrimitiveOp) -> Value {
        let state = self
            .values
            .get(&object)
            .unwrap_or_else(|| panic!("explore: unknown object {object}"));
        let link_valid = self.links.contains(&(process, object));
        let applied = apply_primitive(op, state, link_valid)
            .unwrap_or_else(|e| panic!("explore: bad primitive on {object}: {e}"));
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
        self.values.insert(object, applied.new_state);
        applied.response
    }
}

/// Step one machine against a MiniMem, appending the event it performed.
/// Returns false if the machine was already done (no event emitted).
fn mini_step<M: StepMachine>(
    mem: &mut MiniMem,
    process: ProcessId,
    machine: &mut M,
    open_top: &mut BTreeMap<ProcessId, (TxnId, u32)>,
    seq: u64,
    out: &mut Vec<Event>,
) -> bool {
    match machine.poised() {
        Poised::Done => false,
        Poised::Fault(msg) => panic!("explore: machine fault on {process}: {msg}"),
        Poised::Rmw { object, primitive } => {
            let response = mem.apply(process, object, &primitive);
            let (txn, top) = match open_top.get(&process) {
                Some((t, i)) => (Some(*t), Some(*i)),
                None => (None, None),
            };
            out.push(Event::Rmw(RmwEvent {
                seq,
                process,
                txn,
                top,
                object,
                primitive: primitive.kind,
                operands: primitive.operands.clone(),
                response: response.clone(),
                rmr: RmrCost::default(),
            }));
            machine.advance(Some(&response));
            true
        }
        Poised::Invoke { txn, top, call } => {
            open_top.insert(process, (txn, top));
            out.push(Event::Inv {
                seq,
                process,
                txn,
                top,
                call,
            });
            machine.advance(None);
            true
        }
        Poised::Respond { txn, top, outcome } => {
            open_top.remove(&process);
            out.push(Event::Resp {
                seq,
                process,
                txn,
                top,
                outcome,
            });
            machine.advance(None);
            true
        }
        Poised::Marker(kind) => {
            out.push(Event::Marker { seq, process, kind });
            machine.advance(None);
            true
        }
    }
}

/// Enumerate every interleaving of the machines' event sequences, calling
/// `on_complete` with each full event log. Returns the number of complete
/// paths visited. Machines must terminate on every schedule (no spinning).
pub fn explore_paths<M: StepMachine + Clone>(
    mem: &MiniMem,
    machines: &BTreeMap<ProcessId, M>,
    on_complete: &mut dyn FnMut(&[Event]),
) -> u64 {
    let mut events = Vec::new();
    let mut open_top = BTreeMap::new();
    dfs_paths(mem, machines, &mut events, &mut open_top, on_complete)
}

fn dfs_paths<M: StepMachine + Clone>(
    mem: &MiniMem,
    machines: &BTreeMap<ProcessId, M>,
    events: &mut Vec<Event>,
    open_top: &mut BTreeMap<ProcessId, (TxnId, u32)>,
    on_complete: &mut dyn FnMut(&[Event]),
) -> u64 {
    let live: Vec<ProcessId> = machines
        .iter()
        .filter(|(_, m)| !m.is_done())
        .map(|(p, _)| *p)
        .collect();
    if live.is_empty() {
        on_complete(events);
        return 1;
    }
    let mut paths = 0;
    for p in live {
        let mut mem2 = mem.clone();
        let mut machines2 = machines.clone();
        let mut open2 = open_top.clone();
        let before = events.len();
        let stepped = mini_step(
            &mut mem2,
            p,
            machines2.get_mut(&p).unwrap(),
            &mut open2,
            before as u64,
            events,
        );
        debug_assert!(stepped);
        paths += dfs_paths(&mem2, &machines2, events, &mut open2, on_complete);
        events.truncate(before);
    }
    paths
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct ExploreStats {
    /// Distinct states visited.
    pub states: u64,
    /// Transitions taken (edges in the state graph).
    pub transitions: u64,
}

/// A safety violation found during state exploration: the scheduler choices
/// from the initial state that reach the violating state.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct StateViolation {
    pub schedule: Vec<ProcessId>,
}

/// Breadth-first exploration of the reachable state graph with state
/// deduplication. `check` must hold in every reachable state; on failure the
/// scheduling path to the bad state is returned. `max_states` bounds the
/// search (an error result, not silent truncation, when exceeded).
pub fn explore_states<M>(
    mem: &MiniMem,
    machines: &[(ProcessId, M)],
    max_states: u64,
    check: &mut dyn FnMut(&MiniMem, &[(ProcessId, M)]) -> bool,
) -> Result<Result<ExploreStats, StateViolation>, ExploreOverflow>
where
    M: StepMachine + Clone + Eq + Hash,
{
    type State<M> = (MiniMem, Vec<(ProcessId, M)>);
    let initial: State<M> = (mem.clone(), machines.to_vec());
    let mut index: HashMap<State<M>, usize> = HashMap::new();
    let mut parent: Vec<Option<(usize, ProcessId)>> = Vec::new();
    let mut queue: Vec<State<M>> = Vec::new();

    let reconstruct = |parent: &[Option<(usize, ProcessId)>], mut at: usize| {
        let mut schedule = Vec::new();
        while let Some((prev, p)) = parent[at] {
            schedule.push(p);
            at = prev;
        }
        schedule.reverse();
        StateViolation { schedule }
    };

    index.insert(initial.clone(), 0);
    parent.push(None);
    queue.push(initial);
    if !check(&queue[0].0, &queue[0].1) {
        return Ok(Err(reconstruct(&parent, 0)));
    }

    let mut cursor = 0;
    let mut transitions = 0;
    while cursor < queue.len() {
        let (mem_now, machines_now) = queue[cursor].clone();
        for (p, m) in machines_now.iter() {
            if m.is_done() {
                continue;
            }
            let mut mem2 = mem_now.clone();
            let mut machines2 = machines_now.clone();
            let mut open = BTreeMap::new();
            let mut sink = Vec::new();
            let slot = machines2.iter_mut().find(|(q, _)| q == p).unwrap();
            mini_step(&mut mem2, *p, &mut slot.1, &mut open, 0, &mut sink);
            transitions += 1;
            let next: State<M> = (mem2, machines2);
            if !index.contains_key(&next) {
                if queue.len() as u64 >= max_states {
                    return Err(ExploreOverflow {
                        max_states,
                        transitions,
                    });
                }
                let id = queue.len();
                index.insert(next.clone(), id);
                parent.push(Some((cursor, *p)));
                queue.push(next);
                if !check(&queue[id].0, &queue[id].1) {
                    return Ok(Err(reconstruct(&parent, id)));
                }
            }
        }
        cursor += 1;
    }
    Ok(Ok(ExploreStats {
        states: queue.len() as u64,
        transitions,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("state exploration exceeded {max_states} states after {transitions} transitions")]
pub struct ExploreOverflow {
    pub max_states: u64,
    pub transitions: u64,
}
