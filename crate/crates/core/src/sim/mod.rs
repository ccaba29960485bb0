//! Deterministic shared-memory simulator: base objects accessed through
//! atomic read-modify-write primitives, cooperatively scheduled step
//! machines, execution logs, and RMR accounting under three memory models.

pub mod event;
pub mod explore;
pub mod machine;
pub mod memory;
pub mod primitive;
pub mod rmr;
pub mod schedule;
#[allow(clippy::module_inception)]
pub mod sim;

pub use event::{verify_replay, Event, Execution, ExecutionMeta, MarkerKind, RmwEvent};
pub use machine::{Poised, StepMachine};
pub use memory::{MemError, Memory, MemoryConfig};
pub use primitive::{
    apply_primitive, is_conditional, is_nontrivial, is_trivial, PrimKind, PrimitiveOp,
};
pub use rmr::{EventTag, MemModel, RmrCost, RmrFilter, RmrLedger, RmrReport};
pub use schedule::{format_schedule, parse_schedule, Schedule, ScheduleMode, ScheduleParseError};
pub use sim::{RunSummary, SimError, Simulation, Stepped};
