//! Resumable step machines: the unit the scheduler drives.
//!
//! A machine exposes the single event it is poised to perform next; the
//! simulation applies that event (a primitive on shared memory, or a marker
//! record) and feeds back the response. Machines must be deterministic and
//! `poised` must be stable: calling it repeatedly without `advance` returns
//! the same event. This is what lets checkers replay an execution and read
//! off what every transaction was poised to do at each configuration.

use crate::ids::{BaseObjectId, TxnId};
use crate::sim::event::MarkerKind;
use crate::sim::primitive::PrimitiveOp;
use crate::tm::ops::{TOpCall, TOpOutcome};
use crate::value::Value;

/// The next event a machine wants to perform.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Poised {
    /// Machine finished; scheduling it records a no-op.
    Done,
    /// Apply a primitive to a base object.
    Rmw {
        object: BaseObjectId,
        primitive: PrimitiveOp,
    },
    /// Invoke transactional operation `top` of `txn`.
    Invoke { txn: TxnId, top: u32, call: TOpCall },
    /// Respond to transactional operation `top` of `txn`.
    Respond {
        txn: TxnId,
        top: u32,
        outcome: TOpOutcome,
    },
    /// Record a structural marker.
    Marker(MarkerKind),
    /// The machine hit a host-level misuse (not a model outcome); the
    /// simulation surfaces it as an error.
    Fault(String),
}

pub trait StepMachine {
    /// The event this machine is poised to perform. Pure: must not change
    /// the machine and must be stable across calls.
    fn poised(&self) -> Poised;

    /// Advance past the poised event. `response` is `Some` for `Rmw` events
    /// (the primitive's response) and `None` for markers.
    fn advance(&mut self, response: Option<&Value>);

    fn is_done(&self) -> bool {
        matches!(self.poised(), Poised::Done)
    }
}

impl<M: StepMachine + ?Sized> StepMachine for Box<M> {
    fn poised(&self) -> Poised {
        (**self).poised()
    }

    fn advance(&mut self, response: Option<&Value>) {
        (**self).advance(response)
    }
}
