//! A deterministic laboratory for shared-memory transactional memory.
//!
//! The crate simulates cooperatively scheduled processes that access base
//! objects through read-modify-write primitives. On top of the simulator it
//! provides:
//!
//! - two transactional memories implemented as resumable step machines
//!   ([`stm::OccTm`], a versioned-lock TM with invisible reads, and
//!   [`stm::SingleObjectTm`], a one-object TM built on a compare-and-swap
//!   cell), plus a deliberately unfair fixture ([`stm::AbortAllTm`]);
//! - derivation of transactional histories from executions plus checkers for
//!   serializability-style correctness and progress properties ([`check`]);
//! - harnesses that reproduce the adversarial execution families showing the
//!   quadratic validation cost and the linear final-read footprint of
//!   invisible-read TMs ([`lowerbound`]);
//! - a mutual-exclusion lock built from single-object transactions, with
//!   remote-memory-reference accounting under three memory models
//!   ([`mutex`]).
//!
//! Everything is single-threaded and deterministic: a seed plus a schedule
//! reproduces an execution event for event.

pub mod check;
pub mod cli;
pub mod ids;
pub mod lowerbound;
pub mod mutex;
pub mod report;
pub mod sim;
pub mod stm;
pub mod tm;
pub mod value;

pub use ids::{BaseObjectId, ProcessId, TObjectId, TxnId};
pub use value::Value;
