//! Transaction algorithms implemented over the simulated memory.
//!
//! - [`OccTm`]: deferred-update optimistic concurrency with per-object
//!   version locks. Reads are invisible (loads only) and re-validate the
//!   whole read set, so every forced abort points at a concurrent
//!   conflicting transaction.
//! - [`SingleObjectTm`]: transactions over exactly one object, committed
//!   with a single compare-and-swap. Within any group of transactions
//!   contending on one object, some transaction always commits.
//! - [`AbortAllTm`]: aborts every operation; a deliberately unfair fixture
//!   for exercising the progress checkers.

pub mod abort_all;
pub mod occ;
pub mod single;

pub use abort_all::AbortAllTm;
pub use occ::OccTm;
pub use single::SingleObjectTm;
