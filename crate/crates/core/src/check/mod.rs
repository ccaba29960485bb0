//! Correctness and progress checkers over histories and executions.
//!
//! Safety: [`serialize`] decides opacity and strict serializability and
//! produces replayable witnesses. Progress: [`progress`] pins every abort on
//! a conflict (and, in the strong form, on whole conflict groups),
//! [`seqprog`] runs sequential completion probes. Structure: [`invisible`]
//! verifies that reads leave no trace in memory, [`dap`] checks that
//! disjoint workloads stay disjoint in memory contention.

pub mod dap;
pub mod invisible;
pub mod progress;
pub mod seqprog;
pub mod serialize;

/// Refusal returned by the exhaustive checkers when a history exceeds their
/// transaction bound: the question is not answered rather than answered
/// approximately.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("history has {txns} transactions, exhaustive search bound is {bound}")]
pub struct BoundExceeded {
    pub txns: usize,
    pub bound: usize,
}
