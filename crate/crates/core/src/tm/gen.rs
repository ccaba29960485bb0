//! Seeded random workload generation.
//!
//! Produces scripted workloads whose written values are globally unique,
//! so any serialization checker can tell apart which write a read
//! observed. The same seed and parameters always yield the same workload.

use crate::ids::{ProcessId, TObjectId, TxnId};
use crate::tm::ops::TOpCall;
use crate::tm::{ProcessScript, TxnScript, Workload};
use crate::value::Value;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct GenParams {
    pub processes: u32,
    pub txns_per_process: u32,
    /// Reads/writes per transaction; a commit attempt is appended.
    pub ops_per_txn: u32,
    pub tobjects: u32,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            processes: 2,
            txns_per_process: 2,
            ops_per_txn: 3,
            tobjects: 2,
        }
    }
}

/// Deterministically generate a workload: each transaction performs
/// `ops_per_txn` uniform reads/writes over the object space and then
/// attempts to commit. Transaction ids are unique across processes.
pub fn random_workload(params: &GenParams, seed: u64) -> Workload {
    let objects = params.tobjects.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tobjects: Vec<(TObjectId, Value)> = (0..objects)
        .map(|x| (TObjectId(x), Value::Int(0)))
        .collect();
    let mut next_value = 1_000i64;
    let mut processes = Vec::new();
    for p in 0..params.processes {
        let mut txns = Vec::new();
        for t in 0..params.txns_per_process {
            let txn = TxnId(1 + u64::from(p) * u64::from(params.txns_per_process) + u64::from(t));
            let mut ops = Vec::new();
            for _ in 0..params.ops_per_txn {
                let x = TObjectId(rng.random_range(0..objects));
                if rng.random_bool(0.5) {
                    ops.push(TOpCall::read(x));
                } else {
                    ops.push(TOpCall::write(x, next_value));
                    next_value += 1;
                }
            }
            ops.push(TOpCall::TryCommit);
            txns.push(TxnScript { txn, ops });
        }
        processes.push(ProcessScript {
            process: ProcessId(p),
            txns,
        });
    }
    let workload = Workload {
        tobjects,
        processes,
    };
    debug_assert!(workload.validate().is_ok());
    workload
}
