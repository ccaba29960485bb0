//! A transaction algorithm that aborts every operation without touching
//! memory. Useless on purpose: it satisfies the safety checkers vacuously
//! while violating every progress condition that forbids spurious aborts,
//! which is exactly what negative tests need.

use crate::ids::{ProcessId, TObjectId, TxnId};
use crate::sim::memory::{MemError, Memory};
use crate::tm::ops::{TOpCall, TOpOutcome};
use crate::tm::{TmAlgorithm, TxnLogic, TxnPoised};
use crate::value::Value;

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct AbortAllTm;

impl TmAlgorithm for AbortAllTm {
    type Txn = AbortAllTxn;

    const NAME: &'static str = "abort-all";

    fn setup(
        mem: &mut Memory,
        tobjects: &[(TObjectId, Value)],
        _owner: Option<ProcessId>,
    ) -> Result<Self, MemError> {
        for (x, init) in tobjects {
            mem.set_tobject_initial(*x, init.clone());
        }
        Ok(AbortAllTm)
    }

    fn begin(&self, _process: ProcessId, _txn: TxnId) -> AbortAllTxn {
        AbortAllTxn { in_op: false }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct AbortAllTxn {
    in_op: bool,
}

impl TxnLogic for AbortAllTxn {
    fn begin_op(&mut self, _call: &TOpCall) {
        self.in_op = true;
    }

    fn poised_op(&self) -> TxnPoised {
        if self.in_op {
            TxnPoised::Done(TOpOutcome::Aborted)
        } else {
            TxnPoised::Fault("no operation in flight".into())
        }
    }

    fn advance_op(&mut self, _response: &Value) {
        panic!("this algorithm never touches memory")
    }
}
