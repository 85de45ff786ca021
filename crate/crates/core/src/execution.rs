//! Endorsement: simulating a proposal against a pinned block snapshot.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Transaction, TxnId, Value, Version};
use crate::mvstore::{MvStore, SnapshotHandle, StoreError};
use crate::workload::{smallbank_contract, ContractError, Proposal, StateView};

/// Which state a policy lets simulations read.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadMode {
    /// All reads from the snapshot current when simulation started.
    Snapshot,
    /// Reads from the latest state; a block committing between the first and
    /// the last read makes the simulation read across blocks.
    Latest,
    /// Reads hold a lock against commits: a simulation overlapped by a commit
    /// is re-run against the new latest state.
    Locked,
}

#[derive(Debug, Error)]
pub enum ExecError {
    #[error(transparent)]
    Contract(#[from] ContractError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Endorsement {
    pub txn: Transaction,
    pub sim_block: u64,
    pub finish_tick: u64,
}

/// Ticks a simulation of `p` takes.
pub fn duration(p: &Proposal, read_interval: u64) -> u64 {
    p.call.read_count() as u64 * read_interval
}

/// Tick of the first and the last read of a simulation starting at `now`.
pub fn read_window(p: &Proposal, now: u64, read_interval: u64) -> Option<(u64, u64)> {
    let n = p.call.read_count() as u64;
    (n > 0).then(|| (now, now + (n - 1) * read_interval))
}

struct Pinned<'a> {
    handle: &'a SnapshotHandle,
    err: Option<StoreError>,
}

impl StateView for Pinned<'_> {
    fn get(&mut self, key: &str) -> Option<(Version, Value)> {
        match self.handle.read(key) {
            Ok(v) => v,
            Err(e) => {
                self.err.get_or_insert(e);
                None
            }
        }
    }
}

/// Runs the contract of `p` against the snapshot behind `handle`.
pub fn simulate_on(
    handle: &SnapshotHandle,
    p: &Proposal,
    now: u64,
    read_interval: u64,
) -> Result<Endorsement, ExecError> {
    let mut view = Pinned { handle, err: None };
    let fx = smallbank_contract(&p.call, &mut view);
    if let Some(e) = view.err {
        return Err(e.into());
    }
    let fx = fx?;
    let mut txn = Transaction::new(p.id, handle.seq());
    txn.readset = fx.readset;
    txn.writeset = fx.writeset;
    Ok(Endorsement {
        txn,
        sim_block: handle.block(),
        finish_tick: now + duration(p, read_interval),
    })
}

/// Single-endorser execution service over a store.
#[derive(Clone, Debug)]
pub struct Executor {
    store: MvStore,
    read_interval: u64,
}

impl Executor {
    pub fn new(store: MvStore, read_interval: u64) -> Self {
        Executor { store, read_interval }
    }

    /// Pins the latest snapshot and simulates `p` against it.
    pub fn simulate(&self, p: &Proposal, now: u64) -> Result<Endorsement, ExecError> {
        let handle = self.store.pin_latest();
        simulate_on(&handle, p, now, self.read_interval)
    }
}

/// An endorsed transaction reaching the orderer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ArrivalEvent {
    pub tick: u64,
    pub id: TxnId,
}

impl Ord for ArrivalEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.tick, self.id).cmp(&(other.tick, other.id))
    }
}

impl PartialOrd for ArrivalEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Arrival of `e` at the orderer: the simulation finish plus the client's
/// broadcast delay and any per-proposal extra delay.
pub fn dispatch_to_ordering(e: &Endorsement, client_delay: u64, extra_delay: u64) -> ArrivalEvent {
    ArrivalEvent {
        tick: e.finish_tick + client_delay + extra_delay,
        id: e.txn.id,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Key, SeqNum};
    use crate::workload::ContractCall;
    use std::collections::BTreeMap;
    use std::sync::Arc;

    fn fig2a() -> MvStore {
        let s = MvStore::new();
        s.preload([(Key::from("A"), 0), (Key::from("B"), 0)]).unwrap();
        let b1: BTreeMap<Key, Value> = [(Key::from("A"), 100)].into_iter().collect();
        let b1b: BTreeMap<Key, Value> = [(Key::from("B"), 102)].into_iter().collect();
        s.apply_block(1, [(1, &b1), (2, &b1b)]).unwrap();
        let b2: BTreeMap<Key, Value> = [(Key::from("B"), 202), (Key::from("C"), 201)].into_iter().collect();
        s.apply_block(2, [(1, &b2)]).unwrap();
        s
    }

    fn rw(reads: &[&str]) -> ContractCall {
        ContractCall::ReadWrite {
            reads: reads.iter().map(|k| Arc::from(*k)).collect(),
            writes: [(Key::from("C"), 1)].into_iter().collect(),
        }
    }

    #[test]
    fn readset_matches_snapshot() {
        let s = fig2a();
        let ex = Executor::new(s.clone(), 0);
        let e = ex.simulate(&Proposal::new(1, 0, rw(&["B", "C"])), 60).unwrap();
        assert_eq!(e.txn.start_ts, SeqNum::new(3, 0));
        assert_eq!(e.sim_block, 2);
        for (k, v) in &e.txn.readset {
            assert_eq!(Some(*v), s.version_at(2, k));
        }
        assert_eq!(e.txn.readset[&Key::from("B")], SeqNum::new(2, 1));
        assert_eq!(e.finish_tick, 60);
    }

    #[test]
    fn finish_tick_counts_reads() {
        let s = fig2a();
        let ex = Executor::new(s, 5);
        let e = ex.simulate(&Proposal::new(1, 0, rw(&["A", "B", "C"])), 10).unwrap();
        assert_eq!(e.finish_tick, 25);
        assert_eq!(
            read_window(&Proposal::new(1, 0, rw(&["A", "B", "C"])), 10, 5),
            Some((10, 20))
        );
    }

    #[test]
    fn pinned_snapshot_survives_commits() {
        let s = fig2a();
        let h = s.pin(1).unwrap();
        let b3: BTreeMap<Key, Value> = [(Key::from("B"), 300)].into_iter().collect();
        s.apply_block(3, [(1, &b3)]).unwrap();
        let e = simulate_on(&h, &Proposal::new(2, 0, rw(&["A", "B"])), 0, 10).unwrap();
        assert_eq!(e.txn.readset[&Key::from("B")], SeqNum::new(1, 2));
        assert_eq!(e.txn.start_ts, SeqNum::new(2, 0));
    }

    #[test]
    fn application_error_surfaces() {
        let s = MvStore::new();
        let ex = Executor::new(s, 0);
        let r = ex.simulate(&Proposal::new(1, 0, ContractCall::QueryAccount { account: 3 }), 0);
        assert!(matches!(r, Err(ExecError::Contract(_))));
    }

    #[test]
    fn dispatch_adds_delays() {
        let s = fig2a();
        let ex = Executor::new(s, 0);
        let e = ex.simulate(&Proposal::new(4, 0, rw(&["A"])), 50).unwrap();
        assert_eq!(dispatch_to_ordering(&e, 0, 0).tick, 50);
        assert_eq!(dispatch_to_ordering(&e, 100, 0).tick, 150);
        let a = ArrivalEvent { tick: 5, id: TxnId(2) };
        let b = ArrivalEvent { tick: 5, id: TxnId(1) };
        assert!(b < a);
    }
}
