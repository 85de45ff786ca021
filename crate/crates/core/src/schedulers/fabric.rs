//! Fabric and Fabric++ baselines.

use super::cycles::{elementary_cycles, topo_order, CycleLimits};
use super::{rw_edges, validation, ArrivalDecision, FormedBlock, PendingTxn, Policy, PolicyKind};
use crate::execution::ReadMode;
use crate::model::{Transaction, TxnStatus};
use crate::mvstore::MvStore;

/// Arrival order, version-check validation; simulations are protected from
/// concurrent commits by a lock.
#[derive(Debug, Default)]
pub struct Fabric {
    pending: Vec<PendingTxn>,
}

impl Policy for Fabric {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Fabric
    }

    fn read_mode(&self) -> ReadMode {
        ReadMode::Locked
    }

    fn on_arrival(&mut self, txn: &Transaction) -> ArrivalDecision {
        self.pending.push(PendingTxn::of(txn));
        ArrivalDecision::admit(1)
    }

    fn pending_len(&self) -> usize {
        self.pending.len()
    }

    fn on_block_formation(&mut self, _number: u64) -> FormedBlock {
        let order: Vec<_> = self.pending.drain(..).map(|p| p.id).collect();
        FormedBlock {
            cost: order.len() as u64,
            order,
            aborted: Vec::new(),
        }
    }

    fn validate(&self, block: &[Transaction], store: &MvStore) -> Vec<TxnStatus> {
        validation::fabric_validate(block, store)
    }
}

/// Reorders each block on its own: builds the reader-before-writer graph
/// of the block, enumerates its elementary cycles, aborts the transaction
/// sitting on most of them until none are left, and emits the survivors in
/// topological order. Simulations that read across a block commit are
/// aborted before ordering.
#[derive(Debug, Default)]
pub struct FabricPlusPlus {
    pending: Vec<PendingTxn>,
    limits: CycleLimits,
}

impl FabricPlusPlus {
    pub fn with_limits(limits: CycleLimits) -> Self {
        FabricPlusPlus {
            pending: Vec::new(),
            limits,
        }
    }
}

/// Greedy cycle breaking in batch mode. Returns the indices to abort and
/// the work spent.
pub(crate) fn break_cycles(adj: &[Vec<usize>], limits: CycleLimits) -> (Vec<usize>, u64) {
    let n = adj.len();
    let mut alive = vec![true; n];
    let mut aborted = Vec::new();
    let mut cost = adj.iter().map(|a| a.len() as u64).sum::<u64>();
    loop {
        let (cycles, steps) = elementary_cycles(adj, &alive, limits);
        cost += steps + cycles.iter().map(|c| c.len() as u64).sum::<u64>();
        if cycles.is_empty() {
            break;
        }
        let mut broken = vec![false; cycles.len()];
        loop {
            let mut count = vec![0usize; n];
            for (c, _) in cycles.iter().zip(&broken).filter(|(_, b)| !**b) {
                for &v in c {
                    count[v] += 1;
                }
            }
            // Most cycles first; ties go to the earliest arrival.
            let Some(victim) = (0..n)
                .filter(|&v| count[v] > 0)
                .max_by_key(|&v| (count[v], std::cmp::Reverse(v)))
            else {
                break;
            };
            alive[victim] = false;
            aborted.push(victim);
            for (c, b) in cycles.iter().zip(broken.iter_mut()) {
                if c.contains(&victim) {
                    *b = true;
                }
            }
        }
    }
    aborted.sort_unstable();
    (aborted, cost)
}

impl Policy for FabricPlusPlus {
    fn kind(&self) -> PolicyKind {
        PolicyKind::FabricPlusPlus
    }

    fn read_mode(&self) -> ReadMode {
        ReadMode::Latest
    }

    fn on_arrival(&mut self, txn: &Transaction) -> ArrivalDecision {
        self.pending.push(PendingTxn::of(txn));
        ArrivalDecision::admit(1)
    }

    fn pending_len(&self) -> usize {
        self.pending.len()
    }

    fn on_block_formation(&mut self, _number: u64) -> FormedBlock {
        let txns = std::mem::take(&mut self.pending);
        let adj = rw_edges(&txns);
        let (victims, cost) = break_cycles(&adj, self.limits);
        let mut alive = vec![true; txns.len()];
        for &v in &victims {
            alive[v] = false;
        }
        let order = topo_order(&adj, &alive);
        // Cycles the enumeration budget did not reach are dropped as well.
        let mut placed = alive;
        for &i in &order {
            placed[i] = false;
        }
        let mut victims = victims;
        victims.extend((0..txns.len()).filter(|&i| placed[i]));
        victims.sort_unstable();
        FormedBlock {
            order: order.into_iter().map(|i| txns[i].id).collect(),
            aborted: victims
                .into_iter()
                .map(|i| (txns[i].id, TxnStatus::AbortedUnreorderable))
                .collect(),
            cost: cost + txns.len() as u64,
        }
    }

    fn validate(&self, block: &[Transaction], store: &MvStore) -> Vec<TxnStatus> {
        validation::fabric_validate(block, store)
    }
}
