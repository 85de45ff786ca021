//! The reordering policy built on the dependency graph.

use super::{validation, ArrivalDecision, FormedBlock, Policy, PolicyKind};
use crate::depgraph::{Admission, DepGraph, GraphConfig};
use crate::execution::ReadMode;
use crate::model::{Transaction, TxnStatus};
use crate::mvstore::MvStore;

/// Aborts unreorderable transactions on arrival and orders each block by a
/// topological sort of the dependency graph.
#[derive(Debug)]
pub struct Sharp {
    graph: DepGraph,
}

impl Sharp {
    pub fn new(cfg: GraphConfig) -> Self {
        Sharp {
            graph: DepGraph::new(cfg),
        }
    }

    pub fn with_graph(graph: DepGraph) -> Self {
        Sharp { graph }
    }

    pub fn graph_mut(&mut self) -> &mut DepGraph {
        &mut self.graph
    }
}

impl Policy for Sharp {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Sharp
    }

    fn read_mode(&self) -> ReadMode {
        ReadMode::Snapshot
    }

    fn on_arrival(&mut self, txn: &Transaction) -> ArrivalDecision {
        let before = self.graph.stats().work;
        let verdict = match self.graph.admit(txn) {
            Ok(a) => a,
            Err(e) => {
                log::error!("rejecting {}: {e}", txn.id);
                Admission::AbortedUnreorderable
            }
        };
        let cost = self.graph.stats().work - before + 1;
        match verdict {
            Admission::Reorderable => ArrivalDecision::admit(cost),
            other => ArrivalDecision::abort(other.status(), cost),
        }
    }

    fn pending_len(&self) -> usize {
        self.graph.pending_len()
    }

    fn on_block_formation(&mut self, number: u64) -> FormedBlock {
        let before = self.graph.stats().work;
        let order = self.graph.form_block();
        if !order.is_empty() {
            self.graph
                .commit_block(number, &order)
                .expect("formed block matches the graph");
        }
        FormedBlock {
            cost: self.graph.stats().work - before + order.len() as u64,
            order,
            aborted: Vec::new(),
        }
    }

    fn validate(&self, block: &[Transaction], store: &MvStore) -> Vec<TxnStatus> {
        validation::reordered_validate(block, store)
    }

    fn graph(&self) -> Option<&DepGraph> {
        Some(&self.graph)
    }
}
