//! Concurrency-control policies plugged into the pipeline.

mod cycles;
mod fabric;
mod focc;
mod sharp;
pub mod validation;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::depgraph::{DepGraph, GraphConfig, GraphStats};
use crate::execution::ReadMode;
use crate::model::{Transaction, TxnId, TxnStatus};
use crate::mvstore::MvStore;

pub use cycles::{elementary_cycles, strongly_connected, CycleLimits};
pub use fabric::{Fabric, FabricPlusPlus};
pub use focc::{FoccL, FoccS};
pub use sharp::Sharp;
pub use validation::{fabric_validate, reordered_validate, snapshot_validate};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PolicyKind {
    #[serde(rename = "fabric")]
    Fabric,
    #[serde(rename = "fabricpp")]
    FabricPlusPlus,
    #[serde(rename = "focc-s")]
    FoccS,
    #[serde(rename = "focc-l")]
    FoccL,
    #[serde(rename = "sharp")]
    Sharp,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::Fabric,
        PolicyKind::FabricPlusPlus,
        PolicyKind::FoccS,
        PolicyKind::FoccL,
        PolicyKind::Sharp,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Fabric => "fabric",
            PolicyKind::FabricPlusPlus => "fabricpp",
            PolicyKind::FoccS => "focc-s",
            PolicyKind::FoccL => "focc-l",
            PolicyKind::Sharp => "sharp",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown policy `{s}` (expected fabric, fabricpp, focc-s, focc-l or sharp)"))
    }
}

/// Outcome of the arrival hook.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ArrivalDecision {
    /// `None` if the transaction joined the pending set.
    pub abort: Option<TxnStatus>,
    /// Abstract work units spent deciding.
    pub cost: u64,
}

impl ArrivalDecision {
    pub fn admit(cost: u64) -> Self {
        ArrivalDecision { abort: None, cost }
    }

    pub fn abort(status: TxnStatus, cost: u64) -> Self {
        ArrivalDecision {
            abort: Some(status),
            cost,
        }
    }
}

/// Outcome of the block-formation hook.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FormedBlock {
    pub order: Vec<TxnId>,
    pub aborted: Vec<(TxnId, TxnStatus)>,
    pub cost: u64,
}

pub trait Policy: Send {
    fn kind(&self) -> PolicyKind;

    fn read_mode(&self) -> ReadMode;

    /// Called for each endorsed transaction in consensus order.
    fn on_arrival(&mut self, txn: &Transaction) -> ArrivalDecision;

    fn pending_len(&self) -> usize;

    /// Orders the pending set into block `number`. Every pending transaction
    /// ends up either in `order` or in `aborted`.
    fn on_block_formation(&mut self, number: u64) -> FormedBlock;

    /// Per-transaction validation outcome for a formed block whose end
    /// timestamps are set. `store` holds the state before the block.
    fn validate(&self, block: &[Transaction], store: &MvStore) -> Vec<TxnStatus>;

    fn graph(&self) -> Option<&DepGraph> {
        None
    }

    fn graph_stats(&self) -> Option<GraphStats> {
        self.graph().map(|g| g.stats().clone())
    }
}

/// Builds a policy. `graph` configures the dependency graph of the sharp
/// policy; `max_span` also bounds focc-s snapshots.
pub fn make_policy(kind: PolicyKind, graph: GraphConfig) -> Box<dyn Policy> {
    match kind {
        PolicyKind::Fabric => Box::new(Fabric::default()),
        PolicyKind::FabricPlusPlus => Box::new(FabricPlusPlus::default()),
        PolicyKind::FoccS => Box::new(FoccS::new(graph.max_span)),
        PolicyKind::FoccL => Box::new(FoccL::default()),
        PolicyKind::Sharp => Box::new(Sharp::new(graph)),
    }
}

/// Key sets of a pending transaction, kept by the baselines.
#[derive(Clone, Debug)]
pub(crate) struct PendingTxn {
    pub id: TxnId,
    pub reads: Vec<crate::model::Key>,
    pub writes: Vec<crate::model::Key>,
}

impl PendingTxn {
    pub fn of(t: &Transaction) -> Self {
        PendingTxn {
            id: t.id,
            reads: t.readset.keys().cloned().collect(),
            writes: t.writeset.keys().cloned().collect(),
        }
    }
}

/// Reader-before-writer edges among `txns`, as adjacency lists over indices.
pub(crate) fn rw_edges(txns: &[PendingTxn]) -> Vec<Vec<usize>> {
    use std::collections::HashMap;
    let mut writers: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, t) in txns.iter().enumerate() {
        for k in &t.writes {
            writers.entry(k).or_default().push(i);
        }
    }
    let mut adj = vec![Vec::new(); txns.len()];
    for (i, t) in txns.iter().enumerate() {
        for k in &t.reads {
            for &w in writers.get(&**k).into_iter().flatten() {
                if w != i {
                    adj[i].push(w);
                }
            }
        }
        adj[i].sort_unstable();
        adj[i].dedup();
    }
    adj
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policy_names_round_trip() {
        for k in PolicyKind::ALL {
            assert_eq!(k.as_str().parse::<PolicyKind>().unwrap(), k);
            let json = serde_json::to_string(&k).unwrap();
            assert_eq!(json, format!("\"{}\"", k.as_str()));
        }
        assert!("fabric+".parse::<PolicyKind>().is_err());
    }
}
