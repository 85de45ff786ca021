//! Wall-clock micro-benchmark of the ordering side: arrival checks and
//! block formation on the dependency graph, without the event loop.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use serde::Serialize;

use super::{ConfigError, SimConfig};
use crate::depgraph::{DepGraph, GraphStats};
use crate::execution::simulate_on;
use crate::model::{Transaction, TxnId};
use crate::mvstore::MvStore;
use crate::workload::generate;

#[derive(Clone, Debug, Serialize)]
pub struct BenchResult {
    /// Arrival checks plus block formations.
    pub ops: u64,
    pub admitted: u64,
    pub blocks: u64,
    #[serde(serialize_with = "as_secs")]
    pub elapsed: Duration,
    pub ops_per_minute: f64,
    pub graph: GraphStats,
}

fn as_secs<S: serde::Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

/// Feeds `cfg.txns` generated transactions through a dependency graph in
/// batches of `cfg.block_size`. Each batch is simulated against the state
/// `lag` blocks behind the latest, so consecutive batches overlap. Only
/// graph work is timed.
pub fn bench(cfg: &SimConfig, lag: u64) -> Result<BenchResult, ConfigError> {
    cfg.validate()?;
    let trace = generate(&cfg.workload, cfg.seed, cfg.txns, cfg.rate)?;
    let store = MvStore::new();
    store
        .preload(cfg.workload.genesis())
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;
    let mut graph = DepGraph::new(cfg.graph_config());
    let mut elapsed = Duration::ZERO;
    let mut ops = 0u64;
    let mut admitted = 0u64;
    let mut blocks = 0u64;
    for batch in trace.proposals.chunks(cfg.block_size) {
        let snap = store.latest_block().saturating_sub(lag);
        let handle = store.pin(snap).unwrap_or_else(|_| store.pin_latest());
        let txns: Vec<Transaction> = batch
            .iter()
            .filter_map(|p| simulate_on(&handle, p, 0, 0).ok().map(|e| e.txn))
            .collect();
        drop(handle);
        let t0 = Instant::now();
        for t in &txns {
            if graph.admit(t).is_ok_and(|a| a.is_admitted()) {
                admitted += 1;
            }
            ops += 1;
        }
        let order = graph.form_block();
        ops += 1;
        let number = graph.next_block();
        if !order.is_empty() {
            graph
                .commit_block(number, &order)
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        elapsed += t0.elapsed();
        if order.is_empty() {
            continue;
        }
        let by_id: HashMap<TxnId, &Transaction> = txns.iter().map(|t| (t.id, t)).collect();
        store
            .apply_block(
                number,
                order
                    .iter()
                    .enumerate()
                    .map(|(i, id)| (i as u32 + 1, &by_id[id].writeset)),
            )
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        blocks += 1;
    }
    let secs = elapsed.as_secs_f64().max(1e-9);
    Ok(BenchResult {
        ops,
        admitted,
        blocks,
        elapsed,
        ops_per_minute: ops as f64 * 60.0 / secs,
        graph: graph.stats().clone(),
    })
}
