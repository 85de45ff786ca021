//! Run metrics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::depgraph::GraphStats;
use crate::model::TxnStatus;
use crate::schedulers::PolicyKind;

/// Power-of-two bucketed histogram. Bucket 0 counts zeros, bucket `i`
/// counts values in `[2^(i-1), 2^i)`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    pub count: u64,
    pub sum: u64,
    pub max: u64,
    pub buckets: Vec<u64>,
}

impl Histogram {
    pub fn record(&mut self, v: u64) {
        let idx = (u64::BITS - v.leading_zeros()) as usize;
        if self.buckets.len() <= idx {
            self.buckets.resize(idx + 1, 0);
        }
        self.buckets[idx] += 1;
        self.count += 1;
        self.sum += v;
        self.max = self.max.max(v);
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum as f64 / self.count as f64
        }
    }

    /// Upper edge of the bucket holding the `q`-quantile.
    pub fn quantile(&self, q: f64) -> u64 {
        if self.count == 0 {
            return 0;
        }
        let target = ((q.clamp(0.0, 1.0) * self.count as f64).ceil() as u64).max(1);
        let mut seen = 0;
        for (i, c) in self.buckets.iter().enumerate() {
            seen += c;
            if seen >= target {
                return if i == 0 {
                    0
                } else {
                    ((1u128 << i) - 1).min(self.max as u128) as u64
                };
            }
        }
        self.max
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub policy: PolicyKind,
    pub submitted: u64,
    pub committed: u64,
    /// Transactions that made it into a block, committed or not.
    pub in_ledger: u64,
    pub aborts: BTreeMap<TxnStatus, u64>,
    /// Simulations that failed inside the contract.
    pub app_errors: u64,
    pub resimulated: u64,
    pub blocks: u64,
    pub first_tick: u64,
    pub last_tick: u64,
    /// In-ledger transactions per 1000 ticks.
    pub raw_throughput: f64,
    /// Committed transactions per 1000 ticks.
    pub effective_throughput: f64,
    pub arrival_cost: Histogram,
    pub reorder_cost: Histogram,
    pub validation_latency: Histogram,
    pub end_to_end_latency: Histogram,
    pub graph: Option<GraphStats>,
    pub max_graph_nodes: u64,
    pub bound_violations: u64,
    pub max_retained_snapshots: u64,
}

impl Metrics {
    pub fn new(policy: PolicyKind) -> Self {
        Metrics {
            policy,
            submitted: 0,
            committed: 0,
            in_ledger: 0,
            aborts: TxnStatus::ABORTS.iter().map(|s| (*s, 0)).collect(),
            app_errors: 0,
            resimulated: 0,
            blocks: 0,
            first_tick: 0,
            last_tick: 0,
            raw_throughput: 0.0,
            effective_throughput: 0.0,
            arrival_cost: Histogram::default(),
            reorder_cost: Histogram::default(),
            validation_latency: Histogram::default(),
            end_to_end_latency: Histogram::default(),
            graph: None,
            max_graph_nodes: 0,
            bound_violations: 0,
            max_retained_snapshots: 0,
        }
    }

    pub fn aborted(&self, status: TxnStatus) -> u64 {
        self.aborts.get(&status).copied().unwrap_or(0)
    }

    pub fn total_aborted(&self) -> u64 {
        self.aborts.values().sum()
    }

    pub(crate) fn count_abort(&mut self, status: TxnStatus) {
        debug_assert!(status.is_aborted());
        *self.aborts.entry(status).or_insert(0) += 1;
    }

    pub(crate) fn finish(&mut self) {
        let span = self.last_tick.saturating_sub(self.first_tick).max(1) as f64;
        self.raw_throughput = self.in_ledger as f64 * 1000.0 / span;
        self.effective_throughput = self.committed as f64 * 1000.0 / span;
    }
}
