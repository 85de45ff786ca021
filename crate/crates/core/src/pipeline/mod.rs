//! Discrete-event simulation of the execute-order-validate pipeline.
//!
//! One logical clock drives everything. At equal ticks events run in the
//! order: block commits, submissions, finished simulations, arrivals at the
//! orderer (by transaction id), block timeouts.

pub mod bench;
mod ledger;
mod metrics;
pub mod report;

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::depgraph::{GraphConfig, ReachMode, DEFAULT_BLOOM_BITS};
use crate::execution::{duration, read_window, simulate_on, ReadMode};
use crate::model::{Key, SeqNum, Transaction, TxnId, TxnStatus, Value};
use crate::mvstore::{MvStore, SnapshotHandle};
use crate::schedulers::{make_policy, Policy, PolicyKind};
use crate::workload::{generate, Proposal, Trace, WorkloadError, WorkloadSpec};

pub use bench::{bench, BenchResult};
pub use ledger::{Ledger, LedgerBlock, Rejected};
pub use metrics::{Histogram, Metrics};
pub use report::{Format, ReportRow};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub policy: PolicyKind,
    pub block_size: usize,
    /// Ticks after the first pending arrival before a partial block is cut.
    /// Defaults to twice the expected time to fill a block.
    pub block_timeout: Option<u64>,
    pub max_span: u64,
    /// Submitted proposals per 1000 ticks.
    pub rate: f64,
    pub client_delay: u64,
    pub read_interval: u64,
    /// Validation ticks per transaction.
    pub validation_cost: u64,
    pub workload: WorkloadSpec,
    pub seed: u64,
    pub txns: usize,
    pub reach: ReachMode,
    pub bloom_bits: usize,
    pub bloom_hashes: u32,
    pub audit: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            policy: PolicyKind::Sharp,
            block_size: 200,
            block_timeout: None,
            max_span: 10,
            rate: 700.0,
            client_delay: 0,
            read_interval: 0,
            validation_cost: 1,
            workload: WorkloadSpec::default(),
            seed: 1,
            txns: 10_000,
            reach: ReachMode::Bloom,
            bloom_bits: DEFAULT_BLOOM_BITS,
            bloom_hashes: 4,
            audit: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.block_size == 0 {
            return bad("block_size must be at least 1".into());
        }
        if self.max_span == 0 {
            return bad("max_span must be at least 1".into());
        }
        if self.txns < self.block_size {
            return bad(format!(
                "txns ({}) must be at least block_size ({})",
                self.txns, self.block_size
            ));
        }
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            return bad(format!("rate must be positive, got {}", self.rate));
        }
        if self.block_timeout == Some(0) {
            return bad("block_timeout must be positive".into());
        }
        if self.bloom_bits == 0 || self.bloom_hashes == 0 {
            return bad("bloom filter needs at least one bit and one hash".into());
        }
        self.workload.validate()?;
        Ok(())
    }

    pub fn timeout(&self) -> u64 {
        self.block_timeout
            .unwrap_or_else(|| ((2.0 * self.block_size as f64 * 1000.0 / self.rate).ceil() as u64).max(1))
    }

    pub fn graph_config(&self) -> GraphConfig {
        GraphConfig {
            reach: self.reach,
            bloom_bits: self.bloom_bits,
            bloom_hashes: self.bloom_hashes,
            max_span: self.max_span,
            audit: self.audit,
        }
    }
}

#[derive(Debug)]
pub struct SimResult {
    pub config: SimConfig,
    pub metrics: Metrics,
    pub ledger: Ledger,
    /// Final state.
    pub store: MvStore,
}

/// Generates the configured workload and runs it.
pub fn run(cfg: &SimConfig) -> Result<SimResult, ConfigError> {
    cfg.validate()?;
    let trace = generate(&cfg.workload, cfg.seed, cfg.txns, cfg.rate)?;
    run_trace(cfg, &trace, cfg.workload.genesis())
}

/// Runs a given trace from the given genesis state.
pub fn run_trace(cfg: &SimConfig, trace: &Trace, genesis: Vec<(Key, Value)>) -> Result<SimResult, ConfigError> {
    let policy = make_policy(cfg.policy, cfg.graph_config());
    run_with_policy(cfg, trace, genesis, policy)
}

/// Runs a trace under an explicitly constructed policy. The config's
/// `txns` and `workload` are ignored except for recording.
pub fn run_with_policy(
    cfg: &SimConfig,
    trace: &Trace,
    genesis: Vec<(Key, Value)>,
    policy: Box<dyn Policy>,
) -> Result<SimResult, ConfigError> {
    let mut check = cfg.clone();
    check.txns = check.txns.max(check.block_size);
    check.validate()?;
    let mut sim = Sim::new(cfg, trace, genesis, policy)?;
    sim.run();
    Ok(sim.finish())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Phase {
    Commit,
    Submit,
    SimDone,
    Arrival,
    Timeout,
}

type Event = Reverse<(u64, Phase, u64)>;

struct Flight {
    proposal: usize,
    handle: SnapshotHandle,
    started: u64,
    retried: bool,
}

struct Formed {
    formed_tick: u64,
    txns: Vec<Transaction>,
}

struct Sim<'a> {
    cfg: &'a SimConfig,
    proposals: &'a [Proposal],
    by_id: HashMap<TxnId, usize>,
    policy: Box<dyn Policy>,
    read_mode: ReadMode,
    store: MvStore,
    events: BinaryHeap<Event>,
    now: u64,
    flights: HashMap<TxnId, Flight>,
    endorsed: HashMap<TxnId, Transaction>,
    pending: HashMap<TxnId, Transaction>,
    formed: BTreeMap<u64, Formed>,
    next_number: u64,
    validator_free: u64,
    timer_epoch: u64,
    timer_armed: bool,
    commit_ticks: Vec<u64>,
    ledger: Ledger,
    metrics: Metrics,
}

impl<'a> Sim<'a> {
    fn new(
        cfg: &'a SimConfig,
        trace: &'a Trace,
        genesis: Vec<(Key, Value)>,
        policy: Box<dyn Policy>,
    ) -> Result<Self, ConfigError> {
        let store = MvStore::new();
        store
            .preload(genesis.iter().cloned())
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let mut by_id = HashMap::with_capacity(trace.proposals.len());
        let mut events = BinaryHeap::with_capacity(trace.proposals.len() * 2);
        for (i, p) in trace.proposals.iter().enumerate() {
            if by_id.insert(p.id, i).is_some() {
                return Err(ConfigError::Invalid(format!("duplicate proposal id {}", p.id)));
            }
            events.push(Reverse((p.tick, Phase::Submit, p.id.0)));
        }
        let kind = policy.kind();
        let mut metrics = Metrics::new(kind);
        metrics.first_tick = trace.proposals.iter().map(|p| p.tick).min().unwrap_or(0);
        Ok(Sim {
            cfg,
            proposals: &trace.proposals,
            by_id,
            read_mode: policy.read_mode(),
            policy,
            store,
            events,
            now: 0,
            flights: HashMap::new(),
            endorsed: HashMap::new(),
            pending: HashMap::new(),
            formed: BTreeMap::new(),
            next_number: 1,
            validator_free: 0,
            timer_epoch: 0,
            timer_armed: false,
            commit_ticks: Vec::new(),
            ledger: Ledger {
                genesis,
                blocks: Vec::new(),
                rejected: Vec::new(),
                arrivals: Vec::new(),
            },
            metrics,
        })
    }

    fn run(&mut self) {
        while let Some(Reverse((tick, phase, key))) = self.events.pop() {
            debug_assert!(tick >= self.now);
            self.now = tick;
            match phase {
                Phase::Commit => self.on_commit(key),
                Phase::Submit => self.on_submit(TxnId(key)),
                Phase::SimDone => self.on_sim_done(TxnId(key)),
                Phase::Arrival => self.on_arrival(TxnId(key)),
                Phase::Timeout => {
                    if self.timer_armed && key == self.timer_epoch && self.policy.pending_len() > 0 {
                        self.form_block();
                    }
                }
            }
        }
        debug_assert!(self.pending.is_empty() && self.formed.is_empty());
    }

    fn schedule(&mut self, tick: u64, phase: Phase, key: u64) {
        self.events.push(Reverse((tick, phase, key)));
    }

    fn reject(&mut self, id: TxnId, status: TxnStatus) {
        self.metrics.count_abort(status);
        self.ledger.rejected.push(Rejected {
            id,
            status,
            tick: self.now,
        });
    }

    fn on_submit(&mut self, id: TxnId) {
        self.metrics.submitted += 1;
        let idx = self.by_id[&id];
        let proposals = self.proposals;
        let p = &proposals[idx];
        let handle = self.store.pin_latest();
        let done = self.now + duration(p, self.cfg.read_interval);
        self.flights.insert(
            id,
            Flight {
                proposal: idx,
                handle,
                started: self.now,
                retried: false,
            },
        );
        self.schedule(done, Phase::SimDone, id.0);
    }

    /// Whether a block committed strictly after `lo` and no later than `hi`.
    fn committed_within(&self, lo: u64, hi: u64) -> bool {
        let i = self.commit_ticks.partition_point(|&t| t <= lo);
        self.commit_ticks.get(i).is_some_and(|&t| t <= hi)
    }

    fn on_sim_done(&mut self, id: TxnId) {
        let mut flight = self.flights.remove(&id).expect("simulation in flight");
        let proposals = self.proposals;
        let p = &proposals[flight.proposal];
        let crossed = match read_window(p, flight.started, self.cfg.read_interval) {
            Some((first, last)) => self.committed_within(first, last),
            None => false,
        };
        if crossed {
            match self.read_mode {
                ReadMode::Snapshot => {}
                ReadMode::Latest => {
                    self.reject(id, TxnStatus::AbortedEarly);
                    return;
                }
                ReadMode::Locked if !flight.retried => {
                    // Held back by the commit: run again on the new state.
                    self.metrics.resimulated += 1;
                    flight.handle = self.store.pin_latest();
                    flight.started = self.now;
                    flight.retried = true;
                    let done = self.now + duration(p, self.cfg.read_interval);
                    self.flights.insert(id, flight);
                    self.schedule(done, Phase::SimDone, id.0);
                    return;
                }
                ReadMode::Locked => {}
            }
        }
        match simulate_on(&flight.handle, p, flight.started, self.cfg.read_interval) {
            Ok(e) => {
                let arrive = e.finish_tick + self.cfg.client_delay + p.delay;
                self.endorsed.insert(id, e.txn);
                self.schedule(arrive, Phase::Arrival, id.0);
            }
            Err(err) => {
                log::debug!("simulation of {id} failed: {err}");
                self.metrics.app_errors += 1;
            }
        }
    }

    fn on_arrival(&mut self, id: TxnId) {
        let txn = self.endorsed.remove(&id).expect("endorsed transaction");
        self.ledger.arrivals.push(id);
        let d = self.policy.on_arrival(&txn);
        self.metrics.arrival_cost.record(d.cost);
        if let Some(status) = d.abort {
            self.reject(id, status);
            return;
        }
        self.pending.insert(id, txn);
        if self.policy.pending_len() >= self.cfg.block_size {
            self.form_block();
        } else if !self.timer_armed {
            self.timer_armed = true;
            self.timer_epoch += 1;
            let at = self.now + self.cfg.timeout();
            self.schedule(at, Phase::Timeout, self.timer_epoch);
        }
    }

    fn form_block(&mut self) {
        self.timer_armed = false;
        self.timer_epoch += 1;
        let number = self.next_number;
        let fb = self.policy.on_block_formation(number);
        self.metrics.reorder_cost.record(fb.cost);
        for (id, status) in fb.aborted {
            self.pending.remove(&id).expect("aborted transaction was pending");
            self.reject(id, status);
        }
        if let Some(g) = self.policy.graph() {
            let (live, bound) = g.size_bound();
            self.metrics.max_graph_nodes = self.metrics.max_graph_nodes.max(live as u64);
            if live > bound {
                log::error!("graph holds {live} nodes, bound is {bound}");
                self.metrics.bound_violations += 1;
            }
        }
        if fb.order.is_empty() {
            return;
        }
        assert!(fb.order.len() <= self.cfg.block_size, "block over capacity");
        self.next_number += 1;
        let txns: Vec<Transaction> = fb
            .order
            .iter()
            .enumerate()
            .map(|(i, id)| {
                let mut t = self.pending.remove(id).expect("ordered transaction was pending");
                t.end_ts = Some(SeqNum::new(number, i as u32 + 1));
                t
            })
            .collect();
        let start = self.now.max(self.validator_free);
        let done = start + self.cfg.validation_cost * txns.len() as u64;
        self.validator_free = done;
        self.formed.insert(
            number,
            Formed {
                formed_tick: self.now,
                txns,
            },
        );
        self.schedule(done, Phase::Commit, number);
    }

    fn on_commit(&mut self, number: u64) {
        let Formed { formed_tick, mut txns } = self.formed.remove(&number).expect("formed block");
        let statuses = self.policy.validate(&txns, &self.store);
        for (t, s) in txns.iter_mut().zip(&statuses) {
            t.status = *s;
        }
        self.store
            .apply_block(
                number,
                txns.iter()
                    .enumerate()
                    .filter(|(_, t)| t.status == TxnStatus::Committed)
                    .map(|(i, t)| (i as u32 + 1, &t.writeset)),
            )
            .expect("blocks commit in order");
        self.commit_ticks.push(self.now);
        self.metrics.blocks += 1;
        self.metrics.in_ledger += txns.len() as u64;
        self.metrics.last_tick = self.now;
        self.metrics.validation_latency.record(self.now - formed_tick);
        for t in &txns {
            if t.status == TxnStatus::Committed {
                self.metrics.committed += 1;
                let submitted = self.proposals[self.by_id[&t.id]].tick;
                self.metrics.end_to_end_latency.record(self.now - submitted);
            } else {
                self.metrics.count_abort(t.status);
            }
        }
        self.store
            .prune_snapshots(self.store.latest_block().saturating_sub(self.cfg.max_span));
        let retained = self.store.retained_snapshots().len() as u64;
        self.metrics.max_retained_snapshots = self.metrics.max_retained_snapshots.max(retained);
        self.ledger.blocks.push(LedgerBlock {
            number,
            formed_tick,
            committed_tick: self.now,
            txns,
        });
    }

    fn finish(mut self) -> SimResult {
        self.metrics.graph = self.policy.graph_stats();
        self.metrics.finish();
        SimResult {
            config: self.cfg.clone(),
            metrics: self.metrics,
            ledger: self.ledger,
            store: self.store,
        }
    }
}

#[cfg(test)]
mod tests;
