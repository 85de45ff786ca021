//! Dependency graph over committed and pending transactions.
//!
//! Transactions are checked on arrival: a newcomer is rejected if it would
//! close a cycle that no reordering of the pending set can break. Ww
//! dependencies between pending transactions are left out until block
//! formation, when the pending set is topologically sorted and the ww edges
//! are restored along the chosen order.

pub mod indices;
pub mod reach;

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Key, SeqNum, Transaction, TxnId, TxnStatus, Version};
pub use indices::{AccessIndices, IndexQuery, IndexStore, LogIndex, MemIndex};
pub use reach::{Member, ReachFilter, ReachMode, ReachSpace};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphConfig {
    pub reach: ReachMode,
    pub bloom_bits: usize,
    pub bloom_hashes: u32,
    pub max_span: u64,
    /// Cross-check every cycle test against a graph search and count
    /// disagreements.
    pub audit: bool,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            reach: ReachMode::Bloom,
            bloom_bits: DEFAULT_BLOOM_BITS,
            bloom_hashes: 4,
            max_span: 10,
            audit: false,
        }
    }
}

pub const DEFAULT_BLOOM_BITS: usize = 65_536;

impl GraphConfig {
    pub fn exact() -> Self {
        GraphConfig {
            reach: ReachMode::Exact,
            ..Default::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeKind {
    Ww,
    NWr,
    Rw,
    AntiRw,
    RestoredWw,
}

impl EdgeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeKind::Ww => "ww",
            EdgeKind::NWr => "n-wr",
            EdgeKind::Rw => "rw",
            EdgeKind::AntiRw => "anti-rw",
            EdgeKind::RestoredWw => "restored-ww",
        }
    }
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Admission {
    Reorderable,
    AbortedUnreorderable,
    AbortedStaleSpan,
    AbortedFalsePositive,
}

impl Admission {
    pub fn is_admitted(self) -> bool {
        self == Admission::Reorderable
    }

    pub fn status(self) -> TxnStatus {
        match self {
            Admission::Reorderable => TxnStatus::Pending,
            Admission::AbortedUnreorderable => TxnStatus::AbortedUnreorderable,
            Admission::AbortedStaleSpan => TxnStatus::AbortedStaleSpan,
            Admission::AbortedFalsePositive => TxnStatus::AbortedFalsePositive,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("transaction {0} is already in the graph")]
    Duplicate(TxnId),
    #[error("transaction {0} is not pending")]
    NotPending(TxnId),
    #[error("expected block {expected}, got {got}")]
    BlockOutOfOrder { expected: u64, got: u64 },
    #[error("block {block} leaves {left} pending transactions unordered")]
    IncompleteBlock { block: u64, left: usize },
}

/// Direct predecessors and successors of a transaction, with the kind of
/// the first dependency found to each.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Deps {
    pub pred: BTreeMap<TxnId, EdgeKind>,
    pub succ: BTreeMap<TxnId, EdgeKind>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphStats {
    pub admitted: u64,
    pub unreorderable: u64,
    pub stale_span: u64,
    pub false_positive: u64,
    pub cycle_tests: u64,
    pub traversal_visits: u64,
    pub restored_edges: u64,
    pub sweep_visits: u64,
    pub pruned: u64,
    pub relays: u64,
    pub audited: u64,
    pub audit_false_positives: u64,
    pub audit_false_negatives: u64,
    pub max_nodes: u64,
    /// Abstract work units: index results, filter tests and node visits.
    pub work: u64,
}

#[derive(Debug)]
struct Node {
    id: TxnId,
    arrival: u64,
    start_ts: SeqNum,
    reads: Vec<(Key, Version)>,
    writes: Vec<Key>,
    succ: Vec<(usize, EdgeKind)>,
    reach: ReachFilter,
    age: u64,
    commit: Option<SeqNum>,
}

pub struct DepGraph {
    cfg: GraphConfig,
    space: ReachSpace,
    nodes: Vec<Option<Node>>,
    slots: HashMap<TxnId, usize>,
    pending: Vec<usize>,
    indices: AccessIndices,
    next_block: u64,
    arrivals: u64,
    ages: BinaryHeap<Reverse<(u64, usize)>>,
    committed_per_block: BTreeMap<u64, usize>,
    live: usize,
    marks: Vec<u32>,
    epoch: u32,
    stats: GraphStats,
}

impl fmt::Debug for DepGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DepGraph")
            .field("next_block", &self.next_block)
            .field("live", &self.live)
            .field("pending", &self.pending.len())
            .field("indices", &self.indices)
            .finish()
    }
}

impl DepGraph {
    pub fn new(cfg: GraphConfig) -> Self {
        Self::with_indices(cfg, AccessIndices::default())
    }

    /// A graph whose CW/CR indices live in the given stores. The indices must
    /// be empty or describe blocks that precede the first block this graph
    /// commits.
    pub fn with_indices(cfg: GraphConfig, indices: AccessIndices) -> Self {
        let space = ReachSpace::new(cfg.reach, cfg.bloom_bits, cfg.bloom_hashes);
        DepGraph {
            cfg,
            space,
            nodes: Vec::new(),
            slots: HashMap::new(),
            pending: Vec::new(),
            indices,
            next_block: 1,
            arrivals: 0,
            ages: BinaryHeap::new(),
            committed_per_block: BTreeMap::new(),
            live: 0,
            marks: Vec::new(),
            epoch: 0,
            stats: GraphStats::default(),
        }
    }

    /// Starts numbering at `block` (the next block to be formed).
    pub fn starting_at(mut self, block: u64) -> Self {
        self.next_block = block;
        self
    }

    pub fn config(&self) -> &GraphConfig {
        &self.cfg
    }

    pub fn stats(&self) -> &GraphStats {
        &self.stats
    }

    pub fn next_block(&self) -> u64 {
        self.next_block
    }

    pub fn node_count(&self) -> usize {
        self.live
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    pub fn pending_ids(&self) -> Vec<TxnId> {
        self.pending.iter().map(|&s| self.node(s).id).collect()
    }

    pub fn contains(&self, id: TxnId) -> bool {
        self.slots.contains_key(&id)
    }

    pub fn indices(&self) -> &AccessIndices {
        &self.indices
    }

    pub fn age_of(&self, id: TxnId) -> Option<u64> {
        self.slots.get(&id).map(|&s| self.node(s).age)
    }

    pub fn commit_of(&self, id: TxnId) -> Option<SeqNum> {
        self.slots.get(&id).and_then(|&s| self.node(s).commit)
    }

    fn node(&self, slot: usize) -> &Node {
        self.nodes[slot].as_ref().expect("live node")
    }

    fn node_mut(&mut self, slot: usize) -> &mut Node {
        self.nodes[slot].as_mut().expect("live node")
    }

    fn member(&self, slot: usize) -> Member {
        Member {
            id: self.node(slot).id,
            slot,
        }
    }

    fn live_slot(&self, id: TxnId) -> Option<usize> {
        self.slots.get(&id).copied()
    }

    fn next_epoch(&mut self) -> u32 {
        if self.marks.len() < self.nodes.len() {
            self.marks.resize(self.nodes.len(), 0);
        }
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.marks.iter_mut().for_each(|m| *m = 0);
            self.epoch = 1;
        }
        self.epoch
    }

    /// Dependencies of `t` on the live graph:
    /// anti-rw successors from committed and pending writers of what `t`
    /// read, and ww, wr and rw predecessors. Ww between pending
    /// transactions is left out.
    pub fn resolve_dependencies(&mut self, t: &Transaction) -> Deps {
        let mut deps = Deps::default();
        let mut work = 0u64;
        for key in t.readset.keys() {
            for (_, id) in self.indices.cw.range_from(key, t.start_ts) {
                work += 1;
                if self.slots.contains_key(&id) {
                    deps.succ.entry(id).or_insert(EdgeKind::AntiRw);
                }
            }
            for &id in self.indices.pending_writers(key) {
                work += 1;
                deps.succ.entry(id).or_insert(EdgeKind::AntiRw);
            }
            if let Some((_, id)) = self.indices.cw.before(key, t.start_ts) {
                work += 1;
                if self.slots.contains_key(&id) {
                    deps.pred.entry(id).or_insert(EdgeKind::NWr);
                }
            }
        }
        for key in t.writeset.keys() {
            let last = self.indices.cw.last(key);
            if let Some((_, id)) = last {
                work += 1;
                if self.slots.contains_key(&id) {
                    deps.pred.entry(id).or_insert(EdgeKind::Ww);
                }
            }
            // Readers before the last writer already reach it.
            let from = last.map(|(s, _)| s).unwrap_or(SeqNum::NIL);
            for (_, id) in self.indices.cr.range_from(key, from) {
                work += 1;
                if self.slots.contains_key(&id) {
                    deps.pred.entry(id).or_insert(EdgeKind::Rw);
                }
            }
            for &id in self.indices.pending_readers(key) {
                work += 1;
                deps.pred.entry(id).or_insert(EdgeKind::Rw);
            }
        }
        deps.pred.remove(&t.id);
        deps.succ.remove(&t.id);
        self.stats.work += work;
        deps
    }

    /// Whether some successor reaches some predecessor by a live path.
    fn search(&mut self, from: &[usize], targets: &[usize]) -> bool {
        if from.is_empty() || targets.is_empty() {
            return false;
        }
        let ep = self.next_epoch();
        let goal = ep.wrapping_add(0x8000_0000);
        for &t in targets {
            self.marks[t] = goal;
        }
        let mut stack: Vec<usize> = from.to_vec();
        let mut found = false;
        while let Some(s) = stack.pop() {
            if self.marks[s] == goal {
                found = true;
                break;
            }
            if self.marks[s] == ep {
                continue;
            }
            self.marks[s] = ep;
            self.stats.work += 1;
            for &(n, _) in &self.node(s).succ {
                if self.nodes[n].is_some() && self.marks[n] != ep {
                    stack.push(n);
                }
            }
        }
        // Goal marks must not leak into the next epoch's comparisons.
        for &t in targets {
            self.marks[t] = 0;
        }
        found
    }

    /// Filter-based cycle test. Returns the abort verdict, if any.
    fn detect_cycle(&mut self, pred: &[usize], succ: &[usize]) -> Option<Admission> {
        if pred.is_empty() || succ.is_empty() {
            return None;
        }
        let mut positive = false;
        'outer: for &p in pred {
            for &s in succ {
                self.stats.cycle_tests += 1;
                self.stats.work += 1;
                let m = self.member(s);
                if self.node(p).reach.contains(&self.space, m) {
                    positive = true;
                    break 'outer;
                }
            }
        }
        let exact = self.space.mode() == ReachMode::Exact;
        if self.cfg.audit {
            self.stats.audited += 1;
            let truth = self.search(succ, pred);
            if positive && !truth {
                self.stats.audit_false_positives += 1;
            }
            if !positive && truth {
                self.stats.audit_false_negatives += 1;
                log::error!("reachability filter missed a cycle");
                return Some(Admission::AbortedUnreorderable);
            }
            return positive.then_some(if truth {
                Admission::AbortedUnreorderable
            } else {
                Admission::AbortedFalsePositive
            });
        }
        if !positive {
            return None;
        }
        if exact || self.search(succ, pred) {
            Some(Admission::AbortedUnreorderable)
        } else {
            Some(Admission::AbortedFalsePositive)
        }
    }

    /// Arrival of an endorsed transaction.
    pub fn admit(&mut self, t: &Transaction) -> Result<Admission, GraphError> {
        if self.slots.contains_key(&t.id) {
            return Err(GraphError::Duplicate(t.id));
        }
        if t.snapshot_block() + self.cfg.max_span <= self.next_block {
            self.stats.stale_span += 1;
            return Ok(Admission::AbortedStaleSpan);
        }
        let deps = self.resolve_dependencies(t);
        let pred: Vec<(usize, EdgeKind)> = deps.pred.iter().map(|(id, k)| (self.slots[id], *k)).collect();
        let succ: Vec<(usize, EdgeKind)> = deps.succ.iter().map(|(id, k)| (self.slots[id], *k)).collect();
        let pred_slots: Vec<usize> = pred.iter().map(|p| p.0).collect();
        let succ_slots: Vec<usize> = succ.iter().map(|s| s.0).collect();
        if let Some(verdict) = self.detect_cycle(&pred_slots, &succ_slots) {
            match verdict {
                Admission::AbortedFalsePositive => self.stats.false_positive += 1,
                _ => self.stats.unreorderable += 1,
            }
            return Ok(verdict);
        }
        let slot = self.insert_node(t, &pred, succ);
        self.update_reachability(slot, &succ_slots);
        self.stats.admitted += 1;
        self.stats.max_nodes = self.stats.max_nodes.max(self.live as u64);
        Ok(Admission::Reorderable)
    }

    fn insert_node(&mut self, t: &Transaction, pred: &[(usize, EdgeKind)], succ: Vec<(usize, EdgeKind)>) -> usize {
        let slot = self.nodes.len();
        let m = Member { id: t.id, slot };
        let mut reach = ReachFilter::singleton(&self.space, m);
        for &(p, kind) in pred {
            reach.union_with(&self.node(p).reach);
            self.node_mut(p).succ.push((slot, kind));
        }
        self.nodes.push(Some(Node {
            id: t.id,
            arrival: self.arrivals,
            start_ts: t.start_ts,
            reads: t.readset.iter().map(|(k, v)| (k.clone(), *v)).collect(),
            writes: t.writeset.keys().cloned().collect(),
            succ,
            reach,
            age: self.next_block,
            commit: None,
        }));
        self.arrivals += 1;
        self.live += 1;
        self.slots.insert(t.id, slot);
        self.pending.push(slot);
        self.ages.push(Reverse((self.next_block, slot)));
        self.indices
            .add_pending(t.id, t.readset.keys().cloned(), t.writeset.keys().cloned());
        slot
    }

    /// Pushes the filter of a new node to everything reachable from its
    /// successors and refreshes their age.
    ///
    /// Filters only grow along edges and ages never decrease along edges, so
    /// a node that already holds every bit and the current age has
    /// descendants that do too; the walk stops there.
    fn update_reachability(&mut self, slot: usize, succ: &[usize]) {
        if succ.is_empty() {
            return;
        }
        let src = self.node(slot).reach.clone();
        let age = self.next_block;
        let ep = self.next_epoch();
        self.marks[slot] = ep;
        let mut stack: Vec<usize> = succ.to_vec();
        while let Some(s) = stack.pop() {
            if self.marks[s] == ep || self.nodes[s].is_none() {
                continue;
            }
            self.marks[s] = ep;
            self.stats.traversal_visits += 1;
            self.stats.work += 1;
            let n = self.nodes[s].as_mut().expect("live");
            let grew = n.reach.union_with(&src);
            let aged = n.age != age;
            if aged {
                n.age = age;
                self.ages.push(Reverse((age, s)));
            }
            if grew || aged {
                let n = self.node(s);
                stack.extend(n.succ.iter().map(|e| e.0).filter(|&x| self.marks[x] != ep));
            }
        }
    }

    /// Orders the pending set. Paths through committed nodes are respected;
    /// among ready nodes committed ones go first, then pending ones by
    /// arrival. Restores ww between same-key pending writers along the
    /// chosen order and clears the pending set.
    pub fn form_block(&mut self) -> Vec<TxnId> {
        if self.pending.is_empty() {
            return Vec::new();
        }
        let ep = self.next_epoch();
        let mut sub = Vec::new();
        let mut stack = self.pending.clone();
        while let Some(s) = stack.pop() {
            if self.marks[s] == ep {
                continue;
            }
            self.marks[s] = ep;
            sub.push(s);
            for &(n, _) in &self.node(s).succ {
                if self.nodes[n].is_some() && self.marks[n] != ep {
                    stack.push(n);
                }
            }
        }
        let order = self.topo_order(&sub, ep);
        let pending: Vec<usize> = order.into_iter().filter(|&s| self.node(s).commit.is_none()).collect();
        debug_assert_eq!(pending.len(), self.pending.len());
        self.stats.work += sub.len() as u64;
        self.restore_ww(&pending);
        self.pending.clear();
        pending.into_iter().map(|s| self.node(s).id).collect()
    }

    /// Kahn's algorithm over `sub`, whose members carry mark `ep`.
    fn topo_order(&self, sub: &[usize], ep: u32) -> Vec<usize> {
        let mut indeg: HashMap<usize, u32> = sub.iter().map(|&s| (s, 0)).collect();
        for &s in sub {
            for &(n, _) in &self.node(s).succ {
                if self.nodes[n].is_some() && self.marks[n] == ep {
                    *indeg.get_mut(&n).expect("member") += 1;
                }
            }
        }
        let rank = |s: usize| -> (u8, u64) {
            let n = self.node(s);
            match n.commit {
                Some(c) => (0, (c.block << 32) | c.pos as u64),
                None => (1, n.arrival),
            }
        };
        let mut ready: BinaryHeap<Reverse<((u8, u64), usize)>> = indeg
            .iter()
            .filter(|(_, &d)| d == 0)
            .map(|(&s, _)| Reverse((rank(s), s)))
            .collect();
        let mut out = Vec::with_capacity(sub.len());
        while let Some(Reverse((_, s))) = ready.pop() {
            out.push(s);
            for &(n, _) in &self.node(s).succ {
                if let Some(d) = indeg.get_mut(&n) {
                    if self.nodes[n].is_some() {
                        *d -= 1;
                        if *d == 0 {
                            ready.push(Reverse((rank(n), n)));
                        }
                    }
                }
            }
        }
        debug_assert_eq!(out.len(), sub.len(), "dependency graph has a cycle");
        if out.len() < sub.len() {
            // Unreachable while the graph stays acyclic; keep every member.
            let mut rest: Vec<usize> = sub.iter().copied().filter(|s| !out.contains(s)).collect();
            rest.sort_by_key(|&s| rank(s));
            out.extend(rest);
        }
        out
    }

    fn connected(&mut self, from: usize, to: usize) -> bool {
        let m = self.member(from);
        if !self.node(to).reach.contains(&self.space, m) {
            return false;
        }
        match self.space.mode() {
            ReachMode::Exact => true,
            ReachMode::Bloom => self.search(&[from], &[to]),
        }
    }

    /// Adds ww edges between consecutive same-key pending writers, in the
    /// order `seq`, unless they are already connected, then propagates
    /// filters through everything downstream of the new edges.
    pub fn restore_ww_order(&mut self, seq: &[TxnId]) {
        let slots: Vec<usize> = seq.iter().filter_map(|id| self.live_slot(*id)).collect();
        self.restore_ww(&slots);
    }

    fn restore_ww(&mut self, seq: &[usize]) {
        let pos: HashMap<usize, usize> = seq.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let mut heads = Vec::new();
        let chains: Vec<Vec<usize>> = self
            .indices
            .pw
            .values()
            .filter(|w| w.len() > 1)
            .map(|w| {
                let mut v: Vec<usize> = w.iter().filter_map(|id| self.slots.get(id).copied()).collect();
                v.sort_by_key(|s| pos.get(s).copied().unwrap_or(usize::MAX));
                v
            })
            .collect();
        for chain in chains {
            for pair in chain.windows(2) {
                let (a, b) = (pair[0], pair[1]);
                if self.connected(a, b) {
                    continue;
                }
                let src = self.node(a).reach.clone();
                self.node_mut(a).succ.push((b, EdgeKind::RestoredWw));
                self.node_mut(b).reach.union_with(&src);
                heads.push(b);
                self.stats.restored_edges += 1;
            }
        }
        if heads.is_empty() {
            return;
        }
        let ep = self.next_epoch();
        let mut sub = Vec::new();
        let mut stack = heads;
        while let Some(s) = stack.pop() {
            if self.marks[s] == ep {
                continue;
            }
            self.marks[s] = ep;
            sub.push(s);
            for &(n, _) in &self.node(s).succ {
                if self.nodes[n].is_some() && self.marks[n] != ep {
                    stack.push(n);
                }
            }
        }
        let order = self.topo_order(&sub, ep);
        let age = self.next_block;
        for s in order {
            self.stats.sweep_visits += 1;
            self.stats.work += 1;
            if self.node(s).age != age {
                self.node_mut(s).age = age;
                self.ages.push(Reverse((age, s)));
            }
            let src = self.node(s).reach.clone();
            let succ: Vec<usize> = self.node(s).succ.iter().map(|e| e.0).collect();
            for n in succ {
                if let Some(node) = self.nodes[n].as_mut() {
                    node.reach.union_with(&src);
                }
            }
        }
    }

    /// Records block `number` with transactions in `order` as committed,
    /// moves their pending index entries into CW and CR, prunes stale nodes
    /// and relays the filters when due.
    pub fn commit_block(&mut self, number: u64, order: &[TxnId]) -> Result<Vec<TxnId>, GraphError> {
        if number != self.next_block {
            return Err(GraphError::BlockOutOfOrder {
                expected: self.next_block,
                got: number,
            });
        }
        for id in order {
            match self.live_slot(*id) {
                Some(s) if self.node(s).commit.is_none() => {}
                _ => return Err(GraphError::NotPending(*id)),
            }
        }
        for (i, id) in order.iter().enumerate() {
            let slot = self.slots[id];
            let seq = SeqNum::new(number, i as u32 + 1);
            let (reads, writes) = {
                let n = self.node_mut(slot);
                n.commit = Some(seq);
                (std::mem::take(&mut n.reads), std::mem::take(&mut n.writes))
            };
            for (key, ver) in &reads {
                let fresh = match self.indices.cw.last(key) {
                    Some((s, _)) => *ver == s,
                    None => ver.is_genesis(),
                };
                if fresh {
                    self.indices.cr.insert(key, seq, *id);
                }
                self.indices.remove_pending_read(key, *id);
            }
            for key in &writes {
                self.indices.cw.insert(key, seq, *id);
                self.indices.remove_pending_write(key, *id);
            }
            self.stats.work += (reads.len() + writes.len()) as u64;
        }
        // Transactions formed but left out of the block stay pending.
        let committed: Vec<usize> = order.iter().map(|id| self.slots[id]).collect();
        self.pending.retain(|s| !committed.contains(s));
        if !order.is_empty() {
            self.committed_per_block.insert(number, order.len());
        }
        self.next_block = number + 1;
        let pruned = self.prune();
        self.maybe_relay();
        Ok(pruned)
    }

    /// Drops committed nodes whose age is below `next_block - max_span`.
    pub fn prune(&mut self) -> Vec<TxnId> {
        let h = self.next_block.saturating_sub(self.cfg.max_span);
        let mut out = Vec::new();
        while let Some(&Reverse((age, slot))) = self.ages.peek() {
            if age >= h {
                break;
            }
            self.ages.pop();
            let Some(n) = self.nodes[slot].as_ref() else {
                continue;
            };
            if n.age != age {
                continue;
            }
            let Some(c) = n.commit else {
                continue;
            };
            let id = n.id;
            self.nodes[slot] = None;
            self.slots.remove(&id);
            self.live -= 1;
            if let Some(cnt) = self.committed_per_block.get_mut(&c.block) {
                *cnt -= 1;
                if *cnt == 0 {
                    self.committed_per_block.remove(&c.block);
                }
            }
            out.push(id);
        }
        self.stats.pruned += out.len() as u64;
        out
    }

    fn maybe_relay(&mut self) {
        let earliest = self
            .committed_per_block
            .keys()
            .next()
            .copied()
            .unwrap_or(self.next_block);
        if !self.space.relay_due(earliest) {
            return;
        }
        let retired = self.space.relay(self.next_block - 1, self.nodes.len());
        for n in self.nodes.iter_mut().flatten() {
            n.reach.clear_gen(retired);
        }
        self.stats.relays += 1;
    }

    /// Exact graph search for a path `from -> ... -> to`.
    pub fn reaches(&mut self, from: TxnId, to: TxnId) -> bool {
        match (self.live_slot(from), self.live_slot(to)) {
            (Some(a), Some(b)) => a == b || self.search(&[a], &[b]),
            _ => false,
        }
    }

    /// Filter answer to "can `from` reach `to`".
    pub fn filter_says_reaches(&self, from: TxnId, to: TxnId) -> bool {
        match (self.live_slot(from), self.live_slot(to)) {
            (Some(a), Some(b)) => self.node(b).reach.contains(&self.space, self.member(a)),
            _ => false,
        }
    }

    pub fn live_ids(&self) -> Vec<TxnId> {
        self.nodes.iter().flatten().map(|n| n.id).collect()
    }

    /// Live edges as `(from, to, kind)`, sorted.
    pub fn edges(&self) -> Vec<(TxnId, TxnId, EdgeKind)> {
        let mut out: Vec<_> = self
            .nodes
            .iter()
            .flatten()
            .flat_map(|n| {
                n.succ
                    .iter()
                    .filter_map(move |&(s, k)| self.nodes[s].as_ref().map(|m| (n.id, m.id, k)))
            })
            .collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn is_acyclic(&self) -> bool {
        let live: Vec<usize> = (0..self.nodes.len()).filter(|&s| self.nodes[s].is_some()).collect();
        let mut indeg: HashMap<usize, u32> = live.iter().map(|&s| (s, 0)).collect();
        for &s in &live {
            for &(n, _) in &self.node(s).succ {
                if let Some(d) = indeg.get_mut(&n) {
                    *d += 1;
                }
            }
        }
        let mut ready: Vec<usize> = indeg.iter().filter(|(_, &d)| d == 0).map(|(&s, _)| s).collect();
        let mut seen = 0;
        while let Some(s) = ready.pop() {
            seen += 1;
            for &(n, _) in &self.node(s).succ {
                if let Some(d) = indeg.get_mut(&n) {
                    *d -= 1;
                    if *d == 0 {
                        ready.push(n);
                    }
                }
            }
        }
        seen == live.len()
    }

    /// Checks the node count against the pruning bound: committed nodes of
    /// the trailing `max_span` blocks, plus pending nodes, plus nodes whose
    /// age is at least `next_block - max_span`. Returns `(live, bound)`.
    pub fn size_bound(&self) -> (usize, usize) {
        let h = self.next_block.saturating_sub(self.cfg.max_span);
        let mut trailing = 0;
        let mut pending = 0;
        let mut aged = 0;
        for n in self.nodes.iter().flatten() {
            match n.commit {
                Some(c) if c.block >= h => trailing += 1,
                Some(_) => {}
                None => pending += 1,
            }
            if n.age >= h {
                aged += 1;
            }
        }
        (self.live, trailing + pending + aged)
    }

    /// Average number of set bits in the active filters.
    pub fn mean_filter_load(&self) -> f64 {
        if self.live == 0 {
            return 0.0;
        }
        let total: usize = self.nodes.iter().flatten().map(|n| n.reach.load(&self.space)).sum();
        total as f64 / self.live as f64
    }

    /// Graphviz rendering of the live graph.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph deps {\n");
        for n in self.nodes.iter().flatten() {
            let status = match n.commit {
                Some(c) => format!("committed {c}"),
                None => "pending".to_string(),
            };
            let _ = writeln!(
                s,
                "  t{} [label=\"{}\\n{}\\nstart {}\\nage {}\"];",
                n.id, n.id, status, n.start_ts, n.age
            );
        }
        for (a, b, k) in self.edges() {
            let _ = writeln!(s, "  t{a} -> t{b} [label=\"{k}\"];");
        }
        s.push_str("}\n");
        s
    }
}
