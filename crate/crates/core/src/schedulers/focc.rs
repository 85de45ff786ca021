//! Focc-s and Focc-l baselines.

use std::collections::{BTreeMap, HashMap};
use std::ops::Bound;

use super::{rw_edges, validation, ArrivalDecision, FormedBlock, PendingTxn, Policy, PolicyKind};
use crate::execution::ReadMode;
use crate::model::{Key, SeqNum, Transaction, TxnId, TxnStatus};
use crate::mvstore::MvStore;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RwFlags {
    pub in_rw: bool,
    pub out_rw: bool,
    pub anti: bool,
}

impl RwFlags {
    fn dangerous(self) -> bool {
        self.in_rw && self.out_rw && self.anti
    }
}

type SeqIndex = BTreeMap<Key, BTreeMap<SeqNum, TxnId>>;

/// Rejects on arrival any transaction that writes a key also written by a
/// concurrent transaction, or that would complete a dangerous structure: a
/// transaction with both an inbound and an outbound concurrent rw conflict,
/// at least one of them anti-rw. Blocks keep arrival order.
#[derive(Debug)]
pub struct FoccS {
    max_span: u64,
    next_block: u64,
    cw: SeqIndex,
    cr: SeqIndex,
    pw: HashMap<Key, Vec<TxnId>>,
    pr: HashMap<Key, Vec<TxnId>>,
    pending: Vec<PendingTxn>,
    flags: HashMap<TxnId, RwFlags>,
    committed_at: BTreeMap<u64, Vec<TxnId>>,
}

impl FoccS {
    pub fn new(max_span: u64) -> Self {
        FoccS {
            max_span: max_span.max(1),
            next_block: 1,
            cw: BTreeMap::new(),
            cr: BTreeMap::new(),
            pw: HashMap::new(),
            pr: HashMap::new(),
            pending: Vec::new(),
            flags: HashMap::new(),
            committed_at: BTreeMap::new(),
        }
    }

    pub fn flags(&self, id: TxnId) -> Option<RwFlags> {
        self.flags.get(&id).copied()
    }

    fn after<'a>(index: &'a SeqIndex, key: &str, start: SeqNum) -> impl Iterator<Item = TxnId> + 'a {
        index
            .get(key)
            .into_iter()
            .flat_map(move |m| m.range((Bound::Excluded(start), Bound::Unbounded)).map(|(_, id)| *id))
    }

    fn prune(&mut self) {
        // Nothing committed before `horizon` is concurrent with an
        // admissible newcomer.
        let horizon = self.next_block.saturating_sub(self.max_span);
        let cut = SeqNum::new(horizon, 0);
        while let Some((&b, _)) = self.committed_at.first_key_value() {
            if b >= horizon {
                break;
            }
            for id in self.committed_at.remove(&b).unwrap_or_default() {
                self.flags.remove(&id);
            }
        }
        for idx in [&mut self.cw, &mut self.cr] {
            idx.retain(|_, m| {
                *m = m.split_off(&cut);
                !m.is_empty()
            });
        }
    }
}

impl Policy for FoccS {
    fn kind(&self) -> PolicyKind {
        PolicyKind::FoccS
    }

    fn read_mode(&self) -> ReadMode {
        ReadMode::Snapshot
    }

    fn on_arrival(&mut self, txn: &Transaction) -> ArrivalDecision {
        let mut cost = 1u64;
        if txn.snapshot_block() + self.max_span <= self.next_block {
            return ArrivalDecision::abort(TxnStatus::AbortedStaleSpan, cost);
        }
        let start = txn.start_ts;
        for w in txn.writeset.keys() {
            cost += 1;
            let pending = self.pw.get(w).is_some_and(|v| !v.is_empty());
            if pending || Self::after(&self.cw, w, start).next().is_some() {
                return ArrivalDecision::abort(TxnStatus::AbortedEarly, cost);
            }
        }
        // out: concurrent writers of keys we read (we must precede them).
        let mut out: Vec<TxnId> = Vec::new();
        for r in txn.readset.keys() {
            out.extend(Self::after(&self.cw, r, start));
            out.extend(self.pw.get(r).into_iter().flatten().copied());
        }
        // in: concurrent readers of keys we write (they precede us).
        let mut inn: Vec<TxnId> = Vec::new();
        for w in txn.writeset.keys() {
            inn.extend(Self::after(&self.cr, w, start));
            inn.extend(self.pr.get(w).into_iter().flatten().copied());
        }
        for v in [&mut out, &mut inn] {
            v.sort_unstable();
            v.dedup();
            v.retain(|id| *id != txn.id);
        }
        cost += (out.len() + inn.len()) as u64;
        let flag = |id: &TxnId| self.flags.get(id).copied().unwrap_or_default();
        // Every edge out of the newcomer points at an earlier committer, so
        // it is anti-rw; edges into it are not.
        let pivot_self = !out.is_empty() && !inn.is_empty();
        let pivot_out = out.iter().any(|p| flag(p).out_rw);
        let pivot_in = inn.iter().any(|p| {
            let f = flag(p);
            RwFlags { out_rw: true, ..f }.dangerous()
        });
        if pivot_self || pivot_out || pivot_in {
            return ArrivalDecision::abort(TxnStatus::AbortedUnreorderable, cost);
        }
        for p in &out {
            let f = self.flags.entry(*p).or_default();
            f.in_rw = true;
            f.anti = true;
        }
        for p in &inn {
            self.flags.entry(*p).or_default().out_rw = true;
        }
        self.flags.insert(
            txn.id,
            RwFlags {
                in_rw: !inn.is_empty(),
                out_rw: !out.is_empty(),
                anti: !out.is_empty(),
            },
        );
        let p = PendingTxn::of(txn);
        for k in &p.reads {
            self.pr.entry(k.clone()).or_default().push(txn.id);
        }
        for k in &p.writes {
            self.pw.entry(k.clone()).or_default().push(txn.id);
        }
        self.pending.push(p);
        ArrivalDecision::admit(cost)
    }

    fn pending_len(&self) -> usize {
        self.pending.len()
    }

    fn on_block_formation(&mut self, number: u64) -> FormedBlock {
        let txns = std::mem::take(&mut self.pending);
        if txns.is_empty() {
            return FormedBlock::default();
        }
        let mut cost = 0u64;
        for (i, t) in txns.iter().enumerate() {
            let seq = SeqNum::new(number, i as u32 + 1);
            for k in &t.reads {
                self.cr.entry(k.clone()).or_default().insert(seq, t.id);
            }
            for k in &t.writes {
                self.cw.entry(k.clone()).or_default().insert(seq, t.id);
            }
            cost += (t.reads.len() + t.writes.len()) as u64;
        }
        self.pw.clear();
        self.pr.clear();
        let order: Vec<TxnId> = txns.iter().map(|t| t.id).collect();
        self.committed_at.insert(number, order.clone());
        self.next_block = number + 1;
        self.prune();
        FormedBlock {
            order,
            aborted: Vec::new(),
            cost,
        }
    }

    fn validate(&self, block: &[Transaction], store: &MvStore) -> Vec<TxnStatus> {
        validation::snapshot_validate(block, store)
    }
}

/// Admits everything; at block formation emits transactions with no
/// unresolved inbound rw conflict, and when none is left aborts the one
/// with the most remaining conflicts (latest arrival on ties).
#[derive(Debug, Default)]
pub struct FoccL {
    pending: Vec<PendingTxn>,
}

/// Greedy sort over index adjacency. Returns the emitted order and the
/// aborted indices.
pub(crate) fn greedy_sort(adj: &[Vec<usize>]) -> (Vec<usize>, Vec<usize>, u64) {
    let n = adj.len();
    let mut indeg = vec![0usize; n];
    let mut outdeg = vec![0usize; n];
    let mut radj = vec![Vec::new(); n];
    for (v, out) in adj.iter().enumerate() {
        outdeg[v] = out.len();
        for &w in out {
            indeg[w] += 1;
            radj[w].push(v);
        }
    }
    let mut alive = vec![true; n];
    let mut order = Vec::with_capacity(n);
    let mut aborted = Vec::new();
    let mut cost = 0u64;
    let mut left = n;
    let remove = |v: usize, alive: &mut [bool], indeg: &mut [usize], outdeg: &mut [usize], cost: &mut u64| {
        alive[v] = false;
        for &w in &adj[v] {
            if alive[w] {
                indeg[w] -= 1;
            }
        }
        for &u in &radj[v] {
            if alive[u] {
                outdeg[u] -= 1;
            }
        }
        *cost += (adj[v].len() + radj[v].len()) as u64;
    };
    while left > 0 {
        // Emit every ready transaction in arrival order.
        let mut progressed = false;
        for v in 0..n {
            cost += 1;
            if alive[v] && indeg[v] == 0 {
                remove(v, &mut alive, &mut indeg, &mut outdeg, &mut cost);
                order.push(v);
                left -= 1;
                progressed = true;
            }
        }
        if progressed || left == 0 {
            continue;
        }
        let victim = (0..n)
            .filter(|&v| alive[v])
            .max_by_key(|&v| (indeg[v] + outdeg[v], v))
            .expect("some transaction is left");
        remove(victim, &mut alive, &mut indeg, &mut outdeg, &mut cost);
        aborted.push(victim);
        left -= 1;
    }
    aborted.sort_unstable();
    (order, aborted, cost)
}

impl Policy for FoccL {
    fn kind(&self) -> PolicyKind {
        PolicyKind::FoccL
    }

    fn read_mode(&self) -> ReadMode {
        ReadMode::Snapshot
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
        let (order, aborted, cost) = greedy_sort(&adj);
        FormedBlock {
            order: order.into_iter().map(|i| txns[i].id).collect(),
            aborted: aborted
                .into_iter()
                .map(|i| (txns[i].id, TxnStatus::AbortedUnreorderable))
                .collect(),
            cost,
        }
    }

    fn validate(&self, block: &[Transaction], store: &MvStore) -> Vec<TxnStatus> {
        validation::fabric_validate(block, store)
    }
}
