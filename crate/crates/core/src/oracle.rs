//! Reference checkers: exact conflict graphs over committed schedules,
//! serializability verification, and brute-force reorderability of small
//! pending sets.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::depgraph::{Admission, DepGraph, GraphConfig};
use crate::model::{DependencyKind, Key, SeqNum, Transaction, TxnId, TxnStatus, Value};
use crate::mvstore::MvStore;
use crate::pipeline::Ledger;
use crate::schedulers::{reordered_validate, strongly_connected};

/// Largest pending set [`brute_force_reorderable`] accepts.
pub const MAX_BRUTE_FORCE: usize = 8;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("{0} pending transactions exceed the brute-force bound of {MAX_BRUTE_FORCE}")]
    TooLarge(usize),
    #[error("transaction {0} has no end timestamp")]
    MissingEnd(TxnId),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ConflictEdge {
    pub from: TxnId,
    pub to: TxnId,
    pub kind: DependencyKind,
    pub key: Key,
}

/// Dependency graph of a schedule. Edges point from the transaction that
/// must come first; anti-rw edges point from the reader to the writer that
/// committed before it.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConflictGraph {
    pub nodes: Vec<TxnId>,
    pub edges: Vec<ConflictEdge>,
}

fn end_of(t: &Transaction) -> Result<SeqNum, OracleError> {
    t.end_ts.ok_or(OracleError::MissingEnd(t.id))
}

fn concurrent(a: &Transaction, b: &Transaction) -> bool {
    let (ea, eb) = (a.end_ts.expect("end"), b.end_ts.expect("end"));
    let (first, later) = if ea <= eb { (ea, b) } else { (eb, a) };
    first > later.start_ts
}

impl ConflictGraph {
    /// Builds the graph from versions: per key, ww edges chain the writers
    /// in commit order, every reader depends on the writer of the version
    /// it read, and precedes the next writer of that key.
    pub fn build<'a, I>(txns: I) -> Result<Self, OracleError>
    where
        I: IntoIterator<Item = &'a Transaction>,
    {
        Self::build_with(txns, false)
    }

    /// Like [`ConflictGraph::build`], but with an edge for every conflicting
    /// pair instead of only between neighbours in each key's version order.
    /// Both graphs have the same reachability.
    pub fn build_pairwise<'a, I>(txns: I) -> Result<Self, OracleError>
    where
        I: IntoIterator<Item = &'a Transaction>,
    {
        Self::build_with(txns, true)
    }

    fn build_with<'a, I>(txns: I, pairwise: bool) -> Result<Self, OracleError>
    where
        I: IntoIterator<Item = &'a Transaction>,
    {
        let txns: Vec<&Transaction> = txns.into_iter().collect();
        let mut writers: HashMap<&Key, Vec<(SeqNum, usize)>> = HashMap::new();
        let mut readers: HashMap<&Key, Vec<(SeqNum, usize)>> = HashMap::new();
        for (i, t) in txns.iter().enumerate() {
            let end = end_of(t)?;
            for k in t.writeset.keys() {
                writers.entry(k).or_default().push((end, i));
            }
            for (k, v) in &t.readset {
                readers.entry(k).or_default().push((*v, i));
            }
        }
        let mut edges = Vec::new();
        let mut push = |from: usize, to: usize, kind: DependencyKind, key: &Key| {
            edges.push(ConflictEdge {
                from: txns[from].id,
                to: txns[to].id,
                kind,
                key: key.clone(),
            });
        };
        for (key, ws) in writers.iter_mut() {
            ws.sort_unstable();
            for i in 0..ws.len() {
                let upto = if pairwise { ws.len() } else { (i + 2).min(ws.len()) };
                for &(_, b) in &ws[i + 1..upto] {
                    let a = ws[i].1;
                    let kind = if concurrent(txns[a], txns[b]) {
                        DependencyKind::CWw
                    } else {
                        DependencyKind::NWw
                    };
                    push(a, b, kind, key);
                }
            }
        }
        let empty = Vec::new();
        for (key, rs) in &readers {
            let ws = writers.get(key).unwrap_or(&empty);
            for &(ver, r) in rs {
                let idx = ws.partition_point(|(e, _)| *e <= ver);
                if let Some(&(e, w)) = idx.checked_sub(1).map(|i| &ws[i]) {
                    if e == ver && w != r {
                        push(w, r, DependencyKind::NWr, key);
                    }
                }
                let later = if pairwise {
                    &ws[idx..]
                } else {
                    &ws[idx..(idx + 1).min(ws.len())]
                };
                for &(_, w) in later {
                    if w != r {
                        let kind = if !concurrent(txns[r], txns[w]) {
                            DependencyKind::NRw
                        } else if txns[w].end_ts < txns[r].end_ts {
                            DependencyKind::AntiRw
                        } else {
                            DependencyKind::CRw
                        };
                        push(r, w, kind, key);
                    }
                }
            }
        }
        edges.sort();
        Ok(ConflictGraph {
            nodes: txns.iter().map(|t| t.id).collect(),
            edges,
        })
    }

    /// A shortest cycle, if any.
    pub fn find_cycle(&self) -> Option<CycleWitness> {
        let index: HashMap<TxnId, usize> = self.nodes.iter().enumerate().map(|(i, id)| (*id, i)).collect();
        let n = self.nodes.len();
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for (ei, e) in self.edges.iter().enumerate() {
            adj[index[&e.from]].push((index[&e.to], ei));
        }
        let plain: Vec<Vec<usize>> = adj.iter().map(|a| a.iter().map(|x| x.0).collect()).collect();
        let comps = strongly_connected(&plain, &vec![true; n]);
        let mut best: Option<Vec<usize>> = None;
        for comp in comps.iter().filter(|c| c.len() > 1) {
            let mut in_comp = vec![false; n];
            for &v in comp {
                in_comp[v] = true;
            }
            // A shortest cycle through each node found by BFS; bounded so
            // huge components stay cheap.
            for &s in comp.iter().take(256) {
                let mut prev: Vec<Option<(usize, usize)>> = vec![None; n];
                let mut seen = vec![false; n];
                seen[s] = true;
                let mut q = VecDeque::from([s]);
                let mut closing = None;
                'bfs: while let Some(v) = q.pop_front() {
                    for &(w, ei) in &adj[v] {
                        if !in_comp[w] {
                            continue;
                        }
                        if w == s {
                            closing = Some((v, ei));
                            break 'bfs;
                        }
                        if !seen[w] {
                            seen[w] = true;
                            prev[w] = Some((v, ei));
                            q.push_back(w);
                        }
                    }
                }
                if let Some((mut v, last)) = closing {
                    let mut path = vec![last];
                    while v != s {
                        let (p, ei) = prev[v].expect("bfs tree");
                        path.push(ei);
                        v = p;
                    }
                    path.reverse();
                    if best.as_ref().is_none_or(|b| path.len() < b.len()) {
                        best = Some(path);
                    }
                }
            }
        }
        best.map(|path| CycleWitness {
            edges: path.into_iter().map(|ei| self.edges[ei].clone()).collect(),
        })
    }

    pub fn count(&self, kind: DependencyKind) -> usize {
        self.edges.iter().filter(|e| e.kind == kind).count()
    }
}

/// A dependency cycle, as the list of its edges in order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleWitness {
    pub edges: Vec<ConflictEdge>,
}

impl CycleWitness {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn txns(&self) -> Vec<TxnId> {
        self.edges.iter().map(|e| e.from).collect()
    }
}

/// Checks that the committed transactions of a ledger form an acyclic
/// dependency graph.
pub fn verify_serializable(ledger: &Ledger) -> Result<(), CycleWitness> {
    verify_schedule(ledger.committed())
}

pub fn verify_schedule<'a, I>(txns: I) -> Result<(), CycleWitness>
where
    I: IntoIterator<Item = &'a Transaction>,
{
    let g = ConflictGraph::build(txns).expect("committed transactions carry end timestamps");
    match g.find_cycle() {
        Some(w) => Err(w),
        None => Ok(()),
    }
}

/// Number of (reader, writer) pairs among committed transactions where the
/// writer committed after the version the reader saw but before the reader
/// itself.
pub fn count_anti_rw(ledger: &Ledger) -> usize {
    let committed: Vec<&Transaction> = ledger.committed().collect();
    let mut writers: HashMap<&Key, Vec<(SeqNum, TxnId)>> = HashMap::new();
    for t in &committed {
        for k in t.writeset.keys() {
            writers.entry(k).or_default().push((t.end_ts.expect("end"), t.id));
        }
    }
    for ws in writers.values_mut() {
        ws.sort_unstable();
    }
    let mut n = 0;
    for r in &committed {
        let end = r.end_ts.expect("end");
        for (k, v) in &r.readset {
            let Some(ws) = writers.get(k) else { continue };
            let lo = ws.partition_point(|(e, _)| *e <= *v);
            let hi = ws.partition_point(|(e, _)| *e < end);
            n += ws[lo..hi.max(lo)].iter().filter(|(_, id)| *id != r.id).count();
        }
    }
    n
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Reorderability {
    /// A commit order of the pending set that leaves the schedule acyclic.
    Reorderable(Vec<TxnId>),
    Unreorderable,
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

type EdgeShape = (TxnId, TxnId, DependencyKind);
type FixedEdges = (BTreeSet<EdgeShape>, BTreeSet<(TxnId, TxnId)>);

/// Tries every commit order of `pending` placed as block `block` after the
/// committed `prefix`, and returns the first one (in lexicographic order of
/// the given sequence) whose dependency graph is acyclic.
///
/// Along the way it asserts the reordering rules: edges touching the
/// prefix never change, rw edges keep their direction, and ww edges
/// between pending transactions follow the chosen order.
pub fn brute_force_reorderable(
    prefix: &[Transaction],
    pending: &[Transaction],
    block: u64,
) -> Result<Reorderability, OracleError> {
    if pending.len() > MAX_BRUTE_FORCE {
        return Err(OracleError::TooLarge(pending.len()));
    }
    for t in prefix {
        end_of(t)?;
    }
    let pending_ids: BTreeSet<TxnId> = pending.iter().map(|t| t.id).collect();
    let mut perm: Vec<usize> = (0..pending.len()).collect();
    let mut fixed: Option<FixedEdges> = None;
    let mut txns: Vec<Transaction> = prefix.iter().chain(pending).cloned().collect();
    loop {
        let mut pos = HashMap::new();
        for (slot, &i) in perm.iter().enumerate() {
            let t = &mut txns[prefix.len() + i];
            t.end_ts = Some(SeqNum::new(block, slot as u32 + 1));
            pos.insert(t.id, slot);
        }
        let g = ConflictGraph::build_pairwise(&txns)?;
        let mut touching_prefix = BTreeSet::new();
        let mut rw = BTreeSet::new();
        for e in &g.edges {
            let both_pending = pending_ids.contains(&e.from) && pending_ids.contains(&e.to);
            if !both_pending {
                touching_prefix.insert((e.from, e.to, e.kind));
                continue;
            }
            match e.kind {
                DependencyKind::CWw => assert!(pos[&e.from] < pos[&e.to], "ww must follow commit order"),
                DependencyKind::CRw | DependencyKind::AntiRw => {
                    rw.insert((e.from, e.to));
                }
                k => panic!("pending transactions are concurrent, got {k:?}"),
            }
        }
        match &fixed {
            None => fixed = Some((touching_prefix, rw)),
            Some((p, r)) => {
                assert_eq!(
                    p, &touching_prefix,
                    "reordering changed an edge touching committed transactions"
                );
                assert_eq!(r, &rw, "reordering changed an rw edge");
            }
        }
        if g.find_cycle().is_none() {
            return Ok(Reorderability::Reorderable(
                perm.iter().map(|&i| pending[i].id).collect(),
            ));
        }
        if !next_permutation(&mut perm) {
            return Ok(Reorderability::Unreorderable);
        }
    }
}

/// A randomly drawn transaction of a cross-check instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Draft {
    pub id: TxnId,
    /// How many blocks behind the latest its snapshot is.
    pub lag: u64,
    pub reads: Vec<Key>,
    pub writes: Vec<(Key, Value)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub keys: Vec<Key>,
    /// Arrivals between consecutive block formations.
    pub rounds: Vec<Vec<Draft>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InstanceShape {
    pub keys: usize,
    pub max_pending: usize,
    pub rounds: usize,
    pub max_lag: u64,
}

impl Default for InstanceShape {
    fn default() -> Self {
        InstanceShape {
            keys: 3,
            max_pending: 6,
            rounds: 3,
            max_lag: 2,
        }
    }
}

pub fn random_instance(seed: u64, shape: InstanceShape) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keys: Vec<Key> = (0..shape.keys).map(|i| Key::from(format!("k{i}"))).collect();
    let mut next_id = 1;
    let mut rounds = Vec::with_capacity(shape.rounds);
    for _ in 0..shape.rounds {
        let n = rng.random_range(1..=shape.max_pending);
        let mut round = Vec::with_capacity(n);
        for _ in 0..n {
            let mut reads = Vec::new();
            let mut writes = Vec::new();
            while reads.is_empty() && writes.is_empty() {
                for k in &keys {
                    if rng.random_bool(0.4) {
                        reads.push(k.clone());
                    }
                    if rng.random_bool(0.3) {
                        writes.push((k.clone(), next_id as Value));
                    }
                }
            }
            round.push(Draft {
                id: TxnId(next_id),
                lag: rng.random_range(0..=shape.max_lag),
                reads,
                writes,
            });
            next_id += 1;
        }
        rounds.push(round);
    }
    Instance { keys, rounds }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossCheckReport {
    pub instances: u64,
    pub arrivals: u64,
    pub admitted: u64,
    pub unreorderable: u64,
    pub confirmed_unreorderable: u64,
    pub stale_span: u64,
    pub false_positives: u64,
    pub blocks: u64,
    pub verified_blocks: u64,
    pub divergences: Vec<String>,
}

impl CrossCheckReport {
    pub fn merge(&mut self, other: CrossCheckReport) {
        self.instances += other.instances;
        self.arrivals += other.arrivals;
        self.admitted += other.admitted;
        self.unreorderable += other.unreorderable;
        self.confirmed_unreorderable += other.confirmed_unreorderable;
        self.stale_span += other.stale_span;
        self.false_positives += other.false_positives;
        self.blocks += other.blocks;
        self.verified_blocks += other.verified_blocks;
        self.divergences.extend(other.divergences);
    }
}

/// Replays an instance through a dependency graph. Every unreorderable
/// verdict is confirmed by brute force over the pending set, and every
/// formed block is checked for serializability and abort-free validation.
pub fn cross_check_admission(inst: &Instance, cfg: GraphConfig) -> CrossCheckReport {
    let mut rep = CrossCheckReport {
        instances: 1,
        ..Default::default()
    };
    let store = MvStore::new();
    store
        .preload(inst.keys.iter().map(|k| (k.clone(), 0)))
        .expect("fresh store");
    let mut graph = DepGraph::new(cfg);
    let mut committed: Vec<Transaction> = Vec::new();
    let mut pending: Vec<Transaction> = Vec::new();
    for round in &inst.rounds {
        for d in round {
            rep.arrivals += 1;
            let snap = store.latest_block().saturating_sub(d.lag);
            let mut t = Transaction::new(d.id, SeqNum::snapshot(snap));
            for k in &d.reads {
                t.readset
                    .insert(k.clone(), store.version_at(snap, k).unwrap_or(SeqNum::NIL));
            }
            t.writeset = d.writes.iter().cloned().collect();
            let verdict = match graph.admit(&t) {
                Ok(v) => v,
                Err(e) => {
                    rep.divergences.push(format!("txn {}: {e}", t.id));
                    continue;
                }
            };
            match verdict {
                Admission::Reorderable => {
                    rep.admitted += 1;
                    pending.push(t);
                }
                Admission::AbortedStaleSpan => rep.stale_span += 1,
                Admission::AbortedFalsePositive => rep.false_positives += 1,
                Admission::AbortedUnreorderable => {
                    rep.unreorderable += 1;
                    let mut set = pending.clone();
                    set.push(t.clone());
                    match brute_force_reorderable(&committed, &set, graph.next_block()) {
                        Ok(Reorderability::Unreorderable) => rep.confirmed_unreorderable += 1,
                        Ok(Reorderability::Reorderable(order)) => rep.divergences.push(format!(
                            "txn {} rejected, but {:?} commits all of {:?}",
                            t.id,
                            order,
                            set.iter().map(|x| x.id).collect::<Vec<_>>()
                        )),
                        Err(e) => rep.divergences.push(format!("txn {}: {e}", t.id)),
                    }
                }
            }
        }
        let order = graph.form_block();
        if order.is_empty() {
            continue;
        }
        rep.blocks += 1;
        let number = graph.next_block();
        let mut by_id: BTreeMap<TxnId, Transaction> = pending.drain(..).map(|t| (t.id, t)).collect();
        let block: Vec<Transaction> = order
            .iter()
            .enumerate()
            .map(|(i, id)| {
                by_id
                    .remove(id)
                    .expect("ordered transaction was admitted")
                    .with_end(SeqNum::new(number, i as u32 + 1))
            })
            .collect();
        if !by_id.is_empty() {
            rep.divergences.push(format!(
                "block {number} left out {:?}",
                by_id.keys().collect::<Vec<_>>()
            ));
        }
        let statuses = reordered_validate(&block, &store);
        let schedule: Vec<&Transaction> = committed.iter().chain(&block).collect();
        match verify_schedule(schedule) {
            Ok(()) if statuses.iter().all(|s| *s == TxnStatus::Committed) => rep.verified_blocks += 1,
            Ok(()) => rep
                .divergences
                .push(format!("block {number} fails validation: {statuses:?}")),
            Err(w) => rep
                .divergences
                .push(format!("block {number} is not serializable: {:?}", w.txns())),
        }
        if let Err(e) = graph.commit_block(number, &order) {
            rep.divergences.push(format!("block {number}: {e}"));
            break;
        }
        store
            .apply_block(
                number,
                block.iter().enumerate().map(|(i, t)| (i as u32 + 1, &t.writeset)),
            )
            .expect("blocks in order");
        for mut t in block {
            t.status = TxnStatus::Committed;
            committed.push(t);
        }
    }
    rep
}

/// Where two runs over the same arrivals first disagree, in consensus
/// order: `(txn, status in a, status in b)`.
pub fn first_divergence(a: &Ledger, b: &Ledger) -> Option<(TxnId, TxnStatus, TxnStatus)> {
    let status = |l: &Ledger| -> HashMap<TxnId, TxnStatus> {
        l.all_txns()
            .map(|t| (t.id, t.status))
            .chain(l.rejected.iter().map(|r| (r.id, r.status)))
            .collect()
    };
    let (sa, sb) = (status(a), status(b));
    a.arrivals.iter().zip(&b.arrivals).find_map(|(x, y)| {
        let s1 = sa.get(x).copied().unwrap_or(TxnStatus::Pending);
        let s2 = sb.get(y).copied().unwrap_or(TxnStatus::Pending);
        (x != y || s1 != s2).then_some((*x, s1, s2))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(id: u64, snap: u64, reads: &[(&str, (u64, u32))], writes: &[&str]) -> Transaction {
        let mut t = Transaction::new(TxnId(id), SeqNum::snapshot(snap));
        for (k, (b, p)) in reads {
            t = t.with_read(k, SeqNum::new(*b, *p));
        }
        for k in writes {
            t = t.with_write(k, id as Value);
        }
        t
    }

    #[test]
    fn write_skew_in_one_block_is_a_two_cycle() {
        let a = t(1, 0, &[("X", (0, 1))], &["Y"]).with_end(SeqNum::new(1, 1));
        let b = t(2, 0, &[("Y", (0, 2))], &["X"]).with_end(SeqNum::new(1, 2));
        let w = verify_schedule([&a, &b]).unwrap_err();
        assert_eq!(w.len(), 2);
        let kinds: BTreeSet<DependencyKind> = w.edges.iter().map(|e| e.kind).collect();
        assert_eq!(
            kinds,
            [DependencyKind::CRw, DependencyKind::AntiRw].into_iter().collect()
        );
    }

    #[test]
    fn serial_history_is_clean() {
        let a = t(1, 0, &[("X", (0, 1))], &["X"]).with_end(SeqNum::new(1, 1));
        let b = t(2, 1, &[("X", (1, 1))], &["X"]).with_end(SeqNum::new(2, 1));
        let g = ConflictGraph::build([&a, &b]).unwrap();
        assert_eq!(g.count(DependencyKind::NWr), 1);
        assert_eq!(g.count(DependencyKind::NWw), 1);
        assert!(g.find_cycle().is_none());
    }

    #[test]
    fn lost_update_is_caught() {
        let a = t(1, 0, &[("X", (0, 1))], &["X"]).with_end(SeqNum::new(1, 1));
        let b = t(2, 0, &[("X", (0, 1))], &["X"]).with_end(SeqNum::new(1, 2));
        assert!(verify_schedule([&a, &b]).is_err());
    }

    #[test]
    fn rw_only_cycle_is_unreorderable() {
        let pending = [t(1, 0, &[("X", (0, 1))], &["Y"]), t(2, 0, &[("Y", (0, 2))], &["X"])];
        assert_eq!(
            brute_force_reorderable(&[], &pending, 1).unwrap(),
            Reorderability::Unreorderable
        );
    }

    #[test]
    fn cycle_through_ww_is_fixed_by_swapping() {
        // 1 reads A written by 2; 2 and 3 both write C; 3 reads B written by 1.
        let pending = [
            t(1, 0, &[("A", (0, 1))], &["B"]),
            t(2, 0, &[], &["A", "C"]),
            t(3, 0, &[("B", (0, 2))], &["C"]),
        ];
        assert_eq!(
            brute_force_reorderable(&[], &pending, 1).unwrap(),
            Reorderability::Reorderable(vec![TxnId(1), TxnId(3), TxnId(2)])
        );
    }

    #[test]
    fn single_pending_is_trivially_reorderable() {
        let prefix = [t(1, 0, &[], &["X"]).with_end(SeqNum::new(1, 1))];
        let pending = [t(2, 1, &[("X", (1, 1))], &["X"])];
        assert_eq!(
            brute_force_reorderable(&prefix, &pending, 2).unwrap(),
            Reorderability::Reorderable(vec![TxnId(2)])
        );
    }

    #[test]
    fn front_running_pair_is_unreorderable() {
        // Both read and write R against the same snapshot; whichever goes
        // second read a stale R.
        let pending = [t(1, 0, &[("R", (0, 1))], &["R"]), t(2, 0, &[("R", (0, 1))], &["R"])];
        assert_eq!(
            brute_force_reorderable(&[], &pending, 1).unwrap(),
            Reorderability::Unreorderable
        );
    }

    #[test]
    fn brute_force_refuses_large_sets() {
        let pending: Vec<Transaction> = (0..9).map(|i| t(i, 0, &[], &["X"])).collect();
        assert_eq!(brute_force_reorderable(&[], &pending, 1), Err(OracleError::TooLarge(9)));
    }

    #[test]
    fn permutations_are_lexicographic() {
        let mut p = vec![0, 1, 2];
        let mut all = vec![p.clone()];
        while next_permutation(&mut p) {
            all.push(p.clone());
        }
        assert_eq!(all.len(), 6);
        assert_eq!(all[1], vec![0, 2, 1]);
        assert_eq!(all[5], vec![2, 1, 0]);
    }

    #[test]
    fn anti_rw_count() {
        let w = t(1, 0, &[], &["X"]).with_end(SeqNum::new(2, 1));
        let r = t(2, 1, &[("X", (0, 1))], &[]).with_end(SeqNum::new(2, 2));
        let ledger = Ledger {
            genesis: vec![(Key::from("X"), 0)],
            blocks: vec![crate::pipeline::LedgerBlock {
                number: 2,
                formed_tick: 0,
                committed_tick: 0,
                txns: [w, r]
                    .into_iter()
                    .map(|mut x| {
                        x.status = TxnStatus::Committed;
                        x
                    })
                    .collect(),
            }],
            ..Default::default()
        };
        assert_eq!(count_anti_rw(&ledger), 1);
        assert!(verify_serializable(&ledger).is_ok());
    }

    #[test]
    fn small_cross_check() {
        let mut rep = CrossCheckReport::default();
        for seed in 0..50 {
            rep.merge(cross_check_admission(
                &random_instance(seed, InstanceShape::default()),
                GraphConfig::exact(),
            ));
        }
        assert!(rep.divergences.is_empty(), "{:?}", rep.divergences);
        assert_eq!(rep.unreorderable, rep.confirmed_unreorderable);
        assert_eq!(rep.blocks, rep.verified_blocks);
        assert!(rep.admitted > 0 && rep.unreorderable > 0);
    }
}
