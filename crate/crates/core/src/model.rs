//! Shared domain vocabulary: sequence numbers, transactions, blocks and the
//! six canonical dependency kinds between snapshot transactions.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Record key. Cheap to clone; keys are shared between the store, the
/// transactions and the access indices.
pub type Key = Arc<str>;

/// Record value. Smallbank balances are plain signed integers.
pub type Value = i64;

/// A lexicographically ordered `(block, position)` pair.
///
/// Block snapshot `M` carries `(M + 1, 0)`; transaction end timestamps carry
/// their 1-based position inside the block, so a snapshot sorts strictly
/// between the last transaction of block `M` and the first of block `M + 1`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SeqNum {
    pub block: u64,
    pub pos: u32,
}

/// Version of a record: the sequence number of the transaction that last
/// wrote it. Genesis entries carry `(0, k)` for load position `k`.
pub type Version = SeqNum;

impl SeqNum {
    /// Version recorded for a read of a key that does not exist.
    pub const NIL: SeqNum = SeqNum { block: 0, pos: 0 };

    pub const fn new(block: u64, pos: u32) -> Self {
        SeqNum { block, pos }
    }

    /// Sequence number of the snapshot taken after block `block` committed.
    pub const fn snapshot(block: u64) -> Self {
        SeqNum {
            block: block + 1,
            pos: 0,
        }
    }

    pub fn is_snapshot(&self) -> bool {
        self.pos == 0
    }

    pub fn is_genesis(&self) -> bool {
        self.block == 0
    }
}

/// Lexicographic comparison of two sequence numbers.
pub fn cmp_seq(a: SeqNum, b: SeqNum) -> Ordering {
    a.cmp(&b)
}

impl fmt::Display for SeqNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.block, self.pos)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("malformed sequence number {0:?}, expected \"block:pos\"")]
pub struct ParseSeqError(String);

impl FromStr for SeqNum {
    type Err = ParseSeqError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseSeqError(s.to_string());
        let (b, p) = s.split_once(':').ok_or_else(err)?;
        Ok(SeqNum {
            block: b.trim().parse().map_err(|_| err())?,
            pos: p.trim().parse().map_err(|_| err())?,
        })
    }
}

impl Serialize for SeqNum {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SeqNum {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Generator-assigned transaction identifier.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TxnId(pub u64);

impl fmt::Display for TxnId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Lifecycle status. Abort causes are kept apart so that metrics can break
/// down where transactions were lost.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TxnStatus {
    Pending,
    Committed,
    /// Dropped before entering a block by an arrival-time or execution-time
    /// filter (cross-block read, c-ww, dangerous structure).
    AbortedEarly,
    /// Closes a dependency cycle that no reordering can break.
    AbortedUnreorderable,
    /// Simulated against a snapshot older than the allowed block span.
    AbortedStaleSpan,
    /// Included in a block but rejected by the validation phase.
    AbortedValidation,
    /// Rejected because a reachability filter reported a false positive.
    AbortedFalsePositive,
}

impl TxnStatus {
    pub const ABORTS: [TxnStatus; 5] = [
        TxnStatus::AbortedEarly,
        TxnStatus::AbortedUnreorderable,
        TxnStatus::AbortedStaleSpan,
        TxnStatus::AbortedValidation,
        TxnStatus::AbortedFalsePositive,
    ];

    pub fn is_aborted(self) -> bool {
        !matches!(self, TxnStatus::Pending | TxnStatus::Committed)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TxnStatus::Pending => "pending",
            TxnStatus::Committed => "committed",
            TxnStatus::AbortedEarly => "aborted_early",
            TxnStatus::AbortedUnreorderable => "aborted_unreorderable",
            TxnStatus::AbortedStaleSpan => "aborted_stale_span",
            TxnStatus::AbortedValidation => "aborted_validation",
            TxnStatus::AbortedFalsePositive => "aborted_false_positive",
        }
    }
}

impl fmt::Display for TxnStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The unit flowing through the pipeline.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub id: TxnId,
    /// Sequence number of the read snapshot; always has `pos == 0`.
    pub start_ts: SeqNum,
    /// Position in the ledger, assigned when the transaction enters a block.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end_ts: Option<SeqNum>,
    pub readset: BTreeMap<Key, Version>,
    pub writeset: BTreeMap<Key, Value>,
    pub status: TxnStatus,
}

impl Transaction {
    pub fn new(id: TxnId, start_ts: SeqNum) -> Self {
        debug_assert!(start_ts.is_snapshot());
        Transaction {
            id,
            start_ts,
            end_ts: None,
            readset: BTreeMap::new(),
            writeset: BTreeMap::new(),
            status: TxnStatus::Pending,
        }
    }

    /// Number of the block whose snapshot the transaction read from.
    pub fn snapshot_block(&self) -> u64 {
        self.start_ts.block.saturating_sub(1)
    }

    pub fn with_read(mut self, key: &str, ver: Version) -> Self {
        self.readset.insert(Key::from(key), ver);
        self
    }

    pub fn with_write(mut self, key: &str, val: Value) -> Self {
        self.writeset.insert(Key::from(key), val);
        self
    }

    pub fn with_end(mut self, end: SeqNum) -> Self {
        self.end_ts = Some(end);
        self
    }
}

/// An ordered batch of transactions as delivered by the ordering service.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub number: u64,
    pub txns: Vec<TxnId>,
    /// Final per-transaction statuses, filled by validation.
    pub statuses: Vec<TxnStatus>,
}

impl Block {
    pub fn new(number: u64, txns: Vec<TxnId>) -> Self {
        let statuses = vec![TxnStatus::Pending; txns.len()];
        Block { number, txns, statuses }
    }

    /// End timestamp of the transaction at zero-based index `idx`.
    pub fn seq_of(&self, idx: usize) -> SeqNum {
        SeqNum::new(self.number, idx as u32 + 1)
    }
}

/// The six canonical dependencies between snapshot transactions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DependencyKind {
    NWw,
    NWr,
    NRw,
    CWw,
    CRw,
    AntiRw,
}

impl DependencyKind {
    pub fn is_concurrent(self) -> bool {
        matches!(self, DependencyKind::CWw | DependencyKind::CRw | DependencyKind::AntiRw)
    }

    pub fn is_ww(self) -> bool {
        matches!(self, DependencyKind::NWw | DependencyKind::CWw)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DependencyKind::NWw => "n-ww",
            DependencyKind::NWr => "n-wr",
            DependencyKind::NRw => "n-rw",
            DependencyKind::CWw => "c-ww",
            DependencyKind::CRw => "c-rw",
            DependencyKind::AntiRw => "anti-rw",
        }
    }
}

impl fmt::Display for DependencyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A directed dependency: `from` must precede `to` in any equivalent serial
/// order. Only `AntiRw` points against commit order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Dependency {
    pub kind: DependencyKind,
    pub from: TxnId,
    pub to: TxnId,
    pub key: Key,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("transaction {0} has no end timestamp")]
    MissingEndTs(TxnId),
    #[error("transactions {0} and {1} are not in end-timestamp order")]
    NotOrdered(TxnId, TxnId),
    #[error("transaction {reader} read {key}@{ver}, inconsistent with writer {writer} at {end}")]
    InconsistentRead {
        reader: TxnId,
        writer: TxnId,
        key: Key,
        ver: Version,
        end: SeqNum,
    },
}

fn end_of(t: &Transaction) -> Result<SeqNum, ModelError> {
    t.end_ts.ok_or(ModelError::MissingEndTs(t.id))
}

/// Whether the executions of two sequenced transactions overlap: the one that
/// ends later must have started before the other ended.
pub fn are_concurrent(t1: &Transaction, t2: &Transaction) -> Result<bool, ModelError> {
    let (e1, e2) = (end_of(t1)?, end_of(t2)?);
    let (earlier_end, later) = if e1 <= e2 { (e1, t2) } else { (e2, t1) };
    Ok(later.start_ts < earlier_end)
}

/// Classifies every dependency between `earlier` and `later` (by end
/// timestamp), one entry per overlapping key access.
pub fn classify_dependency(earlier: &Transaction, later: &Transaction) -> Result<Vec<Dependency>, ModelError> {
    let (e_end, l_end) = (end_of(earlier)?, end_of(later)?);
    if e_end >= l_end {
        return Err(ModelError::NotOrdered(earlier.id, later.id));
    }
    let concurrent = later.start_ts < e_end;
    let mut out = Vec::new();
    let dep = |kind, from: &Transaction, to: &Transaction, key: &Key| Dependency {
        kind,
        from: from.id,
        to: to.id,
        key: key.clone(),
    };

    for key in earlier.writeset.keys() {
        if later.writeset.contains_key(key) {
            let kind = if concurrent {
                DependencyKind::CWw
            } else {
                DependencyKind::NWw
            };
            out.push(dep(kind, earlier, later, key));
        }
        if let Some(&ver) = later.readset.get(key) {
            let saw_write = ver >= e_end;
            match (saw_write, concurrent) {
                (true, false) => out.push(dep(DependencyKind::NWr, earlier, later, key)),
                (false, true) => out.push(dep(DependencyKind::AntiRw, later, earlier, key)),
                _ => {
                    return Err(ModelError::InconsistentRead {
                        reader: later.id,
                        writer: earlier.id,
                        key: key.clone(),
                        ver,
                        end: e_end,
                    })
                }
            }
        }
    }
    for key in earlier.readset.keys() {
        if later.writeset.contains_key(key) {
            let kind = if concurrent {
                DependencyKind::CRw
            } else {
                DependencyKind::NRw
            };
            out.push(dep(kind, earlier, later, key));
        }
    }
    out.sort();
    Ok(out)
}
