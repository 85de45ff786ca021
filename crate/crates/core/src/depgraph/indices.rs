//! Access indices used to resolve dependencies: committed writers (CW) and
//! committed readers (CR) keyed by record then commit sequence, plus the
//! in-memory pending writers (PW) and pending readers (PR).

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::ops::Bound;
use std::path::Path;

use crate::model::{Key, SeqNum, TxnId};

/// Ordered `(key, commit seq) -> txn` storage.
pub trait IndexStore: Send {
    fn insert(&mut self, key: &Key, seq: SeqNum, txn: TxnId);
    /// Entries of `key` with commit seq `>= from`, in commit order.
    fn range_from(&self, key: &str, from: SeqNum) -> Vec<(SeqNum, TxnId)>;
    /// Last entry of `key` with commit seq `< seq`.
    fn before(&self, key: &str, seq: SeqNum) -> Option<(SeqNum, TxnId)>;
    fn last(&self, key: &str) -> Option<(SeqNum, TxnId)>;
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// In-memory ordered map; the default backend.
#[derive(Debug, Default)]
pub struct MemIndex {
    map: BTreeMap<Key, BTreeMap<SeqNum, TxnId>>,
    len: usize,
}

impl IndexStore for MemIndex {
    fn insert(&mut self, key: &Key, seq: SeqNum, txn: TxnId) {
        if self.map.entry(key.clone()).or_default().insert(seq, txn).is_none() {
            self.len += 1;
        }
    }

    fn range_from(&self, key: &str, from: SeqNum) -> Vec<(SeqNum, TxnId)> {
        match self.map.get(key) {
            Some(h) => h.range(from..).map(|(s, t)| (*s, *t)).collect(),
            None => Vec::new(),
        }
    }

    fn before(&self, key: &str, seq: SeqNum) -> Option<(SeqNum, TxnId)> {
        self.map
            .get(key)?
            .range((Bound::Unbounded, Bound::Excluded(seq)))
            .next_back()
            .map(|(s, t)| (*s, *t))
    }

    fn last(&self, key: &str) -> Option<(SeqNum, TxnId)> {
        self.map.get(key)?.last_key_value().map(|(s, t)| (*s, *t))
    }

    fn len(&self) -> usize {
        self.len
    }
}

/// Append-only log on disk with an in-memory ordered index rebuilt on open.
/// Each record is a `key<TAB>block:pos<TAB>txn` line.
pub struct LogIndex {
    mem: MemIndex,
    out: BufWriter<File>,
}

impl LogIndex {
    pub fn open(path: &Path) -> io::Result<Self> {
        let mut mem = MemIndex::default();
        if path.exists() {
            let f = BufReader::new(File::open(path)?);
            for (i, line) in f.lines().enumerate() {
                let line = line?;
                let bad = || io::Error::new(io::ErrorKind::InvalidData, format!("index log line {}", i + 1));
                let mut parts = line.split('\t');
                let (Some(k), Some(s), Some(t), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
                    return Err(bad());
                };
                let seq: SeqNum = s.parse().map_err(|_| bad())?;
                let txn: u64 = t.parse().map_err(|_| bad())?;
                mem.insert(&Key::from(k), seq, TxnId(txn));
            }
        }
        let out = BufWriter::new(OpenOptions::new().create(true).append(true).open(path)?);
        Ok(LogIndex { mem, out })
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.out.flush()
    }
}

impl IndexStore for LogIndex {
    fn insert(&mut self, key: &Key, seq: SeqNum, txn: TxnId) {
        if let Err(e) = writeln!(self.out, "{key}\t{seq}\t{}", txn.0) {
            log::error!("index log append failed: {e}");
        }
        self.mem.insert(key, seq, txn);
    }

    fn range_from(&self, key: &str, from: SeqNum) -> Vec<(SeqNum, TxnId)> {
        self.mem.range_from(key, from)
    }

    fn before(&self, key: &str, seq: SeqNum) -> Option<(SeqNum, TxnId)> {
        self.mem.before(key, seq)
    }

    fn last(&self, key: &str) -> Option<(SeqNum, TxnId)> {
        self.mem.last(key)
    }

    fn len(&self) -> usize {
        self.mem.len()
    }
}

impl Drop for LogIndex {
    fn drop(&mut self) {
        let _ = self.out.flush();
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IndexQuery {
    /// Last committed writer strictly before the given seq.
    Before(SeqNum),
    /// Last committed writer.
    Last,
    /// Committed writers at or after the given seq.
    RangeFrom(SeqNum),
}

pub struct AccessIndices {
    pub cw: Box<dyn IndexStore>,
    pub cr: Box<dyn IndexStore>,
    pub pw: BTreeMap<Key, Vec<TxnId>>,
    pub pr: BTreeMap<Key, Vec<TxnId>>,
}

impl Default for AccessIndices {
    fn default() -> Self {
        Self::new(Box::<MemIndex>::default(), Box::<MemIndex>::default())
    }
}

impl std::fmt::Debug for AccessIndices {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AccessIndices")
            .field("cw", &self.cw.len())
            .field("cr", &self.cr.len())
            .field("pw", &self.pw.len())
            .field("pr", &self.pr.len())
            .finish()
    }
}

impl AccessIndices {
    pub fn new(cw: Box<dyn IndexStore>, cr: Box<dyn IndexStore>) -> Self {
        AccessIndices {
            cw,
            cr,
            pw: BTreeMap::new(),
            pr: BTreeMap::new(),
        }
    }

    /// Queries the committed-writer index.
    pub fn query(&self, q: IndexQuery, key: &str) -> Vec<TxnId> {
        match q {
            IndexQuery::Before(s) => self.cw.before(key, s).map(|(_, t)| t).into_iter().collect(),
            IndexQuery::Last => self.cw.last(key).map(|(_, t)| t).into_iter().collect(),
            IndexQuery::RangeFrom(s) => self.cw.range_from(key, s).into_iter().map(|(_, t)| t).collect(),
        }
    }

    pub fn pending_writers(&self, key: &str) -> &[TxnId] {
        self.pw.get(key).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn pending_readers(&self, key: &str) -> &[TxnId] {
        self.pr.get(key).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn add_pending(&mut self, txn: TxnId, reads: impl Iterator<Item = Key>, writes: impl Iterator<Item = Key>) {
        for k in reads {
            self.pr.entry(k).or_default().push(txn);
        }
        for k in writes {
            self.pw.entry(k).or_default().push(txn);
        }
    }

    pub fn remove_pending_read(&mut self, key: &str, txn: TxnId) {
        remove_from(&mut self.pr, key, txn);
    }

    pub fn remove_pending_write(&mut self, key: &str, txn: TxnId) {
        remove_from(&mut self.pw, key, txn);
    }
}

fn remove_from(map: &mut BTreeMap<Key, Vec<TxnId>>, key: &str, txn: TxnId) {
    if let Some(v) = map.get_mut(key) {
        v.retain(|t| *t != txn);
        if v.is_empty() {
            map.remove(key);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn k(s: &str) -> Key {
        Key::from(s)
    }

    fn fig2a(idx: &mut dyn IndexStore) {
        idx.insert(&k("A"), SeqNum::new(1, 1), TxnId(101));
        idx.insert(&k("B"), SeqNum::new(1, 2), TxnId(102));
        idx.insert(&k("B"), SeqNum::new(2, 1), TxnId(103));
        idx.insert(&k("C"), SeqNum::new(2, 1), TxnId(103));
    }

    #[test]
    fn queries_on_fig2a_history() {
        let mut idx = MemIndex::default();
        fig2a(&mut idx);
        assert_eq!(idx.last("C"), Some((SeqNum::new(2, 1), TxnId(103))));
        assert_eq!(idx.before("C", SeqNum::new(1, 0)), None);
        assert_eq!(
            idx.range_from("B", SeqNum::new(2, 0)),
            vec![(SeqNum::new(2, 1), TxnId(103))]
        );
        assert_eq!(
            idx.before("B", SeqNum::new(2, 0)),
            Some((SeqNum::new(1, 2), TxnId(102)))
        );
        assert!(idx.range_from("Z", SeqNum::NIL).is_empty());
        assert_eq!(idx.len(), 4);
    }

    #[test]
    fn log_index_replays() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cw.log");
        {
            let mut idx = LogIndex::open(&path).unwrap();
            fig2a(&mut idx);
        }
        let mut idx = LogIndex::open(&path).unwrap();
        assert_eq!(idx.len(), 4);
        assert_eq!(idx.last("B"), Some((SeqNum::new(2, 1), TxnId(103))));
        idx.insert(&k("A"), SeqNum::new(3, 2), TxnId(7));
        drop(idx);
        let idx = LogIndex::open(&path).unwrap();
        assert_eq!(idx.last("A"), Some((SeqNum::new(3, 2), TxnId(7))));
    }

    #[test]
    fn pending_sets() {
        let mut ai = AccessIndices::default();
        ai.add_pending(TxnId(1), [k("A")].into_iter(), [k("B")].into_iter());
        ai.add_pending(TxnId(2), std::iter::empty(), [k("B")].into_iter());
        assert_eq!(ai.pending_writers("B"), &[TxnId(1), TxnId(2)]);
        ai.remove_pending_write("B", TxnId(1));
        assert_eq!(ai.pending_writers("B"), &[TxnId(2)]);
        ai.remove_pending_read("A", TxnId(1));
        assert!(ai.pr.is_empty());
    }

    proptest! {
        #[test]
        fn range_queries_match_linear_scan(
            entries in prop::collection::vec((0u8..4, 1u64..20, 1u32..5), 0..60),
            probe in (0u8..4, 0u64..22, 0u32..6),
        ) {
            let mut idx = MemIndex::default();
            let mut all: Vec<(String, SeqNum, TxnId)> = Vec::new();
            for (i, (key, b, p)) in entries.iter().enumerate() {
                let key = format!("k{key}");
                let s = SeqNum::new(*b, *p);
                if all.iter().any(|(k2, s2, _)| *k2 == key && *s2 == s) {
                    continue;
                }
                idx.insert(&Key::from(key.as_str()), s, TxnId(i as u64));
                all.push((key, s, TxnId(i as u64)));
            }
            let key = format!("k{}", probe.0);
            let seq = SeqNum::new(probe.1, probe.2);
            let mut hist: Vec<(SeqNum, TxnId)> =
                all.iter().filter(|e| e.0 == key).map(|e| (e.1, e.2)).collect();
            hist.sort();
            let from: Vec<_> = hist.iter().copied().filter(|e| e.0 >= seq).collect();
            prop_assert_eq!(idx.range_from(&key, seq), from);
            prop_assert_eq!(idx.before(&key, seq), hist.iter().copied().rfind(|e| e.0 < seq));
            prop_assert_eq!(idx.last(&key), hist.last().copied());
        }
    }
}
