//! Multi-versioned key-value state with named block snapshots.
//!
//! Every key owns an append-only chain of `(version, value)` entries. A
//! snapshot is just a block number: reading through it returns the newest
//! entry whose version precedes `(block + 1, 0)`. Snapshots are registered
//! with a reference count so that execution can pin the state it simulates
//! against while later blocks commit.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::sync::Arc;

use parking_lot::RwLock;
use thiserror::Error;

use crate::model::{Key, SeqNum, Value, Version};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StoreError {
    #[error("snapshot {0} is not retained")]
    StaleSnapshot(u64),
    #[error("block {got} applied out of order, expected {expected}")]
    OutOfOrder { expected: u64, got: u64 },
    #[error("block {block}: positions must be 1-based and strictly increasing")]
    BadPosition { block: u64 },
    #[error("genesis entries can only be loaded before the first block")]
    GenesisAfterBlocks,
}

/// One live `(key, ver, val)` tuple.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entry {
    pub key: Key,
    pub ver: Version,
    pub val: Value,
}

#[derive(Default)]
struct State {
    chains: HashMap<Key, Vec<(Version, Value)>>,
    /// Retained snapshots and their pin counts.
    snapshots: BTreeMap<u64, usize>,
    latest: u64,
    genesis_len: u32,
}

impl State {
    fn visible(&self, block: u64, key: &str) -> Option<(Version, Value)> {
        let chain = self.chains.get(key)?;
        let bound = SeqNum::snapshot(block);
        let idx = chain.partition_point(|(v, _)| *v < bound);
        idx.checked_sub(1).map(|i| chain[i])
    }
}

struct Inner {
    state: RwLock<State>,
}

/// Shared handle to the versioned state. Cloning is cheap; clones observe the
/// same state. Any number of readers may run alongside a single committer.
#[derive(Clone)]
pub struct MvStore {
    inner: Arc<Inner>,
}

impl Default for MvStore {
    fn default() -> Self {
        Self::new()
    }
}

impl std::fmt::Debug for MvStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let st = self.inner.state.read();
        f.debug_struct("MvStore")
            .field("latest", &st.latest)
            .field("keys", &st.chains.len())
            .field("snapshots", &st.snapshots.len())
            .finish()
    }
}

impl MvStore {
    /// An empty store whose genesis snapshot (block 0) is registered.
    pub fn new() -> Self {
        let mut state = State::default();
        state.snapshots.insert(0, 0);
        MvStore {
            inner: Arc::new(Inner {
                state: RwLock::new(state),
            }),
        }
    }

    /// Loads genesis entries; the `k`-th entry loaded gets version `(0, k)`.
    pub fn preload<I>(&self, entries: I) -> Result<(), StoreError>
    where
        I: IntoIterator<Item = (Key, Value)>,
    {
        let mut st = self.inner.state.write();
        if st.latest != 0 {
            return Err(StoreError::GenesisAfterBlocks);
        }
        for (key, val) in entries {
            st.genesis_len += 1;
            let ver = SeqNum::new(0, st.genesis_len);
            st.chains.entry(key).or_default().push((ver, val));
        }
        Ok(())
    }

    pub fn latest_block(&self) -> u64 {
        self.inner.state.read().latest
    }

    /// Pins the snapshot of the most recently committed block.
    pub fn pin_latest(&self) -> SnapshotHandle {
        let mut st = self.inner.state.write();
        let block = st.latest;
        *st.snapshots.entry(block).or_insert(0) += 1;
        SnapshotHandle {
            block,
            inner: self.inner.clone(),
        }
    }

    /// Pins a retained snapshot.
    pub fn pin(&self, block: u64) -> Result<SnapshotHandle, StoreError> {
        let mut st = self.inner.state.write();
        let rc = st.snapshots.get_mut(&block).ok_or(StoreError::StaleSnapshot(block))?;
        *rc += 1;
        Ok(SnapshotHandle {
            block,
            inner: self.inner.clone(),
        })
    }

    /// Reads `key` as of the handle's snapshot.
    pub fn read_at(&self, handle: &SnapshotHandle, key: &str) -> Result<Option<(Version, Value)>, StoreError> {
        if !Arc::ptr_eq(&self.inner, &handle.inner) {
            return Err(StoreError::StaleSnapshot(handle.block));
        }
        handle.read(key)
    }

    /// Version of `key` visible at the snapshot of `block`, whether or not
    /// that snapshot is still retained. Chains are append-only, so this is
    /// always answerable.
    pub fn version_at(&self, block: u64, key: &str) -> Option<Version> {
        self.inner.state.read().visible(block, key).map(|(v, _)| v)
    }

    pub fn read_latest(&self, key: &str) -> Option<(Version, Value)> {
        let st = self.inner.state.read();
        st.chains.get(key).and_then(|c| c.last().copied())
    }

    pub fn latest_version(&self, key: &str) -> Option<Version> {
        self.read_latest(key).map(|(v, _)| v)
    }

    /// Installs the effects of block `number`, given as `(position, writes)`
    /// pairs in block order, and registers its snapshot.
    pub fn apply_block<'a, I>(&self, number: u64, effects: I) -> Result<SnapshotHandle, StoreError>
    where
        I: IntoIterator<Item = (u32, &'a BTreeMap<Key, Value>)>,
    {
        let mut st = self.inner.state.write();
        if number != st.latest + 1 {
            return Err(StoreError::OutOfOrder {
                expected: st.latest + 1,
                got: number,
            });
        }
        let mut staged = Vec::new();
        let mut last_pos = 0;
        for (pos, writes) in effects {
            if pos <= last_pos {
                return Err(StoreError::BadPosition { block: number });
            }
            last_pos = pos;
            let ver = SeqNum::new(number, pos);
            staged.extend(writes.iter().map(|(k, v)| (k.clone(), ver, *v)));
        }
        for (key, ver, val) in staged {
            st.chains.entry(key).or_default().push((ver, val));
        }
        st.latest = number;
        st.snapshots.insert(number, 1);
        Ok(SnapshotHandle {
            block: number,
            inner: self.inner.clone(),
        })
    }

    /// Drops unpinned snapshots older than `min_live_block`. The latest
    /// snapshot is always kept. Returns how many were dropped.
    pub fn prune_snapshots(&self, min_live_block: u64) -> usize {
        let mut st = self.inner.state.write();
        let latest = st.latest;
        let doomed: Vec<u64> = st
            .snapshots
            .range(..min_live_block)
            .filter(|&(&b, &rc)| rc == 0 && b != latest)
            .map(|(&b, _)| b)
            .collect();
        for b in &doomed {
            st.snapshots.remove(b);
        }
        doomed.len()
    }

    pub fn retained_snapshots(&self) -> Vec<(u64, usize)> {
        let st = self.inner.state.read();
        st.snapshots.iter().map(|(&b, &rc)| (b, rc)).collect()
    }

    /// Latest entry of every key, sorted by key.
    pub fn entries(&self) -> Vec<Entry> {
        let st = self.inner.state.read();
        let mut out: Vec<Entry> = st
            .chains
            .iter()
            .filter_map(|(k, c)| {
                c.last().map(|&(ver, val)| Entry {
                    key: k.clone(),
                    ver,
                    val,
                })
            })
            .collect();
        out.sort_by(|a, b| a.key.cmp(&b.key));
        out
    }

    /// State dump, one `key<TAB>block:pos<TAB>value` line per live key.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for e in self.entries() {
            let _ = writeln!(s, "{}\t{}\t{}", e.key, e.ver, e.val);
        }
        s
    }
}

/// A pinned snapshot. The pin is released on drop.
pub struct SnapshotHandle {
    block: u64,
    inner: Arc<Inner>,
}

impl SnapshotHandle {
    pub fn block(&self) -> u64 {
        self.block
    }

    /// Sequence number of this snapshot, used as a start timestamp.
    pub fn seq(&self) -> SeqNum {
        SeqNum::snapshot(self.block)
    }

    pub fn refcount(&self) -> usize {
        self.inner.state.read().snapshots.get(&self.block).copied().unwrap_or(0)
    }

    pub fn read(&self, key: &str) -> Result<Option<(Version, Value)>, StoreError> {
        let st = self.inner.state.read();
        if !st.snapshots.contains_key(&self.block) {
            return Err(StoreError::StaleSnapshot(self.block));
        }
        Ok(st.visible(self.block, key))
    }
}

impl Clone for SnapshotHandle {
    fn clone(&self) -> Self {
        let mut st = self.inner.state.write();
        *st.snapshots.entry(self.block).or_insert(0) += 1;
        SnapshotHandle {
            block: self.block,
            inner: self.inner.clone(),
        }
    }
}

impl Drop for SnapshotHandle {
    fn drop(&mut self) {
        let mut st = self.inner.state.write();
        if let Some(rc) = st.snapshots.get_mut(&self.block) {
            *rc = rc.saturating_sub(1);
        }
    }
}

impl std::fmt::Debug for SnapshotHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SnapshotHandle").field("block", &self.block).finish()
    }
}
