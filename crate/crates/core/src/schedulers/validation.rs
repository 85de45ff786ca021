//! Validation-phase checks run by peers on a formed block.

use std::collections::{HashMap, HashSet};

use crate::model::{Key, SeqNum, Transaction, TxnStatus, Version};
use crate::mvstore::MvStore;

/// Version check: a transaction commits iff every version it read is still
/// the latest, counting writes of earlier committed transactions in the
/// same block.
pub fn fabric_validate(block: &[Transaction], store: &MvStore) -> Vec<TxnStatus> {
    let mut overlay: HashMap<&Key, Version> = HashMap::new();
    block
        .iter()
        .map(|t| {
            let fresh = t.readset.iter().all(|(k, v)| {
                let cur = overlay
                    .get(k)
                    .copied()
                    .or_else(|| store.latest_version(k))
                    .unwrap_or(SeqNum::NIL);
                cur == *v
            });
            if fresh {
                let end = t.end_ts.unwrap_or(SeqNum::NIL);
                for k in t.writeset.keys() {
                    overlay.insert(k, end);
                }
                TxnStatus::Committed
            } else {
                TxnStatus::AbortedValidation
            }
        })
        .collect()
}

fn snapshot_consistent(t: &Transaction, store: &MvStore) -> bool {
    let b = t.snapshot_block();
    t.readset
        .iter()
        .all(|(k, v)| store.version_at(b, k).unwrap_or(SeqNum::NIL) == *v)
}

/// Accepts any transaction whose reads form a consistent snapshot.
pub fn snapshot_validate(block: &[Transaction], store: &MvStore) -> Vec<TxnStatus> {
    block
        .iter()
        .map(|t| {
            if snapshot_consistent(t, store) {
                TxnStatus::Committed
            } else {
                TxnStatus::AbortedValidation
            }
        })
        .collect()
}

/// Check for blocks whose order was computed by the dependency graph. Reads
/// must come from one snapshot, and no transaction may read a key written
/// earlier in the same block: readers of a key are always ordered ahead of
/// its pending writers.
pub fn reordered_validate(block: &[Transaction], store: &MvStore) -> Vec<TxnStatus> {
    let mut written: HashSet<&Key> = HashSet::new();
    block
        .iter()
        .map(|t| {
            let ok = snapshot_consistent(t, store) && t.readset.keys().all(|k| !written.contains(k));
            if ok {
                written.extend(t.writeset.keys());
                TxnStatus::Committed
            } else {
                TxnStatus::AbortedValidation
            }
        })
        .collect()
}
