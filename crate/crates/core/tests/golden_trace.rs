//! Five transactions racing against two earlier blocks. Block 1 installs
//! A@(1,1) and B@(1,2), block 2 installs B and C at (2,1). Block 3 then
//! receives Txn2..Txn5 while Txn1 reads across the commit of block 2.

use std::collections::BTreeMap;

use eov_core::oracle::verify_serializable;
use eov_core::pipeline::{run_trace, SimResult};
use eov_core::{ContractCall, Key, PolicyKind, Proposal, SeqNum, SimConfig, Trace, TxnId, TxnStatus, Version};

fn rw(reads: &[&str], writes: &[(&str, i64)]) -> ContractCall {
    ContractCall::ReadWrite {
        reads: reads.iter().map(|k| Key::from(*k)).collect(),
        writes: writes
            .iter()
            .map(|(k, v)| (Key::from(*k), *v))
            .collect::<BTreeMap<_, _>>(),
    }
}

fn trace() -> Trace {
    Trace {
        proposals: vec![
            Proposal::new(101, 0, rw(&[], &[("A", 101)])),
            Proposal::new(102, 0, rw(&[], &[("B", 102)])),
            Proposal::new(103, 30, rw(&[], &[("B", 202), ("C", 201)])),
            // Reads at 40 and 45 against block 1, reaches the orderer after block 2 is cut.
            Proposal::new(2, 40, rw(&["A", "B"], &[("C", 302)])).with_delay(5),
            // First read at 48, second at 53, block 2 commits at 51.
            Proposal::new(1, 48, rw(&["B", "C"], &[("C", 301)])),
            Proposal::new(3, 52, rw(&["B"], &[("C", 303)])),
            Proposal::new(4, 53, rw(&["C"], &[("B", 304)])),
            Proposal::new(5, 54, rw(&["C"], &[("A", 305)])),
        ],
    }
}

fn run(policy: PolicyKind) -> SimResult {
    let cfg = SimConfig {
        policy,
        block_size: 4,
        block_timeout: Some(20),
        read_interval: 5,
        ..SimConfig::default()
    };
    let genesis = vec![(Key::from("A"), 1), (Key::from("B"), 2)];
    let r = run_trace(&cfg, &trace(), genesis).unwrap();
    verify_serializable(&r.ledger).unwrap();
    r
}

fn status(r: &SimResult, id: u64) -> TxnStatus {
    let id = TxnId(id);
    r.ledger
        .all_txns()
        .find(|t| t.id == id)
        .map(|t| t.status)
        .or_else(|| r.ledger.rejected.iter().find(|x| x.id == id).map(|x| x.status))
        .unwrap_or_else(|| panic!("{id} has no status"))
}

fn block_ids(r: &SimResult, number: u64) -> Vec<u64> {
    let b = &r.ledger.blocks[number as usize - 1];
    assert_eq!(b.number, number);
    b.txns.iter().map(|t| t.id.0).collect()
}

fn read_version(r: &SimResult, id: u64, key: &str) -> Version {
    r.ledger.all_txns().find(|t| t.id == TxnId(id)).unwrap().readset[key]
}

#[test]
fn setup_blocks() {
    let r = run(PolicyKind::Fabric);
    assert_eq!(block_ids(&r, 1), [101, 102]);
    assert_eq!(block_ids(&r, 2), [103]);
    assert_eq!(r.ledger.blocks[1].committed_tick, 51);
}

#[test]
fn fabric_row() {
    use TxnStatus::*;
    let r = run(PolicyKind::Fabric);
    assert_eq!(block_ids(&r, 3), [2, 3, 4, 5]);
    assert_eq!(read_version(&r, 2, "A"), SeqNum::new(1, 1));
    assert_eq!(read_version(&r, 2, "B"), SeqNum::new(1, 2));
    assert_eq!(read_version(&r, 3, "B"), SeqNum::new(2, 1));
    assert_eq!(read_version(&r, 4, "C"), SeqNum::new(2, 1));
    assert_eq!(status(&r, 2), AbortedValidation);
    assert_eq!(status(&r, 3), Committed);
    assert_eq!(status(&r, 4), AbortedValidation);
    assert_eq!(status(&r, 5), AbortedValidation);
    // The lock forbids the cross-block read: Txn1 runs again on block 2
    // and only reaches a later block.
    assert_eq!(r.metrics.resimulated, 1);
    assert!(!block_ids(&r, 3).contains(&1));
    assert_eq!(read_version(&r, 1, "B"), SeqNum::new(2, 1));
    assert_eq!(read_version(&r, 1, "C"), SeqNum::new(2, 1));
    assert_eq!(r.store.read_latest("C"), Some((SeqNum::new(3, 2), 303)));
}

#[test]
fn fabricpp_row() {
    use TxnStatus::*;
    let r = run(PolicyKind::FabricPlusPlus);
    assert_eq!(status(&r, 1), AbortedEarly);
    assert_ne!(status(&r, 2), Committed);
    assert_ne!(status(&r, 3), Committed);
    assert_eq!(status(&r, 4), Committed);
    assert_eq!(status(&r, 5), Committed);
    assert_eq!(r.metrics.committed, 3 + 2);
}

#[test]
fn sharp_commits_at_least_as_many() {
    let r = run(PolicyKind::Sharp);
    let ours = [1, 2, 3, 4, 5]
        .iter()
        .filter(|&&i| status(&r, i) == TxnStatus::Committed)
        .count();
    assert!(ours >= 2, "sharp committed {ours} of the five");
    assert_eq!(r.metrics.aborted(TxnStatus::AbortedValidation), 0);
}
