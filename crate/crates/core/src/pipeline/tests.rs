use super::*;
use crate::workload::{ContractCall, WorkloadKind};

fn small(policy: PolicyKind) -> SimConfig {
    SimConfig {
        policy,
        block_size: 20,
        txns: 600,
        workload: WorkloadSpec {
            accounts: 500,
            hot_fraction: 0.02,
            ..WorkloadSpec::default()
        },
        ..SimConfig::default()
    }
}

#[test]
fn same_seed_same_ledger() {
    for k in PolicyKind::ALL {
        let a = run(&small(k)).unwrap();
        let b = run(&small(k)).unwrap();
        assert_eq!(a.ledger, b.ledger, "{k}");
        assert_eq!(a.metrics, b.metrics, "{k}");
    }
}

#[test]
fn every_transaction_gets_one_status() {
    for k in PolicyKind::ALL {
        let r = run(&small(k)).unwrap();
        let m = &r.metrics;
        assert_eq!(m.submitted, 600);
        assert_eq!(m.committed + m.total_aborted() + m.app_errors, m.submitted, "{k}");
        assert!(m.raw_throughput >= m.effective_throughput);
        let mut ids: Vec<TxnId> = r.ledger.all_txns().map(|t| t.id).collect();
        ids.extend(r.ledger.rejected.iter().map(|x| x.id));
        ids.sort();
        let n = ids.len();
        ids.dedup();
        assert_eq!(ids.len(), n, "{k}: a transaction appears twice");
    }
}

#[test]
fn blocks_are_contiguous_and_bounded() {
    let r = run(&small(PolicyKind::Sharp)).unwrap();
    for (i, b) in r.ledger.blocks.iter().enumerate() {
        assert_eq!(b.number, i as u64 + 1);
        assert!(!b.txns.is_empty() && b.txns.len() <= 20);
        for (j, t) in b.txns.iter().enumerate() {
            assert_eq!(t.end_ts, Some(SeqNum::new(b.number, j as u32 + 1)));
            assert!(t.start_ts < t.end_ts.unwrap());
        }
        assert!(b.formed_tick <= b.committed_tick);
    }
}

#[test]
fn ledger_replays_to_final_state() {
    for k in PolicyKind::ALL {
        let r = run(&small(k)).unwrap();
        assert_eq!(r.ledger.replay().unwrap().dump(), r.store.dump(), "{k}");
    }
}

#[test]
fn noop_workload_commits_everything() {
    for k in PolicyKind::ALL {
        let mut cfg = small(k);
        cfg.workload.kind = WorkloadKind::Noop;
        let r = run(&cfg).unwrap();
        assert_eq!(r.metrics.committed, 600, "{k}");
        assert_eq!(r.metrics.raw_throughput, r.metrics.effective_throughput);
    }
}

#[test]
fn sharp_never_fails_validation() {
    let mut cfg = small(PolicyKind::Sharp);
    cfg.workload.write_hot_ratio = 50;
    cfg.workload.read_hot_ratio = 50;
    cfg.read_interval = 10;
    let r = run(&cfg).unwrap();
    assert_eq!(r.metrics.aborted(TxnStatus::AbortedValidation), 0);
    assert!(r.metrics.committed > 0);
}

#[test]
fn timeout_cuts_partial_blocks() {
    let trace = Trace {
        proposals: (1..=3).map(|i| Proposal::new(i, i * 10, ContractCall::Noop)).collect(),
    };
    let cfg = SimConfig {
        policy: PolicyKind::Fabric,
        block_size: 10,
        block_timeout: Some(100),
        ..SimConfig::default()
    };
    let r = run_trace(&cfg, &trace, Vec::new()).unwrap();
    assert_eq!(r.ledger.blocks.len(), 1);
    assert_eq!(r.ledger.blocks[0].formed_tick, 110);
    assert_eq!(r.ledger.blocks[0].committed_tick, 113);
}

#[test]
fn arrival_ties_break_by_id() {
    let trace = Trace {
        proposals: [5, 2, 9, 1]
            .into_iter()
            .map(|i| Proposal::new(i, 7, ContractCall::Noop))
            .collect(),
    };
    let cfg = SimConfig {
        policy: PolicyKind::Fabric,
        block_size: 4,
        ..SimConfig::default()
    };
    let r = run_trace(&cfg, &trace, Vec::new()).unwrap();
    let ids: Vec<u64> = r.ledger.blocks[0].txns.iter().map(|t| t.id.0).collect();
    assert_eq!(ids, vec![1, 2, 5, 9]);
}

#[test]
fn invalid_configs_are_rejected() {
    let bad = [
        SimConfig {
            block_size: 0,
            ..SimConfig::default()
        },
        SimConfig {
            max_span: 0,
            ..SimConfig::default()
        },
        SimConfig {
            txns: 10,
            ..SimConfig::default()
        },
        SimConfig {
            rate: 0.0,
            ..SimConfig::default()
        },
    ];
    for cfg in bad {
        assert!(matches!(run(&cfg), Err(ConfigError::Invalid(_))));
    }
}

#[test]
fn snapshots_stay_bounded() {
    let mut cfg = small(PolicyKind::Sharp);
    cfg.txns = 2000;
    let r = run(&cfg).unwrap();
    assert!(r.metrics.blocks >= 10);
    assert!(r.metrics.max_retained_snapshots <= cfg.max_span + 1);
}

#[test]
fn config_json_round_trip() {
    let cfg = small(PolicyKind::FoccL);
    let text = serde_json::to_string(&cfg).unwrap();
    assert_eq!(serde_json::from_str::<SimConfig>(&text).unwrap(), cfg);
    assert!(serde_json::from_str::<SimConfig>(r#"{"blocksize": 3}"#).is_err());
    let partial: SimConfig = serde_json::from_str(r#"{"block_size": 3}"#).unwrap();
    assert_eq!(partial.block_size, 3);
    assert_eq!(partial.rate, 700.0);
}
