use std::path::Path;
use std::process::{Command, Output};

use eov_core::pipeline::LedgerBlock;
use eov_core::{Ledger, SeqNum, Transaction, TxnId, TxnStatus};

fn eov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eov")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn zero_block_size_is_a_config_error() {
    let o = eov(&["run", "--block-size", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("block_size"));
}

#[test]
fn unknown_flag_prints_usage() {
    let o = eov(&["run", "--blocksize", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(eov(&["run", "--policy", "nope"]).status.code(), Some(2));
}

#[test]
fn help_lists_flags() {
    let text = stdout(&eov(&["run", "--help"]));
    for flag in [
        "--policy",
        "--block-size",
        "--write-hot",
        "--read-hot",
        "--client-delay",
        "--read-interval",
        "--max-span",
        "--rate",
        "--txns",
        "--seed",
        "--reach",
        "--out",
        "--format",
        "--config",
    ] {
        assert!(text.contains(flag), "{flag} missing from help");
    }
}

#[test]
fn run_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let ledger = dir.path().join("out/ledger.json");
    let report = dir.path().join("out/report.csv");
    let o = eov(&[
        "run",
        "--policy",
        "sharp",
        "--txns",
        "2000",
        "--seed",
        "1",
        "--ledger",
        p(&ledger),
        "--out",
        p(&report),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(&report).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.lines().nth(1).unwrap().starts_with("sharp,200,10,10,0,0,1,"));
    let v = eov(&["verify", p(&ledger)]);
    assert!(v.status.success());
    assert!(stdout(&v).starts_with("ok:"));
}

#[test]
fn verify_rejects_write_skew() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("skew.json");
    let a = Transaction::new(TxnId(1), SeqNum::snapshot(0))
        .with_read("X", SeqNum::new(0, 1))
        .with_write("Y", 1)
        .with_end(SeqNum::new(1, 1));
    let b = Transaction::new(TxnId(2), SeqNum::snapshot(0))
        .with_read("Y", SeqNum::new(0, 2))
        .with_write("X", 2)
        .with_end(SeqNum::new(1, 2));
    let ledger = Ledger {
        genesis: vec![("X".into(), 0), ("Y".into(), 0)],
        blocks: vec![LedgerBlock {
            number: 1,
            formed_tick: 0,
            committed_tick: 1,
            txns: [a, b]
                .into_iter()
                .map(|mut t| {
                    t.status = TxnStatus::Committed;
                    t
                })
                .collect(),
        }],
        ..Ledger::default()
    };
    ledger.save(&path).unwrap();
    let o = eov(&["verify", p(&path)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cycle"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"block_size": 50, "txns": 500, "policy": "fabric"}"#).unwrap();
    let o = eov(&["run", "--config", p(&cfg), "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v[0]["config"]["block_size"], 50);
    assert_eq!(v[0]["config"]["policy"], "fabric");
    let o = eov(&["run", "--config", p(&cfg), "--format", "json", "--block-size", "20"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v[0]["config"]["block_size"], 20);
    assert_eq!(v[0]["metrics"]["submitted"], 500);

    std::fs::write(&cfg, r#"{"blocksize": 50}"#).unwrap();
    assert_eq!(eov(&["run", "--config", p(&cfg)]).status.code(), Some(2));
}

#[test]
fn sweep_writes_one_row_per_point() {
    let o = eov(&[
        "sweep",
        "--axis",
        "write-hot",
        "--values",
        "0,50",
        "--policies",
        "all",
        "--seeds",
        "1,2",
        "--txns",
        "400",
        "--block-size",
        "50",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2 * 2 * 5);
    assert_eq!(rows.iter().filter(|r| r.split(',').nth(2) == Some("50")).count(), 10);
    // Each row is the same as a standalone run.
    let single = eov(&[
        "run",
        "--policy",
        "focc-s",
        "--write-hot",
        "50",
        "--seed",
        "2",
        "--txns",
        "400",
        "--block-size",
        "50",
    ]);
    let line = stdout(&single).lines().nth(1).unwrap().to_string();
    assert!(rows.contains(&line.as_str()));
}

#[test]
fn sweep_rejects_bad_values() {
    let o = eov(&["sweep", "--axis", "write-hot", "--values", "70", "--txns", "400"]);
    assert_eq!(o.status.code(), Some(2));
    let o = eov(&["sweep", "--axis", "block-size", "--values", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn generated_trace_replays() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.jsonl");
    assert!(eov(&["gen-trace", "--txns", "300", "--seed", "4", "--out", p(&trace)])
        .status
        .success());
    assert_eq!(std::fs::read_to_string(&trace).unwrap().lines().count(), 300);
    let a = eov(&[
        "run",
        "--trace",
        p(&trace),
        "--txns",
        "300",
        "--seed",
        "4",
        "--block-size",
        "30",
    ]);
    let b = eov(&["run", "--txns", "300", "--seed", "4", "--block-size", "30"]);
    assert!(a.status.success());
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn bench_reports_rate() {
    let o = eov(&["bench", "--txns", "1000", "--block-size", "100"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["ops_per_minute"].as_f64().unwrap() > 0.0);
    assert_eq!(v["ops"], 1000 + 10);
}
