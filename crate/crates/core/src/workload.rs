//! Smallbank-style workload generation, contract semantics and trace files.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use rand::distr::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp, Zipf};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Key, SeqNum, TxnId, Value, Version};

/// Balance every preloaded account starts with.
pub const INITIAL_BALANCE: Value = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkloadKind {
    ModifiedSmallbank,
    CreateAccount,
    Mixed,
    Noop,
}

impl WorkloadKind {
    pub fn as_str(self) -> &'static str {
        match self {
            WorkloadKind::ModifiedSmallbank => "modified_smallbank",
            WorkloadKind::CreateAccount => "create_account",
            WorkloadKind::Mixed => "mixed",
            WorkloadKind::Noop => "noop",
        }
    }
}

impl FromStr for WorkloadKind {
    type Err = WorkloadError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "modified_smallbank" | "smallbank" | "update" => Ok(WorkloadKind::ModifiedSmallbank),
            "create_account" => Ok(WorkloadKind::CreateAccount),
            "mixed" => Ok(WorkloadKind::Mixed),
            "noop" | "no_op" => Ok(WorkloadKind::Noop),
            _ => Err(WorkloadError::UnknownKind(s.to_string())),
        }
    }
}

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("unknown workload kind `{0}`")]
    UnknownKind(String),
    #[error("{name} must be within 0..=50, got {value}")]
    RatioOutOfRange { name: &'static str, value: u32 },
    #[error("invalid workload parameter: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorkloadSpec {
    pub kind: WorkloadKind,
    pub accounts: u64,
    pub hot_fraction: f64,
    pub write_hot_ratio: u32,
    pub read_hot_ratio: u32,
    pub zipf_theta: f64,
    pub reads_per_txn: usize,
    pub writes_per_txn: usize,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        WorkloadSpec {
            kind: WorkloadKind::ModifiedSmallbank,
            accounts: 10_000,
            hot_fraction: 0.01,
            write_hot_ratio: 10,
            read_hot_ratio: 10,
            zipf_theta: 0.0,
            reads_per_txn: 4,
            writes_per_txn: 4,
        }
    }
}

impl WorkloadSpec {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        if self.write_hot_ratio > 50 {
            return Err(WorkloadError::RatioOutOfRange {
                name: "write_hot_ratio",
                value: self.write_hot_ratio,
            });
        }
        if self.read_hot_ratio > 50 {
            return Err(WorkloadError::RatioOutOfRange {
                name: "read_hot_ratio",
                value: self.read_hot_ratio,
            });
        }
        if !(self.hot_fraction > 0.0 && self.hot_fraction < 1.0) {
            return Err(WorkloadError::Invalid(format!(
                "hot_fraction must be in (0, 1), got {}",
                self.hot_fraction
            )));
        }
        if !(self.zipf_theta >= 0.0 && self.zipf_theta.is_finite()) {
            return Err(WorkloadError::Invalid(format!(
                "zipf_theta must be finite and >= 0, got {}",
                self.zipf_theta
            )));
        }
        if self.kind == WorkloadKind::ModifiedSmallbank {
            let hot = self.hot_accounts();
            let cold = self.accounts.saturating_sub(hot);
            let need = self.reads_per_txn.max(self.writes_per_txn) as u64;
            if hot < need || cold < need {
                return Err(WorkloadError::Invalid(format!(
                    "{} accounts cannot supply {} distinct hot and cold keys",
                    self.accounts, need
                )));
            }
        }
        if self.kind == WorkloadKind::Mixed && self.accounts < 2 {
            return Err(WorkloadError::Invalid("mixed workload needs 2+ accounts".into()));
        }
        Ok(())
    }

    /// Size of the hot set. The hot accounts are ids `0..hot_accounts()`.
    pub fn hot_accounts(&self) -> u64 {
        ((self.accounts as f64 * self.hot_fraction).ceil() as u64).max(1)
    }

    pub fn is_hot(&self, account: u64) -> bool {
        account < self.hot_accounts()
    }

    /// Preloaded state: a checking and a saving balance per account.
    pub fn genesis(&self) -> Vec<(Key, Value)> {
        if self.kind == WorkloadKind::Noop {
            return Vec::new();
        }
        let mut out = Vec::with_capacity(self.accounts as usize * 2);
        for a in 0..self.accounts {
            out.push((checking_key(a), INITIAL_BALANCE));
            out.push((saving_key(a), INITIAL_BALANCE));
        }
        out
    }
}

pub fn checking_key(account: u64) -> Key {
    Arc::from(format!("c:{account}"))
}

pub fn saving_key(account: u64) -> Key {
    Arc::from(format!("s:{account}"))
}

/// Account id encoded in a checking or saving key.
pub fn account_of(key: &str) -> Option<u64> {
    key.strip_prefix("c:")
        .or_else(|| key.strip_prefix("s:"))
        .and_then(|s| s.parse().ok())
}

/// A contract invocation with its pre-drawn arguments.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "fn", content = "args", rename_all = "snake_case")]
pub enum ContractCall {
    Noop,
    /// Raw access pattern: reads the listed keys and installs the writes.
    /// Used by the modified Smallbank workload and hand-written traces.
    ReadWrite {
        #[serde(default)]
        reads: Vec<Key>,
        #[serde(default)]
        writes: BTreeMap<Key, Value>,
    },
    CreateAccount {
        account: u64,
    },
    QueryAccount {
        account: u64,
    },
    DepositChecking {
        account: u64,
        amount: Value,
    },
    WriteCheck {
        account: u64,
        amount: Value,
    },
    TransactSaving {
        account: u64,
        amount: Value,
    },
    SendPayment {
        from: u64,
        to: u64,
        amount: Value,
    },
    Amalgamate {
        from: u64,
        to: u64,
    },
}

impl ContractCall {
    /// Number of reads the contract issues; drives the simulated duration.
    pub fn read_count(&self) -> usize {
        match self {
            ContractCall::Noop | ContractCall::CreateAccount { .. } => 0,
            ContractCall::ReadWrite { reads, .. } => reads.len(),
            ContractCall::QueryAccount { .. } => 2,
            ContractCall::DepositChecking { .. } | ContractCall::TransactSaving { .. } => 1,
            ContractCall::WriteCheck { .. } | ContractCall::SendPayment { .. } => 2,
            ContractCall::Amalgamate { .. } => 3,
        }
    }
}

/// Read access a contract runs against.
pub trait StateView {
    fn get(&mut self, key: &str) -> Option<(Version, Value)>;
}

impl StateView for BTreeMap<Key, (Version, Value)> {
    fn get(&mut self, key: &str) -> Option<(Version, Value)> {
        BTreeMap::get(self, key).copied()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Effects {
    pub readset: BTreeMap<Key, Version>,
    pub writeset: BTreeMap<Key, Value>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ContractError {
    #[error("account {0} does not exist")]
    MissingAccount(u64),
}

struct Recorder<'a, V: StateView + ?Sized> {
    view: &'a mut V,
    fx: Effects,
}

impl<V: StateView + ?Sized> Recorder<'_, V> {
    fn read(&mut self, key: &Key) -> Option<Value> {
        let got = self.view.get(key);
        self.fx
            .readset
            .entry(key.clone())
            .or_insert(got.map(|(v, _)| v).unwrap_or(SeqNum::NIL));
        // Reads observe the transaction's own buffered writes.
        if let Some(v) = self.fx.writeset.get(key) {
            return Some(*v);
        }
        got.map(|(_, v)| v)
    }

    fn balance(&mut self, key: Key, account: u64) -> Result<Value, ContractError> {
        self.read(&key).ok_or(ContractError::MissingAccount(account))
    }

    fn write(&mut self, key: Key, val: Value) {
        self.fx.writeset.insert(key, val);
    }
}

/// Runs a contract against `view`, recording the first version seen of every
/// key read and buffering all writes.
pub fn smallbank_contract<V: StateView + ?Sized>(call: &ContractCall, view: &mut V) -> Result<Effects, ContractError> {
    let mut r = Recorder {
        view,
        fx: Effects::default(),
    };
    match call {
        ContractCall::Noop => {}
        ContractCall::ReadWrite { reads, writes } => {
            for k in reads {
                r.read(k);
            }
            for (k, v) in writes {
                r.write(k.clone(), *v);
            }
        }
        ContractCall::CreateAccount { account } => {
            r.write(checking_key(*account), INITIAL_BALANCE);
            r.write(saving_key(*account), INITIAL_BALANCE);
        }
        &ContractCall::QueryAccount { account } => {
            r.balance(checking_key(account), account)?;
            r.balance(saving_key(account), account)?;
        }
        &ContractCall::DepositChecking { account, amount } => {
            let c = r.balance(checking_key(account), account)?;
            r.write(checking_key(account), c + amount);
        }
        &ContractCall::WriteCheck { account, amount } => {
            let c = r.balance(checking_key(account), account)?;
            let s = r.balance(saving_key(account), account)?;
            // Overdrawing the combined balance costs a one unit penalty.
            let debit = if c + s < amount { amount + 1 } else { amount };
            r.write(checking_key(account), c - debit);
        }
        &ContractCall::TransactSaving { account, amount } => {
            let s = r.balance(saving_key(account), account)?;
            r.write(saving_key(account), s + amount);
        }
        &ContractCall::SendPayment { from, to, amount } => {
            let a = r.balance(checking_key(from), from)?;
            let b = r.balance(checking_key(to), to)?;
            if from == to {
                r.write(checking_key(from), a);
            } else {
                r.write(checking_key(from), a - amount);
                r.write(checking_key(to), b + amount);
            }
        }
        &ContractCall::Amalgamate { from, to } => {
            let s = r.balance(saving_key(from), from)?;
            let c = r.balance(checking_key(from), from)?;
            let dst = r.balance(checking_key(to), to)?;
            if from != to {
                r.write(saving_key(from), 0);
                r.write(checking_key(from), 0);
                r.write(checking_key(to), dst + s + c);
            } else {
                r.write(saving_key(from), 0);
                r.write(checking_key(from), s + c);
            }
        }
    }
    Ok(r.fx)
}

/// One client request.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proposal {
    pub id: TxnId,
    /// Submit tick.
    pub tick: u64,
    #[serde(flatten)]
    pub call: ContractCall,
    /// Extra ticks between the end of simulation and arrival at the orderer,
    /// added on top of the configured client delay.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub delay: u64,
}

fn is_zero(v: &u64) -> bool {
    *v == 0
}

impl Proposal {
    pub fn new(id: u64, tick: u64, call: ContractCall) -> Self {
        Proposal {
            id: TxnId(id),
            tick,
            call,
            delay: 0,
        }
    }

    pub fn with_delay(mut self, delay: u64) -> Self {
        self.delay = delay;
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    pub proposals: Vec<Proposal>,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace i/o: {0}")]
    Io(#[from] io::Error),
    #[error("trace line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl Trace {
    pub fn len(&self) -> usize {
        self.proposals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.proposals.is_empty()
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), TraceError> {
        for p in &self.proposals {
            serde_json::to_writer(&mut w, p).map_err(io::Error::from)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    /// Parses line-delimited JSON. Blank lines are skipped. Proposals are
    /// sorted by `(tick, id)`; duplicate ids are rejected.
    pub fn read_from<R: Read>(r: R) -> Result<Trace, TraceError> {
        let mut proposals = Vec::new();
        let mut seen = HashSet::new();
        for (i, line) in BufReader::new(r).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let p: Proposal = serde_json::from_str(&line).map_err(|e| TraceError::Parse {
                line: i + 1,
                msg: e.to_string(),
            })?;
            if !seen.insert(p.id) {
                return Err(TraceError::Parse {
                    line: i + 1,
                    msg: format!("duplicate proposal id {}", p.id),
                });
            }
            proposals.push(p);
        }
        proposals.sort_by_key(|p| (p.tick, p.id));
        Ok(Trace { proposals })
    }
}

pub fn save_trace(path: &Path, trace: &Trace) -> Result<(), TraceError> {
    trace.write_to(BufWriter::new(File::create(path)?))
}

pub fn load_trace(path: &Path) -> Result<Trace, TraceError> {
    Trace::read_from(File::open(path)?)
}

// Separate streams so the submit schedule does not depend on the contract mix.
const CALL_STREAM: u64 = 1;
const TICK_STREAM: u64 = 2;

/// Generates `n` proposals with exponential inter-arrival times averaging
/// `1000 / rate` ticks.
pub fn generate(spec: &WorkloadSpec, seed: u64, n: usize, rate: f64) -> Result<Trace, WorkloadError> {
    spec.validate()?;
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(WorkloadError::Invalid(format!("request rate must be > 0, got {rate}")));
    }
    let mut calls = ChaCha8Rng::seed_from_u64(seed);
    calls.set_stream(CALL_STREAM);
    let mut ticks = ChaCha8Rng::seed_from_u64(seed);
    ticks.set_stream(TICK_STREAM);
    let gap = Exp::new(rate / 1000.0).map_err(|e| WorkloadError::Invalid(e.to_string()))?;
    let mut gen = CallGen::new(spec)?;
    let mut clock = 0.0f64;
    let mut proposals = Vec::with_capacity(n);
    for i in 0..n {
        let call = gen.next(&mut calls, i as u64);
        proposals.push(Proposal::new(i as u64 + 1, clock as u64, call));
        clock += gap.sample(&mut ticks);
    }
    Ok(Trace { proposals })
}

struct CallGen<'a> {
    spec: &'a WorkloadSpec,
    hot: Uniform<u64>,
    cold: Option<Uniform<u64>>,
    zipf: Option<Zipf<f64>>,
}

impl<'a> CallGen<'a> {
    fn new(spec: &'a WorkloadSpec) -> Result<Self, WorkloadError> {
        let h = spec.hot_accounts().min(spec.accounts.max(1));
        let hot = Uniform::new(0, h).map_err(|e| WorkloadError::Invalid(e.to_string()))?;
        let cold = (spec.accounts > h).then(|| Uniform::new(h, spec.accounts).expect("non-empty"));
        let zipf = match spec.kind {
            WorkloadKind::Mixed => Some(
                Zipf::new(spec.accounts as f64, spec.zipf_theta).map_err(|e| WorkloadError::Invalid(e.to_string()))?,
            ),
            _ => None,
        };
        Ok(CallGen { spec, hot, cold, zipf })
    }

    fn next<R: Rng>(&mut self, rng: &mut R, i: u64) -> ContractCall {
        match self.spec.kind {
            WorkloadKind::Noop => ContractCall::Noop,
            WorkloadKind::CreateAccount => ContractCall::CreateAccount {
                account: self.spec.accounts + i,
            },
            WorkloadKind::ModifiedSmallbank => {
                let reads = self.draw(rng, self.spec.reads_per_txn, self.spec.read_hot_ratio);
                let writes = self.draw(rng, self.spec.writes_per_txn, self.spec.write_hot_ratio);
                ContractCall::ReadWrite {
                    reads: reads.into_iter().map(checking_key).collect(),
                    writes: writes
                        .into_iter()
                        .map(|a| (checking_key(a), rng.random_range(1..=INITIAL_BALANCE)))
                        .collect(),
                }
            }
            WorkloadKind::Mixed => self.mixed(rng),
        }
    }

    /// Draws `n` distinct accounts. Each draw independently picks the hot set
    /// with probability `ratio / 100`; duplicates are redrawn within the same
    /// set so the hot/cold split is unaffected.
    fn draw<R: Rng>(&self, rng: &mut R, n: usize, ratio: u32) -> Vec<u64> {
        let mut out: Vec<u64> = Vec::with_capacity(n);
        for _ in 0..n {
            let hot = rng.random_range(0..100) < ratio;
            loop {
                let a = match (&self.cold, hot) {
                    (Some(c), false) => c.sample(rng),
                    _ => self.hot.sample(rng),
                };
                if !out.contains(&a) {
                    out.push(a);
                    break;
                }
            }
        }
        out
    }

    fn account<R: Rng>(&self, rng: &mut R) -> u64 {
        let z = self.zipf.as_ref().expect("mixed workload");
        (z.sample(rng) as u64).clamp(1, self.spec.accounts) - 1
    }

    fn mixed<R: Rng>(&self, rng: &mut R) -> ContractCall {
        let amount = rng.random_range(1..=100);
        let roll = rng.random_range(0..100);
        if roll < 50 {
            ContractCall::QueryAccount {
                account: self.account(rng),
            }
        } else if roll < 80 {
            let account = self.account(rng);
            match rng.random_range(0..3) {
                0 => ContractCall::DepositChecking { account, amount },
                1 => ContractCall::WriteCheck { account, amount },
                _ => ContractCall::TransactSaving { account, amount },
            }
        } else {
            let from = self.account(rng);
            let mut to = self.account(rng);
            while to == from {
                to = self.account(rng);
            }
            if rng.random_bool(0.5) {
                ContractCall::SendPayment { from, to, amount }
            } else {
                ContractCall::Amalgamate { from, to }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(spec: &WorkloadSpec) -> BTreeMap<Key, (Version, Value)> {
        spec.genesis()
            .into_iter()
            .enumerate()
            .map(|(i, (k, v))| (k, (SeqNum::new(0, i as u32 + 1), v)))
            .collect()
    }

    #[test]
    fn ratios_are_validated() {
        let spec = WorkloadSpec {
            write_hot_ratio: 51,
            ..Default::default()
        };
        assert!(matches!(spec.validate(), Err(WorkloadError::RatioOutOfRange { .. })));
        assert!(WorkloadSpec::default().validate().is_ok());
    }

    #[test]
    fn hot_set_is_a_prefix() {
        let spec = WorkloadSpec::default();
        assert_eq!(spec.hot_accounts(), 100);
        assert!(spec.is_hot(0) && spec.is_hot(99) && !spec.is_hot(100));
        let tiny = WorkloadSpec {
            accounts: 10,
            ..Default::default()
        };
        assert_eq!(tiny.hot_accounts(), 1);
    }

    #[test]
    fn zero_write_ratio_never_targets_hot_set() {
        let spec = WorkloadSpec {
            write_hot_ratio: 0,
            ..Default::default()
        };
        let t = generate(&spec, 3, 2000, 700.0).unwrap();
        for p in &t.proposals {
            let ContractCall::ReadWrite { writes, .. } = &p.call else {
                panic!("unexpected call");
            };
            assert_eq!(writes.len(), 4);
            assert!(writes.keys().all(|k| !spec.is_hot(account_of(k).unwrap())));
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = WorkloadSpec {
            kind: WorkloadKind::Mixed,
            zipf_theta: 0.8,
            ..Default::default()
        };
        let a = generate(&spec, 9, 500, 700.0).unwrap();
        let b = generate(&spec, 9, 500, 700.0).unwrap();
        assert_eq!(a, b);
        let c = generate(&spec, 10, 500, 700.0).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn submit_schedule_matches_rate() {
        let t = generate(&WorkloadSpec::default(), 1, 20_000, 700.0).unwrap();
        let span = t.proposals.last().unwrap().tick as f64;
        let rate = t.len() as f64 * 1000.0 / span;
        assert!((rate - 700.0).abs() < 20.0, "rate {rate}");
        assert!(t.proposals.windows(2).all(|w| w[0].tick <= w[1].tick));
    }

    #[test]
    fn create_account_reads_nothing() {
        let spec = WorkloadSpec::default();
        let mut st = state(&spec);
        let fx = smallbank_contract(&ContractCall::CreateAccount { account: 20_000 }, &mut st).unwrap();
        assert!(fx.readset.is_empty());
        assert_eq!(fx.writeset.len(), 2);
    }

    #[test]
    fn send_payment_moves_money() {
        let spec = WorkloadSpec {
            accounts: 200,
            ..Default::default()
        };
        let mut st = state(&spec);
        let fx = smallbank_contract(
            &ContractCall::SendPayment {
                from: 1,
                to: 2,
                amount: 30,
            },
            &mut st,
        )
        .unwrap();
        let keys: Vec<&str> = fx.readset.keys().map(|k| &**k).collect();
        assert_eq!(keys, ["c:1", "c:2"]);
        assert_eq!(fx.writeset[&checking_key(1)], INITIAL_BALANCE - 30);
        assert_eq!(fx.writeset[&checking_key(2)], INITIAL_BALANCE + 30);
    }

    #[test]
    fn amalgamate_zeroes_source() {
        let spec = WorkloadSpec {
            accounts: 200,
            ..Default::default()
        };
        let mut st = state(&spec);
        let fx = smallbank_contract(&ContractCall::Amalgamate { from: 4, to: 5 }, &mut st).unwrap();
        assert_eq!(fx.readset.len(), 3);
        assert_eq!(fx.writeset[&saving_key(4)], 0);
        assert_eq!(fx.writeset[&checking_key(4)], 0);
        assert_eq!(fx.writeset[&checking_key(5)], 3 * INITIAL_BALANCE);
    }

    #[test]
    fn missing_account_is_an_application_error() {
        let mut st = BTreeMap::new();
        let err = smallbank_contract(&ContractCall::QueryAccount { account: 7 }, &mut st);
        assert_eq!(err, Err(ContractError::MissingAccount(7)));
        // Raw read-write calls may read absent keys.
        let fx = smallbank_contract(
            &ContractCall::ReadWrite {
                reads: vec![Arc::from("x")],
                writes: BTreeMap::new(),
            },
            &mut st,
        )
        .unwrap();
        assert_eq!(fx.readset[&Key::from("x")], SeqNum::NIL);
    }

    #[test]
    fn trace_round_trips() {
        let spec = WorkloadSpec {
            kind: WorkloadKind::Mixed,
            ..Default::default()
        };
        let mut t = generate(&spec, 4, 50, 700.0).unwrap();
        t.proposals[3].delay = 7;
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        let back = Trace::read_from(&buf[..]).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn trace_line_format() {
        let p = Proposal::new(
            3,
            40,
            ContractCall::ReadWrite {
                reads: vec![Arc::from("A")],
                writes: [(Key::from("C"), 301)].into_iter().collect(),
            },
        );
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(
            s,
            r#"{"id":3,"tick":40,"fn":"read_write","args":{"reads":["A"],"writes":{"C":301}}}"#
        );
        let noop = serde_json::to_string(&Proposal::new(1, 0, ContractCall::Noop)).unwrap();
        assert_eq!(noop, r#"{"id":1,"tick":0,"fn":"noop"}"#);
    }

    #[test]
    fn malformed_line_reports_its_number() {
        let text = "{\"id\":1,\"tick\":0,\"fn\":\"noop\"}\n\n{\"id\":2,\"tick\":\n";
        match Trace::read_from(text.as_bytes()) {
            Err(TraceError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
