use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use eov_core::pipeline::Format;
use eov_core::{PolicyKind, ReachMode, SimConfig, WorkloadKind};

#[derive(Debug, Parser)]
#[command(name = "eov", version, about = "Execute-order-validate pipeline simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one simulation and write its report.
    Run(RunArgs),
    /// Run every policy over a list of values for one parameter.
    Sweep(SweepArgs),
    /// Check that the committed part of a ledger file is serializable.
    Verify {
        /// Ledger written by `run --ledger`.
        ledger: PathBuf,
    },
    /// Generate a workload trace and save it as JSON lines.
    GenTrace(GenTraceArgs),
    /// Time arrival checks and block formation on the dependency graph.
    Bench(BenchArgs),
}

/// Simulation parameters. Each one overrides the config file, which
/// overrides the built-in defaults.
#[derive(Debug, Default, Args)]
pub struct SimArgs {
    /// JSON file with a (partial) simulation config.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = parse_policy)]
    pub policy: Option<PolicyKind>,
    #[arg(long)]
    pub block_size: Option<usize>,
    /// Ticks before a partial block is cut.
    #[arg(long)]
    pub block_timeout: Option<u64>,
    /// Percentage of writes that target hot accounts (0-50).
    #[arg(long)]
    pub write_hot: Option<u32>,
    /// Percentage of reads that target hot accounts (0-50).
    #[arg(long)]
    pub read_hot: Option<u32>,
    /// Ticks between endorsement and arrival at the orderer.
    #[arg(long)]
    pub client_delay: Option<u64>,
    /// Ticks between consecutive reads during simulation.
    #[arg(long)]
    pub read_interval: Option<u64>,
    #[arg(long)]
    pub max_span: Option<u64>,
    /// Proposals per 1000 ticks.
    #[arg(long)]
    pub rate: Option<f64>,
    /// Number of proposals to submit.
    #[arg(long)]
    pub txns: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_parser = parse_reach)]
    pub reach: Option<ReachMode>,
    #[arg(long, value_parser = parse_workload)]
    pub workload: Option<WorkloadKind>,
    #[arg(long)]
    pub accounts: Option<u64>,
    /// Zipf skew of account choice for the mixed workload.
    #[arg(long)]
    pub zipf: Option<f64>,
    /// Confirm every bloom cycle verdict against exact reachability.
    #[arg(long)]
    pub audit: bool,
}

impl SimArgs {
    /// Builds the effective config: defaults, then the file, then flags.
    pub fn resolve(&self) -> anyhow::Result<SimConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                serde_json::from_str(&text).map_err(|e| crate::ConfigFailure(format!("{}: {e}", path.display())))?
            }
            None => SimConfig::default(),
        };
        macro_rules! set {
            ($flag:ident => $($field:ident).+) => {
                if let Some(v) = self.$flag {
                    cfg.$($field).+ = v;
                }
            };
        }
        set!(policy => policy);
        set!(block_size => block_size);
        set!(write_hot => workload.write_hot_ratio);
        set!(read_hot => workload.read_hot_ratio);
        set!(client_delay => client_delay);
        set!(read_interval => read_interval);
        set!(max_span => max_span);
        set!(rate => rate);
        set!(txns => txns);
        set!(seed => seed);
        set!(reach => reach);
        set!(workload => workload.kind);
        set!(accounts => workload.accounts);
        set!(zipf => workload.zipf_theta);
        if self.block_timeout.is_some() {
            cfg.block_timeout = self.block_timeout;
        }
        cfg.audit |= self.audit;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct Output {
    /// Report destination; stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    pub output: Output,
    /// Also save the resulting ledger as JSON.
    #[arg(long, value_name = "PATH")]
    pub ledger: Option<PathBuf>,
    /// Replay a saved trace instead of generating one.
    #[arg(long, value_name = "PATH")]
    pub trace: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    BlockSize,
    WriteHot,
    ReadHot,
    ClientDelay,
    ReadInterval,
    Zipf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    pub output: Output,
    #[arg(long, value_enum)]
    pub axis: Axis,
    /// Comma-separated values for the swept parameter.
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<f64>,
    /// Comma-separated policies, or `all`.
    #[arg(long, default_value = "all")]
    pub policies: String,
    /// Comma-separated seeds. Defaults to the config seed.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct GenTraceArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    /// How many blocks behind the latest each batch is simulated.
    #[arg(long, default_value_t = 2)]
    pub lag: u64,
}

fn parse_policy(s: &str) -> Result<PolicyKind, String> {
    s.parse()
}

fn parse_reach(s: &str) -> Result<ReachMode, String> {
    s.parse()
}

fn parse_workload(s: &str) -> Result<WorkloadKind, String> {
    s.parse().map_err(|e: eov_core::workload::WorkloadError| e.to_string())
}

pub fn parse_policies(s: &str) -> Result<Vec<PolicyKind>, String> {
    if s == "all" {
        return Ok(PolicyKind::ALL.to_vec());
    }
    s.split(',').map(|p| p.trim().parse()).collect()
}
