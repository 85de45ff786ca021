mod args;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use log::info;
use rayon::prelude::*;

use args::{parse_policies, Axis, BenchArgs, Cli, Command, GenTraceArgs, Output, RunArgs, SweepArgs};
use eov_core::oracle::verify_serializable;
use eov_core::pipeline::{self, bench, report::write_report, ConfigError, Metrics};
use eov_core::workload::{generate, load_trace, save_trace};
use eov_core::{Ledger, SimConfig};

/// Bad parameters. Reported with exit code 2.
#[derive(Debug)]
pub struct ConfigFailure(pub String);

impl std::fmt::Display for ConfigFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigFailure {}

impl From<ConfigError> for ConfigFailure {
    fn from(e: ConfigError) -> Self {
        ConfigFailure(e.to_string())
    }
}

/// A ledger that failed verification. Exit code 1.
#[derive(Debug)]
struct NotSerializable(String);

impl std::fmt::Display for NotSerializable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for NotSerializable {}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("EOV_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Verify { ledger } => cmd_verify(&ledger),
        Command::GenTrace(a) => cmd_gen_trace(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<ConfigFailure>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn validated(cfg: SimConfig) -> anyhow::Result<SimConfig> {
    cfg.validate().map_err(ConfigFailure::from)?;
    Ok(cfg)
}

fn open_out(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            Box::new(BufWriter::new(
                File::create(p).with_context(|| format!("creating {}", p.display()))?,
            ))
        }
        None => Box::new(io::stdout().lock()),
    })
}

fn write_runs(out: &Output, runs: &[(SimConfig, Metrics)]) -> anyhow::Result<()> {
    let refs: Vec<(&SimConfig, &Metrics)> = runs.iter().map(|(c, m)| (c, m)).collect();
    let mut w = open_out(out.out.as_deref())?;
    write_report(&mut w, out.format, &refs)?;
    w.flush()?;
    Ok(())
}

fn cmd_run(a: RunArgs) -> anyhow::Result<()> {
    let cfg = validated(a.sim.resolve()?)?;
    let result = match &a.trace {
        Some(path) => {
            let trace = load_trace(path).with_context(|| format!("loading {}", path.display()))?;
            pipeline::run_trace(&cfg, &trace, cfg.workload.genesis()).map_err(ConfigFailure::from)?
        }
        None => pipeline::run(&cfg).map_err(ConfigFailure::from)?,
    };
    info!(
        "{}: {} committed of {} in {} blocks",
        cfg.policy, result.metrics.committed, result.metrics.submitted, result.metrics.blocks
    );
    if let Some(path) = &a.ledger {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        result
            .ledger
            .save(path)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    write_runs(&a.output, &[(result.config, result.metrics)])
}

fn apply_axis(cfg: &mut SimConfig, axis: Axis, v: f64) -> Result<(), ConfigFailure> {
    let whole = || {
        if v < 0.0 || v.fract() != 0.0 {
            Err(ConfigFailure(format!("{axis:?} takes non-negative integers, got {v}")))
        } else {
            Ok(v as u64)
        }
    };
    match axis {
        Axis::BlockSize => cfg.block_size = whole()? as usize,
        Axis::WriteHot => cfg.workload.write_hot_ratio = whole()? as u32,
        Axis::ReadHot => cfg.workload.read_hot_ratio = whole()? as u32,
        Axis::ClientDelay => cfg.client_delay = whole()?,
        Axis::ReadInterval => cfg.read_interval = whole()?,
        Axis::Zipf => cfg.workload.zipf_theta = v,
    }
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> anyhow::Result<()> {
    let base = a.sim.resolve()?;
    let policies = parse_policies(&a.policies).map_err(ConfigFailure)?;
    let seeds = if a.seeds.is_empty() {
        vec![base.seed]
    } else {
        a.seeds.clone()
    };
    let mut points = Vec::new();
    for &v in &a.values {
        for &seed in &seeds {
            for &policy in &policies {
                let mut cfg = base.clone();
                apply_axis(&mut cfg, a.axis, v)?;
                cfg.seed = seed;
                cfg.policy = policy;
                points.push(validated(cfg)?);
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(a.jobs).build()?;
    let runs: Vec<(SimConfig, Metrics)> = pool.install(|| {
        points
            .into_par_iter()
            .map(|cfg| {
                let r = pipeline::run(&cfg).map_err(ConfigFailure::from)?;
                info!("{} seed {}: {} committed", cfg.policy, cfg.seed, r.metrics.committed);
                Ok((r.config, r.metrics))
            })
            .collect::<Result<_, ConfigFailure>>()
    })?;
    write_runs(&a.output, &runs)
}

fn cmd_verify(path: &Path) -> anyhow::Result<()> {
    let ledger = Ledger::load(path).with_context(|| format!("reading {}", path.display()))?;
    let committed = ledger.committed().count();
    match verify_serializable(&ledger) {
        Ok(()) => {
            println!(
                "ok: {committed} committed transactions in {} blocks are serializable",
                ledger.blocks.len()
            );
            Ok(())
        }
        Err(w) => {
            let mut msg = format!("dependency cycle through {} transactions:", w.len());
            for e in &w.edges {
                msg.push_str(&format!("\n  {} -{}-> {} on {}", e.from, e.kind, e.to, e.key));
            }
            Err(NotSerializable(msg).into())
        }
    }
}

fn cmd_gen_trace(a: GenTraceArgs) -> anyhow::Result<()> {
    let cfg = validated(a.sim.resolve()?)?;
    let trace = generate(&cfg.workload, cfg.seed, cfg.txns, cfg.rate).map_err(|e| ConfigFailure(e.to_string()))?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    save_trace(&a.out, &trace).with_context(|| format!("writing {}", a.out.display()))?;
    info!("wrote {} proposals to {}", trace.len(), a.out.display());
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> anyhow::Result<()> {
    let cfg = validated(a.sim.resolve()?)?;
    let r = bench(&cfg, a.lag).map_err(ConfigFailure::from)?;
    serde_json::to_writer_pretty(io::stdout().lock(), &r)?;
    println!();
    Ok(())
}
