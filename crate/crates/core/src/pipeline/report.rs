//! CSV and JSON run reports.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Metrics, SimConfig};
use crate::model::TxnStatus;
use crate::schedulers::PolicyKind;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format `{s}` (expected csv or json)")),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

/// One line of the CSV report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub policy: PolicyKind,
    pub block_size: usize,
    pub write_hot: u32,
    pub read_hot: u32,
    pub client_delay: u64,
    pub read_interval: u64,
    pub seed: u64,
    pub raw: f64,
    pub effective: f64,
    pub abort_early: u64,
    pub abort_unreorderable: u64,
    pub abort_stale_span: u64,
    pub abort_validation: u64,
    pub abort_false_positive: u64,
}

impl ReportRow {
    pub const HEADER: &'static str =
        "policy,block_size,write_hot,read_hot,client_delay,read_interval,seed,raw,effective,\
abort_early,abort_unreorderable,abort_stale_span,abort_validation,abort_false_positive";

    pub fn new(cfg: &SimConfig, m: &Metrics) -> Self {
        ReportRow {
            policy: m.policy,
            block_size: cfg.block_size,
            write_hot: cfg.workload.write_hot_ratio,
            read_hot: cfg.workload.read_hot_ratio,
            client_delay: cfg.client_delay,
            read_interval: cfg.read_interval,
            seed: cfg.seed,
            raw: m.raw_throughput,
            effective: m.effective_throughput,
            abort_early: m.aborted(TxnStatus::AbortedEarly),
            abort_unreorderable: m.aborted(TxnStatus::AbortedUnreorderable),
            abort_stale_span: m.aborted(TxnStatus::AbortedStaleSpan),
            abort_validation: m.aborted(TxnStatus::AbortedValidation),
            abort_false_positive: m.aborted(TxnStatus::AbortedFalsePositive),
        }
    }

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{:.3},{:.3},{},{},{},{},{}",
            self.policy,
            self.block_size,
            self.write_hot,
            self.read_hot,
            self.client_delay,
            self.read_interval,
            self.seed,
            self.raw,
            self.effective,
            self.abort_early,
            self.abort_unreorderable,
            self.abort_stale_span,
            self.abort_validation,
            self.abort_false_positive
        )
    }
}

#[derive(Serialize)]
struct JsonRun<'a> {
    config: &'a SimConfig,
    metrics: &'a Metrics,
}

/// Writes one CSV row or one JSON object per run. JSON output is an array.
pub fn write_report<W: Write>(mut w: W, format: Format, runs: &[(&SimConfig, &Metrics)]) -> io::Result<()> {
    match format {
        Format::Csv => {
            writeln!(w, "{}", ReportRow::HEADER)?;
            for (cfg, m) in runs {
                writeln!(w, "{}", ReportRow::new(cfg, m).to_csv())?;
            }
        }
        Format::Json => {
            let items: Vec<JsonRun> = runs
                .iter()
                .map(|(config, metrics)| JsonRun { config, metrics })
                .collect();
            serde_json::to_writer_pretty(&mut w, &items)?;
            writeln!(w)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_header_and_row_line_up() {
        let cfg = SimConfig::default();
        let m = Metrics::new(PolicyKind::Fabric);
        let mut out = Vec::new();
        write_report(&mut out, Format::Csv, &[(&cfg, &m)]).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0]
            .starts_with("policy,block_size,write_hot,read_hot,client_delay,read_interval,seed,raw,effective,abort_"));
        assert_eq!(lines[0].split(',').count(), lines[1].split(',').count());
        assert!(lines[1].starts_with("fabric,200,10,10,0,0,1,"));
    }

    #[test]
    fn json_has_histograms() {
        let cfg = SimConfig::default();
        let m = Metrics::new(PolicyKind::Sharp);
        let mut out = Vec::new();
        write_report(&mut out, Format::Json, &[(&cfg, &m)]).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&out).unwrap();
        assert!(v[0]["metrics"]["reorder_cost"]["buckets"].is_array());
        assert_eq!(v[0]["config"]["policy"], "sharp");
    }

    #[test]
    fn unknown_format() {
        assert!("xml".parse::<Format>().is_err());
        assert_eq!("json".parse::<Format>().unwrap(), Format::Json);
    }
}
