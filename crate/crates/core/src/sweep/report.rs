//! Report files: `report.json`, `metrics.csv`, `plotdata/<name>.csv` and the
//! separate `timing.json`.
//!
//! `metrics.csv` has a `rank` column followed by one column per method (empty
//! cells for methods that did not run). Each plot-data file has the columns
//! `rank,value`. Floats are written in shortest round-trip form.

use std::fs;
use std::path::Path;

use super::{RankSweepReport, Timing};
use crate::error::{Error, Result};

/// Bumped whenever a field of the report changes meaning.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn series_csv(ranks: &[usize], values: &[f64]) -> String {
    let mut s = String::from("rank,value\n");
    for (k, v) in ranks.iter().zip(values) {
        s.push_str(&format!("{k},{v:?}\n"));
    }
    s
}

pub(crate) fn metrics_csv(report: &RankSweepReport) -> String {
    let mut s = String::from("rank");
    for m in &report.methods {
        s.push(',');
        s.push_str(m.method.name());
    }
    s.push('\n');
    for (t, k) in report.ranks.iter().enumerate() {
        s.push_str(&k.to_string());
        for m in &report.methods {
            s.push(',');
            if let Some(v) = m.per_rank_metric.get(t) {
                s.push_str(&format!("{v:?}"));
            }
        }
        s.push('\n');
    }
    s
}

/// Writes the report files into `dir`, creating it if needed.
pub fn emit_report(report: &RankSweepReport, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    let plot_dir = dir.join("plotdata");
    fs::create_dir_all(&plot_dir).map_err(|e| Error::io(&plot_dir, e))?;
    let json = serde_json::to_string_pretty(report)
        .map_err(|e| Error::Format(format!("cannot serialize report: {e}")))?;
    write(&dir.join("report.json"), &(json + "\n"))?;
    write(&dir.join("metrics.csv"), &metrics_csv(report))?;
    for m in &report.methods {
        if !m.per_rank_metric.is_empty() {
            let path = plot_dir.join(format!("{}.csv", m.method.name()));
            write(&path, &series_csv(&report.ranks, &m.per_rank_metric))?;
        }
    }
    let curves = [
        ("mean_residual", &report.mean_residual),
        ("median_residual", &report.median_residual),
        ("mci_detection", &report.mci_detection),
    ];
    for (name, values) in curves {
        if !values.is_empty() {
            write(&plot_dir.join(format!("{name}.csv")), &series_csv(&report.ranks, values))?;
        }
    }
    Ok(())
}

pub fn write_timing(timing: &Timing, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let json = serde_json::to_string_pretty(timing)
        .map_err(|e| Error::Format(format!("cannot serialize timing: {e}")))?;
    write(&dir.join("timing.json"), &(json + "\n"))
}
