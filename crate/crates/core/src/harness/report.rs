//! Report files.
//!
//! Each seed gets a record file `seed-<seed>.csv` with one line per optimizer step and
//! this fixed header:
//!
//! ```text
//! step,L_blackbox,L_whitebox,active_index,I_k,step_size,cumulative_calls
//! ```
//!
//! Floats are written in Rust's shortest round-trip notation, so identical runs give
//! byte-identical files. Next to the record files go `summary.txt`, a human-readable
//! table, and `config.toml`, the config that produced them.

use std::fmt::Write as _;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::run::{median, RunReport, SeedOutcome};
use super::HarnessError;
use crate::objective::ObjectiveIndex;
use crate::optimizer::StepRecord;

pub const RECORD_HEADER: [&str; 7] = [
    "step",
    "L_blackbox",
    "L_whitebox",
    "active_index",
    "I_k",
    "step_size",
    "cumulative_calls",
];

/// One line of a record file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    pub step: u64,
    #[serde(rename = "L_blackbox")]
    pub l_blackbox: f64,
    #[serde(rename = "L_whitebox")]
    pub l_whitebox: f64,
    pub active_index: u8,
    #[serde(rename = "I_k")]
    pub indicator: f64,
    pub step_size: f64,
    pub cumulative_calls: u64,
}

impl From<&StepRecord> for RecordRow {
    fn from(r: &StepRecord) -> Self {
        Self {
            step: r.step,
            l_blackbox: r.pair.blackbox,
            l_whitebox: r.pair.whitebox,
            active_index: r.active.number(),
            indicator: r.indicator,
            step_size: r.step_size,
            cumulative_calls: r.cumulative_calls,
        }
    }
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

pub fn write_records(trajectory: &[StepRecord], out: impl Write) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORD_HEADER)?;
    for r in trajectory {
        let row = RecordRow::from(r);
        w.write_record([
            row.step.to_string(),
            format!("{:?}", row.l_blackbox),
            format!("{:?}", row.l_whitebox),
            row.active_index.to_string(),
            format!("{:?}", row.indicator),
            format!("{:?}", row.step_size),
            row.cumulative_calls.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records(input: impl Read) -> Result<Vec<RecordRow>, csv::Error> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().collect()
}

pub fn record_file_name(seed: u64) -> String {
    format!("seed-{seed}.csv")
}

fn outcome_label(o: &SeedOutcome) -> String {
    match o {
        SeedOutcome::Completed => "completed".into(),
        SeedOutcome::BudgetExhausted { calls_used } => format!("budget exhausted ({calls_used})"),
        SeedOutcome::EarlyStopped { step } => format!("early stop @{step}"),
        SeedOutcome::Diverged { step } => format!("diverged @{step}"),
    }
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |v| v.to_string())
}

/// Per-seed table followed by medians.
pub fn summary_table(report: &RunReport) -> String {
    let c = &report.config;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "algorithm {:?}, {} iterations, {} seeds",
        c.algorithm,
        c.iterations,
        c.seeds.len()
    );
    let _ = writeln!(
        s,
        "{:>8} {:>22} {:>6} {:>8} {:>14} {:>14} {:>10} {:>6}",
        "seed", "outcome", "steps", "calls", "L_blackbox", "L_whitebox", "to_thresh", "nondom"
    );
    for r in &report.runs {
        let pair = r.final_pair();
        let _ = writeln!(
            s,
            "{:>8} {:>22} {:>6} {:>8} {:>14} {:>14} {:>10} {:>6}",
            r.seed,
            outcome_label(&r.outcome),
            r.trajectory.len(),
            r.calls,
            opt(pair.map(|p| format!("{:.6}", p.blackbox))),
            opt(pair.map(|p| format!("{:.6}", p.whitebox))),
            opt(r.evals_to_threshold),
            opt(r.non_dominated),
        );
    }
    let finals: Vec<_> = report.runs.iter().filter_map(|r| r.final_pair()).collect();
    if !finals.is_empty() {
        let _ = writeln!(
            s,
            "median final L_blackbox {:.6}, L_whitebox {:.6}",
            median(finals.iter().map(|p| p.blackbox).collect()),
            median(finals.iter().map(|p| p.whitebox).collect()),
        );
    }
    let _ = writeln!(
        s,
        "median evaluations to {}% of initial loss: {}",
        c.threshold_fraction * 100.0,
        opt(report.median_evals_to_threshold())
    );
    s
}

/// Writes record files, the summary and the echoed config into `dir`.
pub fn emit_report(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let mut written = Vec::new();
    for run in &report.runs {
        let path = dir.join(record_file_name(run.seed));
        let file = fs::File::create(&path).map_err(|e| io_error(&path, e))?;
        write_records(&run.trajectory, std::io::BufWriter::new(file)).map_err(|e| io_error(&path, e))?;
        written.push(path);
    }
    let summary = dir.join("summary.txt");
    fs::write(&summary, summary_table(report)).map_err(|e| io_error(&summary, e))?;
    written.push(summary);
    let config = dir.join("config.toml");
    fs::write(&config, report.config.to_toml()).map_err(|e| io_error(&config, e))?;
    written.push(config);
    Ok(written)
}

/// Summary of a single record file, for regenerating tables from saved runs.
pub fn summarize_record_file(path: &Path) -> Result<String, HarnessError> {
    let file = fs::File::open(path).map_err(|e| io_error(path, e))?;
    let rows = read_records(file).map_err(|e| io_error(path, e))?;
    let mut s = String::new();
    let _ = writeln!(s, "{}: {} steps", path.display(), rows.len());
    let (Some(first), Some(last)) = (rows.first(), rows.last()) else {
        return Ok(s);
    };
    let active1 = rows
        .iter()
        .filter(|r| r.active_index == ObjectiveIndex::BlackBox.number())
        .count();
    let _ = writeln!(
        s,
        "first  L_blackbox {:.6}  L_whitebox {:.6}",
        first.l_blackbox, first.l_whitebox
    );
    let _ = writeln!(
        s,
        "last   L_blackbox {:.6}  L_whitebox {:.6}",
        last.l_blackbox, last.l_whitebox
    );
    let _ = writeln!(s, "black-box calls {}", last.cumulative_calls);
    let _ = writeln!(
        s,
        "black-box term active on {active1} of {} steps",
        rows.len()
    );
    let _ = writeln!(
        s,
        "mean I_k {:.6}",
        rows.iter().map(|r| r.indicator).sum::<f64>() / rows.len() as f64
    );
    Ok(s)
}
