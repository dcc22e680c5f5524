use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::OutputConfig;
use super::run::{ExperimentOutput, RunFailure};
use crate::error::{Error, Result};
use crate::metrics::{ComparatorSeries, RunRecord};

pub const PER_STEP_HEADER: [&str; 8] = [
    "t",
    "instantaneous_loss",
    "accumulated_loss",
    "expected_loss",
    "regret",
    "queried",
    "mistake",
    "correct",
];

/// One learner's line in `summary.json`. Interval fields are half-widths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryEntry {
    pub name: String,
    pub runs: usize,
    pub accuracy_mean: f64,
    pub accuracy_ci: Option<f64>,
    pub label_fraction_mean: f64,
    pub label_fraction_ci: Option<f64>,
    pub mistakes_mean: f64,
    pub final_accumulated_loss_mean: f64,
    pub final_regret_mean: Option<f64>,
    pub final_regret_ci: Option<f64>,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryFile {
    pub confidence: f64,
    pub learners: Vec<SummaryEntry>,
    pub failures: Vec<RunFailure>,
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

impl SummaryFile {
    pub fn from_output(out: &ExperimentOutput) -> Self {
        let learners = out
            .config
            .learners
            .iter()
            .map(|l| {
                let recs: Vec<&RunRecord> = out.records_for(&l.name).collect();
                let agg = out.summary_for(&l.name);
                let regrets: Option<Vec<f64>> = recs
                    .iter()
                    .map(|r| r.summary.final_dynamic_regret)
                    .collect();
                SummaryEntry {
                    name: l.name.clone(),
                    runs: recs.len(),
                    accuracy_mean: mean(recs.iter().map(|r| r.summary.accuracy)),
                    accuracy_ci: agg.map(|a| a.accuracy.half_width),
                    label_fraction_mean: mean(recs.iter().map(|r| r.summary.query_fraction)),
                    label_fraction_ci: agg.map(|a| a.query_fraction.half_width),
                    mistakes_mean: mean(recs.iter().map(|r| r.summary.mistakes as f64)),
                    final_accumulated_loss_mean: mean(
                        recs.iter().map(|r| r.summary.final_accumulated_loss),
                    ),
                    final_regret_mean: regrets
                        .filter(|v| !v.is_empty())
                        .map(|v| mean(v.into_iter())),
                    final_regret_ci: agg
                        .and_then(|a| a.final_dynamic_regret)
                        .map(|c| c.half_width),
                    seeds: recs.iter().map(|r| r.seed).collect(),
                }
            })
            .collect();
        SummaryFile {
            confidence: out.config.metrics.confidence,
            learners,
            failures: out.failures.clone(),
        }
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

/// Writes the per-step series of one run as CSV. Absent values are empty
/// cells.
pub fn write_run_csv<W: std::io::Write>(record: &RunRecord, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let ser = |e: csv::Error| Error::Serialize(e.to_string());
    w.write_record(PER_STEP_HEADER).map_err(ser)?;
    for s in &record.per_step {
        w.write_record([
            s.t.to_string(),
            s.instantaneous_loss.to_string(),
            s.accumulated_loss.to_string(),
            cell(s.expected_loss),
            cell(s.regret),
            flag(s.queried).to_string(),
            flag(s.mistake).to_string(),
            flag(s.correct).to_string(),
        ])
        .map_err(ser)?;
    }
    w.flush().map_err(|e| Error::Serialize(e.to_string()))?;
    Ok(())
}

pub fn run_csv_name(record: &RunRecord) -> String {
    format!("{}_r{:02}.csv", record.learner, record.repeat)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes per-run CSVs under `runs/`, `summary.json`, and the resolved
/// configuration (`config.toml` and `config.json`). Returns the paths written.
pub fn emit_results(out: &ExperimentOutput, output: &OutputConfig) -> Result<Vec<PathBuf>> {
    let dir = &output.dir;
    create_dir(dir)?;
    let mut written = Vec::new();
    if output.per_step_csv {
        let runs = dir.join("runs");
        create_dir(&runs)?;
        for rec in &out.records {
            let path = runs.join(run_csv_name(rec));
            let mut buf = Vec::new();
            write_run_csv(rec, &mut buf)?;
            write_file(&path, &buf)?;
            written.push(path);
        }
    }
    if output.summary_json {
        let path = dir.join("summary.json");
        let text = serde_json::to_string_pretty(&SummaryFile::from_output(out))
            .map_err(|e| Error::Serialize(e.to_string()))?;
        write_file(&path, text.as_bytes())?;
        written.push(path);
    }
    let path = dir.join("config.toml");
    write_file(&path, out.config.to_toml()?.as_bytes())?;
    written.push(path);
    let path = dir.join("config.json");
    let text =
        serde_json::to_string_pretty(&out.config).map_err(|e| Error::Serialize(e.to_string()))?;
    write_file(&path, text.as_bytes())?;
    written.push(path);
    Ok(written)
}

/// Writes a comparator series as CSV: `t, value, w_0, w_1, …`.
pub fn write_comparator_csv(series: &ComparatorSeries, path: &Path) -> Result<()> {
    let ser = |e: csv::Error| Error::Serialize(e.to_string());
    let mut w = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Serialize(format!("{other:?}")),
    })?;
    let dim = series.per_step_optimal.first().map_or(0, |m| m.dim());
    let mut header = vec!["t".to_string(), "value".to_string()];
    header.extend((0..dim).map(|i| format!("w_{i}")));
    w.write_record(&header).map_err(ser)?;
    for (i, (m, v)) in series
        .per_step_optimal
        .iter()
        .zip(&series.per_step_optimal_value)
        .enumerate()
    {
        let mut row = vec![(i + 1).to_string(), v.to_string()];
        row.extend(m.as_slice().iter().map(|x| x.to_string()));
        w.write_record(&row).map_err(ser)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
