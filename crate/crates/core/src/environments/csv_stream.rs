//! Feature streams read from comma-separated files. Row order is the time
//! axis.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::Sample;
use crate::error::{Error, Result};
use crate::losses::Label;

/// A column addressed by header name or zero-based position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColumnRef {
    Index(usize),
    Name(String),
}

impl ColumnRef {
    fn resolve(&self, headers: &csv::StringRecord) -> Option<usize> {
        match self {
            ColumnRef::Index(i) => (*i < headers.len()).then_some(*i),
            ColumnRef::Name(n) => headers.iter().position(|h| h.trim() == n),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LabelKind {
    /// Labels `-1` / `1`.
    #[default]
    Binary,
    /// Labels `0..n_classes`.
    Multiclass { n_classes: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvStreamConfig {
    pub path: PathBuf,
    pub label_column: ColumnRef,
    /// Empty means every column except the label.
    #[serde(default)]
    pub feature_columns: Vec<ColumnRef>,
    #[serde(default = "yes")]
    pub augment_bias: bool,
    #[serde(default)]
    pub label_kind: LabelKind,
    /// Leading rows held out as labeled source data for pretraining.
    #[serde(default)]
    pub n_pretrain: usize,
}

fn yes() -> bool {
    true
}

impl CsvStreamConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if !self.path.is_file() {
            problems.push(format!(
                "csv stream file {} does not exist",
                self.path.display()
            ));
        }
        if let LabelKind::Multiclass { n_classes } = self.label_kind {
            if n_classes < 2 {
                problems.push(format!("n_classes must be at least 2, got {n_classes}"));
            }
        }
        problems
    }
}

fn parse_label(raw: &str, kind: LabelKind) -> Option<Label> {
    let raw = raw.trim().replace('\u{2212}', "-");
    let v: i64 = raw.strip_prefix('+').unwrap_or(&raw).parse().ok()?;
    match kind {
        LabelKind::Binary => (v == 1 || v == -1).then_some(v),
        LabelKind::Multiclass { n_classes } => (v >= 0 && (v as usize) < n_classes).then_some(v),
    }
}

/// Loads the whole file, returning its rows in order.
pub fn csv_stream(config: &CsvStreamConfig) -> Result<std::vec::IntoIter<Sample>> {
    let load_err = |message: String| Error::Load {
        path: config.path.clone(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(&config.path)
        .map_err(|e| load_err(e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| load_err(e.to_string()))?
        .clone();
    let label_idx = config
        .label_column
        .resolve(&headers)
        .ok_or_else(|| load_err(format!("label column {:?} not found", config.label_column)))?;
    let feature_idx: Vec<usize> = if config.feature_columns.is_empty() {
        (0..headers.len()).filter(|&i| i != label_idx).collect()
    } else {
        config
            .feature_columns
            .iter()
            .map(|c| {
                c.resolve(&headers)
                    .ok_or_else(|| load_err(format!("feature column {c:?} not found")))
            })
            .collect::<Result<_>>()?
    };

    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        // header is line 1
        let line = i + 2;
        let record = record.map_err(|e| load_err(format!("row {line}: {e}")))?;
        let cell = |idx: usize| record.get(idx).unwrap_or("");
        let label = parse_label(cell(label_idx), config.label_kind).ok_or_else(|| {
            load_err(format!(
                "row {line}: label {:?} is not a valid {} label",
                cell(label_idx),
                match config.label_kind {
                    LabelKind::Binary => "binary (-1/1)".to_string(),
                    LabelKind::Multiclass { n_classes } => format!("class (0..{n_classes})"),
                }
            ))
        })?;
        let mut features = Vec::with_capacity(feature_idx.len() + 1);
        for &j in &feature_idx {
            let v: f64 = cell(j).parse().map_err(|_| {
                load_err(format!(
                    "row {line}, column {:?}: {:?} is not a number",
                    headers.get(j).unwrap_or("?"),
                    cell(j)
                ))
            })?;
            if !v.is_finite() {
                return Err(load_err(format!(
                    "row {line}, column {:?}: value is not finite",
                    headers.get(j).unwrap_or("?")
                )));
            }
            features.push(v);
        }
        if config.augment_bias {
            features.push(1.0);
        }
        rows.push(Sample::new(features, label));
    }
    Ok(rows.into_iter())
}
