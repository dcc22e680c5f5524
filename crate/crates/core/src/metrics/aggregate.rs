//! Per-run bookkeeping and multi-seed summaries.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::learners::RoundOutcome;

/// One row of a run's per-step series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    pub instantaneous_loss: f64,
    pub accumulated_loss: f64,
    /// `l_t(w_t)`; absent when the stream has no known distribution.
    pub expected_loss: Option<f64>,
    /// Dynamic regret through round `t`.
    pub regret: Option<f64>,
    pub queried: bool,
    pub mistake: bool,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub accuracy: f64,
    pub query_fraction: f64,
    pub mistakes: usize,
    pub queries: usize,
    pub final_accumulated_loss: f64,
    pub final_dynamic_regret: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub learner: String,
    pub repeat: usize,
    pub seed: u64,
    pub per_step: Vec<StepRecord>,
    pub summary: RunSummary,
}

impl RunRecord {
    /// Builds the series from round outcomes. `expected` and `regret`, when
    /// given, must be as long as `outcomes`.
    pub fn from_outcomes(
        learner: impl Into<String>,
        repeat: usize,
        seed: u64,
        outcomes: &[RoundOutcome],
        expected: Option<&[f64]>,
        regret: Option<&[f64]>,
    ) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::usage("a run needs at least one round"));
        }
        for (what, s) in [("expected losses", expected), ("regret", regret)] {
            if let Some(s) = s {
                if s.len() != outcomes.len() {
                    return Err(Error::usage(format!(
                        "{what}: {} entries for {} rounds",
                        s.len(),
                        outcomes.len()
                    )));
                }
            }
        }
        let mut acc = 0.0;
        let per_step: Vec<StepRecord> = outcomes
            .iter()
            .enumerate()
            .map(|(i, o)| {
                acc += o.instantaneous_loss;
                StepRecord {
                    t: i + 1,
                    instantaneous_loss: o.instantaneous_loss,
                    accumulated_loss: acc,
                    expected_loss: expected.map(|e| e[i]),
                    regret: regret.map(|r| r[i]),
                    queried: o.queried,
                    mistake: o.mistake,
                    correct: o.correct(),
                }
            })
            .collect();
        let n = per_step.len() as f64;
        let correct = per_step.iter().filter(|s| s.correct).count();
        let queries = per_step.iter().filter(|s| s.queried).count();
        let mistakes = per_step.iter().filter(|s| s.mistake).count();
        let last = per_step.last().expect("non-empty");
        let summary = RunSummary {
            accuracy: correct as f64 / n,
            query_fraction: queries as f64 / n,
            mistakes,
            queries,
            final_accumulated_loss: last.accumulated_loss,
            final_dynamic_regret: last.regret,
        };
        Ok(RunRecord {
            learner: learner.into(),
            repeat,
            seed,
            per_step,
            summary,
        })
    }
}

/// Mean with a symmetric Student-t interval `mean ± half_width`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanCi {
    pub mean: f64,
    pub half_width: f64,
}

impl MeanCi {
    pub fn lower(&self) -> f64 {
        self.mean - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.half_width
    }
}

/// `mean ± t_{(1+c)/2, n−1} · s/√n` with `s` the sample standard deviation.
pub fn mean_ci(values: &[f64], confidence: f64) -> Result<MeanCi> {
    let n = values.len();
    if n < 2 {
        return Err(Error::usage(format!(
            "a confidence interval needs at least 2 values, got {n}"
        )));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::usage(format!(
            "confidence must lie in (0, 1), got {confidence}"
        )));
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let dist =
        StudentsT::new(0.0, 1.0, nf - 1.0).map_err(|e| Error::usage(format!("student-t: {e}")))?;
    let q = dist.inverse_cdf(0.5 + confidence / 2.0);
    Ok(MeanCi {
        mean,
        half_width: q * (var / nf).sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateSummary {
    pub runs: usize,
    pub confidence: f64,
    pub accuracy: MeanCi,
    pub query_fraction: MeanCi,
    pub mistakes: MeanCi,
    pub final_accumulated_loss: MeanCi,
    /// Present only when every run carries a regret.
    pub final_dynamic_regret: Option<MeanCi>,
    pub seeds: Vec<u64>,
}

pub fn aggregate_runs(records: &[RunRecord], confidence: f64) -> Result<AggregateSummary> {
    if records.len() < 2 {
        return Err(Error::usage(format!(
            "aggregation needs at least 2 runs, got {}",
            records.len()
        )));
    }
    let col = |f: &dyn Fn(&RunSummary) -> f64| -> Result<MeanCi> {
        let v: Vec<f64> = records.iter().map(|r| f(&r.summary)).collect();
        mean_ci(&v, confidence)
    };
    let regrets: Option<Vec<f64>> = records
        .iter()
        .map(|r| r.summary.final_dynamic_regret)
        .collect();
    Ok(AggregateSummary {
        runs: records.len(),
        confidence,
        accuracy: col(&|s| s.accuracy)?,
        query_fraction: col(&|s| s.query_fraction)?,
        mistakes: col(&|s| s.mistakes as f64)?,
        final_accumulated_loss: col(&|s| s.final_accumulated_loss)?,
        final_dynamic_regret: regrets.map(|v| mean_ci(&v, confidence)).transpose()?,
        seeds: records.iter().map(|r| r.seed).collect(),
    })
}
