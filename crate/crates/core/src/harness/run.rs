use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{ExperimentConfig, NamedLearner};
use crate::environments::{
    gaussian_sample, label_flip_sample, multiclass_gaussian_sample, Realization, Sample,
    StreamConfig,
};
use crate::error::{Error, Result};
use crate::geometry::ModelVector;
use crate::learners::{pretrain, BuildContext, RoundOutcome, SampleOracle};
use crate::metrics::{
    aggregate_runs, dynamic_regret, expected_hinge_gaussian, mc_expected_loss, AggregateSummary,
    ComparatorOracle, ComparatorSeries, RunRecord,
};

/// Stable seed for a named purpose: the first 8 bytes of
/// `sha256(base_seed ‖ label ‖ repeat)`.
pub fn derive_seed(base_seed: u64, label: &str, repeat: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(base_seed.to_le_bytes());
    h.update((label.len() as u64).to_le_bytes());
    h.update(label.as_bytes());
    h.update((repeat as u64).to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Seed of the shared sample path of repeat `r`.
pub fn stream_seed(base_seed: u64, repeat: usize) -> u64 {
    derive_seed(base_seed, "stream", repeat)
}

/// Seed of a learner's private randomness in repeat `r`.
pub fn learner_seed(base_seed: u64, name: &str, repeat: usize) -> u64 {
    derive_seed(base_seed, &format!("learner/{name}"), repeat)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub learner: String,
    pub repeat: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerSummary {
    pub name: String,
    /// Absent with fewer than two successful runs.
    pub aggregate: Option<AggregateSummary>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    /// Ordered by learner (configuration order), then repeat.
    pub records: Vec<RunRecord>,
    pub summaries: Vec<LearnerSummary>,
    pub failures: Vec<RunFailure>,
}

impl ExperimentOutput {
    pub fn records_for<'a>(&'a self, learner: &'a str) -> impl Iterator<Item = &'a RunRecord> + 'a {
        self.records.iter().filter(move |r| r.learner == learner)
    }

    pub fn summary_for(&self, learner: &str) -> Option<&AggregateSummary> {
        self.summaries
            .iter()
            .find(|s| s.name == learner)
            .and_then(|s| s.aggregate.as_ref())
    }
}

/// Per-repeat inputs shared by every learner.
struct RepeatInputs {
    realization: Realization,
    init: ModelVector,
}

/// Runs one learner over a realized stream.
pub fn run_learner(
    config: &ExperimentConfig,
    learner: &NamedLearner,
    repeat: usize,
    stream: &[Sample],
    init: ModelVector,
    matched_rate: Option<f64>,
    comparator: Option<&ComparatorSeries>,
) -> Result<RunRecord> {
    let env = &config.environment;
    let task = env.task();
    let ctx = BuildContext {
        geometry: config.geometry,
        loss: config.loss,
        task,
        reference: config.reference_params(),
        matched_rate,
    };
    let mut running = learner.kind.build(init, &ctx)?;
    let seed = learner_seed(config.base_seed, &learner.name, repeat);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut outcomes: Vec<RoundOutcome> = Vec::with_capacity(stream.len());
    let mut decisions: Vec<ModelVector> = Vec::with_capacity(stream.len());
    for (i, s) in stream.iter().enumerate() {
        let mut oracle = SampleOracle::new(s.label);
        let (decision, outcome) = running
            .round(&s.features, &mut oracle, &mut rng)
            .map_err(|e| Error::usage(format!("round {}: {e}", i + 1)))?;
        outcomes.push(outcome);
        decisions.push(decision);
    }

    let expected = expected_losses(config, &learner.name, repeat, &decisions)?;
    let regret = match (&expected, comparator) {
        (Some(e), Some(c)) => Some(dynamic_regret(e, c)?),
        _ => None,
    };
    RunRecord::from_outcomes(
        learner.name.clone(),
        repeat,
        seed,
        &outcomes,
        expected.as_deref(),
        regret.as_deref(),
    )
}

/// `l_t(w_t)` per round: closed form for the rotating Gaussian, Monte Carlo
/// for the other synthetic streams when enabled.
fn expected_losses(
    config: &ExperimentConfig,
    name: &str,
    repeat: usize,
    decisions: &[ModelVector],
) -> Result<Option<Vec<f64>>> {
    let env = &config.environment;
    let n = config.metrics.mc_fallback_n;
    let mc =
        |sample: &dyn Fn(usize, &mut ChaCha8Rng) -> Result<Sample>| -> Result<Option<Vec<f64>>> {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                config.base_seed,
                &format!("mc/{name}"),
                repeat,
            ));
            decisions
                .iter()
                .enumerate()
                .map(|(i, w)| {
                    mc_expected_loss(
                        env.task(),
                        &config.loss,
                        w,
                        |r: &mut ChaCha8Rng| sample(i + 1, r),
                        n,
                        &mut rng,
                    )
                    .map(|(mean, _)| mean)
                })
                .collect::<Result<Vec<f64>>>()
                .map(Some)
        };
    match env {
        StreamConfig::RotatingGaussian(c) => decisions
            .iter()
            .enumerate()
            .map(|(i, w)| expected_hinge_gaussian(&config.loss, w, c, i + 1))
            .collect::<Result<Vec<f64>>>()
            .map(Some),
        StreamConfig::RotatingMulticlass(c) if n >= 2 => {
            mc(&|t, r| multiclass_gaussian_sample(c, t, r))
        }
        StreamConfig::LabelFlip(c) if n >= 2 => mc(&|t, r| label_flip_sample(c, t, r)),
        _ => Ok(None),
    }
}

fn prepare_repeat(config: &ExperimentConfig, repeat: usize) -> Result<RepeatInputs> {
    let env = &config.environment;
    let mut stream_rng = ChaCha8Rng::seed_from_u64(stream_seed(config.base_seed, repeat));
    let realization = env.realize(&mut stream_rng)?;
    if realization.stream.is_empty() {
        return Err(Error::usage("the stream has no rounds"));
    }
    let mut pretrain_rng =
        ChaCha8Rng::seed_from_u64(derive_seed(config.base_seed, "pretrain", repeat));
    let init = pretrain(
        &realization.pretrain,
        env.task(),
        &config.loss,
        &config.geometry,
        &config.pretrain,
        &mut pretrain_rng,
    )?;
    Ok(RepeatInputs { realization, init })
}

/// Comparator series for the configured stream, when one exists.
pub fn comparator_series(config: &ExperimentConfig) -> Result<Option<ComparatorSeries>> {
    match &config.environment {
        StreamConfig::RotatingGaussian(c) if config.metrics.compute_regret => {
            let oracle =
                ComparatorOracle::new(config.loss, c.clone(), config.metrics.oracle_budget)?;
            // fill the cache in parallel, then read it back in order
            (1..=c.horizon_t).into_par_iter().for_each(|t| {
                oracle.at_angle(c.angle(t));
            });
            Ok(Some(oracle.series()))
        }
        _ => Ok(None),
    }
}

/// Runs every (learner, repeat) cell. Learners whose query rate is matched to
/// the reference run wait for the reference cell of the same repeat.
/// Failing cells are reported in `failures` without stopping the others.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let config = config.clone().resolve();
    let comparator = comparator_series(&config)?;

    let repeats: Vec<Result<RepeatInputs>> = (0..config.repeats)
        .into_par_iter()
        .map(|r| prepare_repeat(&config, r))
        .collect();

    let cell = |learner: &NamedLearner, repeat: usize, matched: Option<f64>| -> Result<RunRecord> {
        let inputs = repeats[repeat]
            .as_ref()
            .map_err(|e| Error::usage(format!("stream setup failed: {e}")))?;
        run_learner(
            &config,
            learner,
            repeat,
            &inputs.realization.stream,
            inputs.init.clone(),
            matched,
            comparator.as_ref(),
        )
    };

    let cells = |filter: &dyn Fn(&NamedLearner) -> bool, rates: &[Option<f64>]| {
        let jobs: Vec<(usize, usize)> = config
            .learners
            .iter()
            .enumerate()
            .filter(|(_, l)| filter(l))
            .flat_map(|(i, _)| (0..config.repeats).map(move |r| (i, r)))
            .collect();
        jobs.into_par_iter()
            .map(|(i, r)| ((i, r), cell(&config.learners[i], r, rates[r])))
            .collect::<Vec<_>>()
    };

    let none = vec![None; config.repeats];
    let mut results = cells(&|l| !l.kind.needs_matched_rate(), &none);

    let reference = config.reference.clone();
    let ref_index = reference
        .as_ref()
        .and_then(|name| config.learners.iter().position(|l| &l.name == name));
    let rates: Vec<Option<f64>> = (0..config.repeats)
        .map(|r| {
            results
                .iter()
                .find(|((i, rr), _)| Some(*i) == ref_index && *rr == r)
                .and_then(|(_, res)| res.as_ref().ok())
                .map(|rec| rec.summary.query_fraction)
        })
        .collect();
    results.extend(cells(&|l| l.kind.needs_matched_rate(), &rates));
    results.sort_by_key(|(k, _)| *k);

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for ((i, r), res) in results {
        match res {
            Ok(rec) => records.push(rec),
            Err(e) => failures.push(RunFailure {
                learner: config.learners[i].name.clone(),
                repeat: r,
                message: e.to_string(),
            }),
        }
    }

    let summaries = config
        .learners
        .iter()
        .map(|l| {
            let mine: Vec<RunRecord> = records
                .iter()
                .filter(|r| r.learner == l.name)
                .cloned()
                .collect();
            let aggregate = if mine.len() >= 2 {
                Some(aggregate_runs(&mine, config.metrics.confidence)?)
            } else {
                None
            };
            Ok(LearnerSummary {
                name: l.name.clone(),
                aggregate,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ExperimentOutput {
        config,
        records,
        summaries,
        failures,
    })
}

/// The realized stream of repeat `r`, exactly as the learners see it.
pub fn realize_repeat(config: &ExperimentConfig, repeat: usize) -> Result<Realization> {
    let env = config.resolved_environment();
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(config.base_seed, repeat));
    env.realize(&mut rng)
}

/// Sampler for round `t` of the configured synthetic stream.
pub fn round_sampler(
    env: &StreamConfig,
) -> Option<impl Fn(usize, &mut ChaCha8Rng) -> Result<Sample> + '_> {
    if matches!(env, StreamConfig::Csv(_)) {
        return None;
    }
    Some(move |t: usize, r: &mut ChaCha8Rng| match env {
        StreamConfig::RotatingGaussian(c) => gaussian_sample(c, t, r),
        StreamConfig::RotatingMulticlass(c) => multiclass_gaussian_sample(c, t, r),
        StreamConfig::LabelFlip(c) => label_flip_sample(c, t, r),
        StreamConfig::Csv(_) => unreachable!(),
    })
}
