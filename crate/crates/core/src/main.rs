use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use osamd::harness::{
    comparator_series, emit_results, label_flip_config, run_experiment, write_comparator_csv,
    ExperimentConfig, SummaryFile,
};
use osamd::Error;

#[derive(Parser)]
#[command(
    name = "osamd",
    version,
    about = "Self-adaptive online learning experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Base seed, overriding the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory, overriding the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Number of repeats, overriding the configuration.
    #[arg(long, global = true)]
    repeats: Option<usize>,

    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its results. Without a file, runs the
    /// default rotating-Gaussian benchmark.
    Run { config: Option<PathBuf> },
    /// Check a configuration without running it.
    Validate { config: PathBuf },
    /// Precompute the per-round comparator series.
    Oracle { config: Option<PathBuf> },
    /// Run a built-in scenario.
    Scenario {
        #[arg(value_parser = ["theorem2"])]
        name: String,
    },
}

enum Failure {
    Invalid(Error),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Load { .. } => Failure::Invalid(e),
            other => Failure::Runtime(other),
        }
    }
}

fn load(path: Option<&Path>) -> Result<ExperimentConfig, Failure> {
    match path {
        Some(p) => Ok(ExperimentConfig::load(p)?),
        None => Ok(ExperimentConfig::default()),
    }
}

fn apply_overrides(cli: &Cli, config: &mut ExperimentConfig) {
    if let Some(seed) = cli.seed {
        config.base_seed = seed;
    }
    if let Some(out) = &cli.out {
        config.output.dir = out.clone();
    }
    if let Some(r) = cli.repeats {
        config.repeats = r;
    }
}

fn run_and_emit(config: ExperimentConfig) -> Result<(), Failure> {
    config.validate()?;
    let out = run_experiment(&config)?;
    let written = emit_results(&out, &out.config.output)?;
    let summary = SummaryFile::from_output(&out);
    for e in &summary.learners {
        let regret = e
            .final_regret_mean
            .map(|r| format!("  regret {r:.2}"))
            .unwrap_or_default();
        println!(
            "{:<20} accuracy {:6.2}%  labels {:6.2}%{regret}",
            e.name,
            100.0 * e.accuracy_mean,
            100.0 * e.label_fraction_mean
        );
    }
    for f in &out.failures {
        eprintln!("run {} #{} failed: {}", f.learner, f.repeat, f.message);
    }
    println!(
        "wrote {} files to {}",
        written.len(),
        out.config.output.dir.display()
    );
    if out.failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Runtime(Error::Usage(format!(
            "{} runs failed",
            out.failures.len()
        ))))
    }
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Run { config } => {
            let mut c = load(config.as_deref())?;
            apply_overrides(cli, &mut c);
            run_and_emit(c)
        }
        Command::Validate { config } => {
            let mut c = load(Some(config))?;
            apply_overrides(cli, &mut c);
            c.validate()?;
            println!("{}: ok", config.display());
            Ok(())
        }
        Command::Oracle { config } => {
            let mut c = load(config.as_deref())?;
            apply_overrides(cli, &mut c);
            c.validate()?;
            let c = c.resolve();
            let series = comparator_series(&c)?.ok_or_else(|| {
                Failure::Invalid(Error::Config(vec![
                    "the comparator needs a rotating-gaussian environment with compute_regret"
                        .to_string(),
                ]))
            })?;
            let dir = &c.output.dir;
            std::fs::create_dir_all(dir).map_err(|e| {
                Failure::Runtime(Error::Io {
                    path: dir.clone(),
                    source: e,
                })
            })?;
            let path = dir.join("comparator.csv");
            write_comparator_csv(&series, &path)?;
            println!("wrote {} rounds to {}", series.len(), path.display());
            Ok(())
        }
        Command::Scenario { .. } => {
            let mut c = label_flip_config();
            apply_overrides(cli, &mut c);
            run_and_emit(c)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
