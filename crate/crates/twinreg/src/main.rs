//! Benchmark CLI: generate data, run experiments and sweeps, tabulate
//! storage costs, check the bias-variance identity, and run the pair
//! multiplier advisory.
//!
//! Configuration comes from a JSON file (`--config`), with individual
//! flags overriding file values. Failures print a machine-readable
//! `{"kind": ..., "message": ...}` JSON object to stderr and exit nonzero.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;

use twinreg::bench::{
    bias_variance_diagnostic, multiplier_check, run_experiment, storage_report, sweep, BvConfig,
    EstimatorKind, ExperimentConfig, ExperimentResult, MemberMode, SweepAxis,
};
use twinreg::bench::output::write_results;
use twinreg::data::{self, TargetColumn};
use twinreg::error::Result;

#[derive(Parser)]
#[command(
    name = "twinreg",
    version,
    about = "Twinned-regression benchmark harness"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GenSource {
    /// Smooth two-feature analytic benchmark.
    TestFunction,
    /// Driven oscillator circuit current (6 features).
    Rcl,
    /// Bridge circuit voltage (4 features).
    Wheatstone,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CliMemberMode {
    SharedBootstrap,
    Independent,
    Identical,
}

impl From<CliMemberMode> for MemberMode {
    fn from(m: CliMemberMode) -> MemberMode {
        match m {
            CliMemberMode::SharedBootstrap => MemberMode::SharedBootstrap,
            CliMemberMode::Independent => MemberMode::Independent,
            CliMemberMode::Identical => MemberMode::Identical,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic dataset as CSV (features x1..xf, target y).
    GenData {
        #[arg(long, value_enum)]
        source: GenSource,
        /// Number of rows.
        #[arg(long)]
        n: usize,
        /// Gaussian target noise standard deviation.
        #[arg(long, default_value_t = 0.0)]
        noise_std: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one experiment config over repeated splits.
    Run {
        /// Experiment config JSON.
        #[arg(long)]
        config: PathBuf,
        /// Directory for result.json and result.csv.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's repetition count.
        #[arg(long)]
        repetitions: Option<usize>,
        /// Zero the timing columns for bit-identical outputs.
        #[arg(long)]
        no_timings: bool,
    },
    /// Rerun one experiment while varying a single knob.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Knob to vary: ensemble_size, multiplier, neighbors, lambda, anchors.
        #[arg(long)]
        axis: String,
        /// Comma-separated axis values, run in order.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        repetitions: Option<usize>,
        #[arg(long)]
        no_timings: bool,
    },
    /// Tabulate direct-ensemble vs twin-network storage per ensemble size.
    StorageReport {
        /// Feature count of the modeled dataset.
        #[arg(long, default_value_t = 13)]
        features: usize,
        /// Hidden layer widths.
        #[arg(long, value_delimiter = ',', default_values_t = [128usize, 128])]
        hidden: Vec<usize>,
        #[arg(long = "ensemble-sizes", value_delimiter = ',',
              default_values_t = [1usize, 2, 4, 8, 16, 32])]
        ensemble_sizes: Vec<usize>,
        /// Also write the JSON table to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte-Carlo check of the two-member bias-variance-covariance identity.
    BvDiag {
        /// Optional BvConfig JSON; flags override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        train_n: Option<usize>,
        #[arg(long)]
        grid_points: Option<usize>,
        #[arg(long)]
        noise_std: Option<f64>,
        /// Fit a least-squares polynomial of this degree.
        #[arg(long, conflicts_with = "true_function")]
        degree: Option<usize>,
        /// Use the ground truth itself as the estimator.
        #[arg(long)]
        true_function: bool,
        #[arg(long, value_enum)]
        member_mode: Option<CliMemberMode>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Advisory: does error rise with the pair multiplier (1, 4, 16)?
    MultiplierCheck {
        /// Experiment config JSON with method "tnnr".
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        repetitions: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn apply_overrides(
    cfg: &mut ExperimentConfig,
    seed: Option<u64>,
    repetitions: Option<usize>,
    no_timings: bool,
) {
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(r) = repetitions {
        cfg.repetitions = r;
    }
    if no_timings {
        cfg.record_timings = false;
    }
}

/// Print a JSON value to stdout and optionally persist it to a file.
fn emit(value: &impl serde::Serialize, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    println!("{text}");
    if let Some(path) = out {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, text.as_bytes())?;
    }
    Ok(())
}

/// One-line human summary per result on stdout.
fn summarize(results: &[ExperimentResult]) {
    for r in results {
        let sweep_note = match r.sweep_value {
            Some(v) => format!(" [{v}]"),
            None => String::new(),
        };
        println!(
            "{}{}: mean RMSE {:.6} +/- {:.6} over {} repetitions",
            r.config.method.name(),
            sweep_note,
            r.mean_rmse,
            r.standard_error,
            r.per_repetition.len()
        );
    }
}

fn dispatch(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::GenData {
            source,
            n,
            noise_std,
            seed,
            out,
        } => {
            let dataset = match source {
                GenSource::TestFunction => data::generate_test_function(n, seed, noise_std)?,
                GenSource::Rcl => data::generate_rcl(n, seed, noise_std)?,
                GenSource::Wheatstone => data::generate_wheatstone(n, seed, noise_std)?,
            };
            if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            data::write_csv(&dataset, &out)?;
            // Round-trip guard: the written file must load back identically.
            let back = data::load_csv(&out, &TargetColumn::Name("y".into()))?;
            println!(
                "wrote {} rows x {} features to {}",
                back.len(),
                back.feature_count(),
                out.display()
            );
            Ok(())
        }
        Cmd::Run {
            config,
            out,
            seed,
            repetitions,
            no_timings,
        } => {
            let mut cfg: ExperimentConfig = read_config(&config)?;
            apply_overrides(&mut cfg, seed, repetitions, no_timings);
            let result = run_experiment(&cfg)?;
            summarize(std::slice::from_ref(&result));
            if let Some(dir) = out {
                write_results(&dir, std::slice::from_ref(&result))?;
                println!("results written to {}", dir.display());
            }
            Ok(())
        }
        Cmd::Sweep {
            config,
            axis,
            values,
            out,
            seed,
            repetitions,
            no_timings,
        } => {
            let mut cfg: ExperimentConfig = read_config(&config)?;
            apply_overrides(&mut cfg, seed, repetitions, no_timings);
            let axis = SweepAxis::parse(&axis)?;
            let results = sweep(&cfg, axis, &values)?;
            summarize(&results);
            if let Some(dir) = out {
                write_results(&dir, &results)?;
                println!("results written to {}", dir.display());
            }
            Ok(())
        }
        Cmd::StorageReport {
            features,
            hidden,
            ensemble_sizes,
            out,
        } => {
            let rows = storage_report(features, &hidden, &ensemble_sizes)?;
            emit(&rows, out.as_deref())
        }
        Cmd::BvDiag {
            config,
            trials,
            train_n,
            grid_points,
            noise_std,
            degree,
            true_function,
            member_mode,
            seed,
            out,
        } => {
            let mut cfg: BvConfig = match config {
                Some(path) => read_config(&path)?,
                None => BvConfig::default(),
            };
            if let Some(v) = trials {
                cfg.trials = v;
            }
            if let Some(v) = train_n {
                cfg.train_n = v;
            }
            if let Some(v) = grid_points {
                cfg.grid_points = v;
            }
            if let Some(v) = noise_std {
                cfg.noise_std = v;
            }
            if let Some(d) = degree {
                cfg.estimator = EstimatorKind::Polynomial { degree: d };
            }
            if true_function {
                cfg.estimator = EstimatorKind::TrueFunction;
            }
            if let Some(m) = member_mode {
                cfg.member_mode = m.into();
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let record = bias_variance_diagnostic(&cfg)?;
            emit(&record, out.as_deref())
        }
        Cmd::MultiplierCheck {
            config,
            seed,
            repetitions,
            out,
        } => {
            let mut cfg: ExperimentConfig = read_config(&config)?;
            apply_overrides(&mut cfg, seed, repetitions, false);
            let report = multiplier_check(&cfg)?;
            emit(&report, out.as_deref())
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli.cmd) {
        let payload = serde_json::json!({
            "kind": e.kind(),
            "message": e.to_string(),
        });
        eprintln!("{payload}");
        std::process::exit(1);
    }
}
