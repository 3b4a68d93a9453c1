//! Benchmark harness: repeated-split experiments, parameter sweeps,
//! storage accounting, the bias-variance-covariance diagnostic, and the
//! pair-multiplier sanity check, plus the file formats the CLI writes.

pub mod bvdiag;
pub mod experiment;
pub mod metrics;
pub mod multcheck;
pub mod output;
pub mod storage;
pub mod sweep;

pub use bvdiag::{bias_variance_diagnostic, BvConfig, BvRecord, EstimatorKind, MemberMode};
pub use experiment::{
    run_experiment, DatasetSpec, ExperimentConfig, ExperimentResult, Method, Repetition, TrainMode,
};
pub use metrics::{mean, rmse, sample_std, standard_error};
pub use multcheck::{multiplier_check, MultiplierCheckReport, Verdict};
pub use output::{render_csv, write_results};
pub use storage::{storage_report, StorageRow};
pub use sweep::{apply_axis, sweep, SweepAxis};
