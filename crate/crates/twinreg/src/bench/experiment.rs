//! Repeated-split benchmark experiments.
//!
//! One experiment = one dataset, one method, `repetitions` independent
//! train/validation/test splits. Each repetition derives its own seed
//! stream, fits from scratch, and reports test RMSE plus wall-clock
//! timings and the fitted model's storage cost in parameters.

use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bench::metrics::{mean, rmse, standard_error};
use crate::data::{
    self, fit_scaler, fit_scaler_with_target, Dataset, Split, SplitMode, SplitSpec, TargetColumn,
};
use crate::error::{Error, Result};
use crate::learners::{self, KnnConfig, KnnModel, LearnerConfig, MlpConfig, Model, RfGrid};
use crate::matrix::Matrix;
use crate::pairing::PairingStrategy;
use crate::seeds;
use crate::semisup::{semisup_fit, SemiSupConfig};
use crate::twin::{twin_fit, twin_predict_batch, AnchorPolicy, TwinModel};

const STREAM_DATA: u64 = 0x62656e63_01;
const STREAM_REP: u64 = 0x62656e63_02;
const STREAM_SPLIT: u64 = 0x62656e63_03;
const STREAM_FIT: u64 = 0x62656e63_04;
const STREAM_ANCHOR: u64 = 0x62656e63_05;

/// Where the rows come from: a seeded synthetic generator or a CSV file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DatasetSpec {
    TestFunction {
        n: usize,
        #[serde(default)]
        noise_std: f64,
    },
    Rcl {
        n: usize,
        #[serde(default)]
        noise_std: f64,
    },
    Wheatstone {
        n: usize,
        #[serde(default)]
        noise_std: f64,
    },
    Csv {
        path: PathBuf,
        target: TargetColumn,
    },
}

impl DatasetSpec {
    /// Generate or read the rows. The seed only matters for the synthetic
    /// sources; a CSV loads the same rows regardless.
    pub fn load(&self, seed: u64) -> Result<Dataset> {
        match self {
            DatasetSpec::TestFunction { n, noise_std } => {
                data::generate_test_function(*n, seed, *noise_std)
            }
            DatasetSpec::Rcl { n, noise_std } => data::generate_rcl(*n, seed, *noise_std),
            DatasetSpec::Wheatstone { n, noise_std } => {
                data::generate_wheatstone(*n, seed, *noise_std)
            }
            DatasetSpec::Csv { path, target } => data::load_csv(path, target),
        }
    }
}

/// How a nearest-neighbor twin model is trained (inference always uses the
/// m nearest anchors).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainMode {
    /// Train only on nearest-neighbor pairs.
    Nearest,
    /// Train on the ordinary pair set; restrict only the anchors.
    Full,
}

/// The regression method under test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Method {
    /// A single direct network on (x, y).
    Ann,
    /// An average of independently initialized direct networks.
    AnnEnsemble { members: usize },
    /// A twin network queried against every training anchor.
    Tnnr,
    /// An average of independently trained twin networks.
    TnnrEnsemble { members: usize },
    /// A twin network restricted to the m nearest anchors.
    Nntnnr { m: usize, train_mode: TrainMode },
    /// k-nearest-neighbor regression on standardized features.
    Knn { k: usize },
    /// A random forest selected by cross-validated grid search.
    Rf,
    /// A twin random forest on difference-augmented pairs.
    TwinRf,
    /// A twin random forest retrained on loop-consistent pseudo-labels
    /// drawn from an unlabeled pool.
    SemisupRf {
        lambda: f64,
        #[serde(default = "default_true")]
        transductive: bool,
    },
}

fn default_true() -> bool {
    true
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Ann => "ann",
            Method::AnnEnsemble { .. } => "ann_ensemble",
            Method::Tnnr => "tnnr",
            Method::TnnrEnsemble { .. } => "tnnr_ensemble",
            Method::Nntnnr { .. } => "nntnnr",
            Method::Knn { .. } => "knn",
            Method::Rf => "rf",
            Method::TwinRf => "twin_rf",
            Method::SemisupRf { .. } => "semisup_rf",
        }
    }

    /// Methods that train a pairwise network and accept pairing overrides.
    fn takes_multiplier(&self) -> bool {
        matches!(
            self,
            Method::Tnnr | Method::TnnrEnsemble { .. } | Method::Nntnnr { .. }
        )
    }

    /// Methods whose inference anchors can be subsampled.
    fn takes_anchors(&self) -> bool {
        matches!(self, Method::Tnnr | Method::TnnrEnsemble { .. })
    }
}

fn default_repetitions() -> usize {
    25
}

fn default_split() -> SplitMode {
    SplitMode::Fractions {
        train: 0.7,
        validation: 0.1,
        test: 0.2,
    }
}

/// Everything needed to reproduce one benchmark run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub method: Method,
    #[serde(default = "default_split")]
    pub split: SplitMode,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
    /// Network shape/schedule for the MLP-based methods.
    #[serde(default)]
    pub mlp: MlpConfig,
    /// Hyperparameter grid for the forest-based methods.
    #[serde(default)]
    pub rf_grid: RfGrid,
    /// Pair-set subsampling for the twin networks: k partners per row
    /// instead of all n^2 ordered pairs. None keeps the full set.
    #[serde(default)]
    pub multiplier: Option<usize>,
    /// Difference augmentation for the twin networks (the twin forests
    /// always augment).
    #[serde(default)]
    pub augment: bool,
    /// Restrict twin inference to this many randomly chosen anchors
    /// (fresh draw per repetition). None uses every training row.
    #[serde(default)]
    pub anchors: Option<usize>,
    /// Loop budget for semi-supervised retraining; None uses the default
    /// of one loop per three labeled rows.
    #[serde(default)]
    pub loop_count: Option<usize>,
    /// Report wall-clock timings; disable for bit-identical output files.
    #[serde(default = "default_true")]
    pub record_timings: bool,
}

impl ExperimentConfig {
    pub fn new(dataset: DatasetSpec, method: Method) -> ExperimentConfig {
        ExperimentConfig {
            dataset,
            method,
            split: default_split(),
            repetitions: default_repetitions(),
            seed: 0,
            mlp: MlpConfig::default(),
            rf_grid: RfGrid::default(),
            multiplier: None,
            augment: false,
            anchors: None,
            loop_count: None,
            record_timings: true,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::invalid("repetitions must be at least 1"));
        }
        if self.multiplier.is_some() && !self.method.takes_multiplier() {
            return Err(Error::invalid(format!(
                "multiplier does not apply to method '{}'",
                self.method.name()
            )));
        }
        if let Some(k) = self.multiplier {
            if k == 0 {
                return Err(Error::invalid("multiplier must be at least 1"));
            }
        }
        if self.anchors.is_some() && !self.method.takes_anchors() {
            return Err(Error::invalid(format!(
                "anchor subsampling does not apply to method '{}'",
                self.method.name()
            )));
        }
        if let Some(c) = self.anchors {
            if c == 0 {
                return Err(Error::invalid("anchor count must be at least 1"));
            }
        }
        if self.loop_count.is_some() && !matches!(self.method, Method::SemisupRf { .. }) {
            return Err(Error::invalid(format!(
                "loop_count does not apply to method '{}'",
                self.method.name()
            )));
        }
        match &self.method {
            Method::AnnEnsemble { members } | Method::TnnrEnsemble { members } => {
                if *members == 0 {
                    return Err(Error::invalid("ensemble must have at least 1 member"));
                }
            }
            Method::Nntnnr { m, .. } => {
                if *m == 0 {
                    return Err(Error::invalid("neighbor count must be at least 1"));
                }
            }
            Method::Knn { k } => {
                if *k == 0 {
                    return Err(Error::invalid("k must be at least 1"));
                }
            }
            Method::SemisupRf { lambda, .. } => {
                if !(lambda.is_finite() && *lambda >= 0.0) {
                    return Err(Error::invalid("lambda must be finite and nonnegative"));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// One split's outcome.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Repetition {
    /// The per-repetition master seed (everything inside derives from it).
    pub seed: u64,
    pub rmse: f64,
    pub train_s: f64,
    pub infer_s: f64,
    /// Stored parameters of the fitted predictor, anchor tables included.
    pub parameters: u64,
}

/// A full experiment record: the config echoed back plus per-repetition
/// results and their aggregate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    /// Set when this result is one point of a sweep.
    pub sweep_value: Option<f64>,
    pub per_repetition: Vec<Repetition>,
    pub mean_rmse: f64,
    pub standard_error: f64,
}

/// Run the configured method over `repetitions` fresh splits of one
/// dataset. Identical configs produce identical results apart from the
/// timing fields (zeroed when `record_timings` is off).
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let dataset = cfg.dataset.load(seeds::derive(cfg.seed, STREAM_DATA))?;

    // Repetitions run sequentially so failures surface in order; the
    // learner fits inside each repetition already use the rayon pool.
    let mut per_repetition = Vec::with_capacity(cfg.repetitions);
    for rep in 0..cfg.repetitions {
        let r = run_repetition(cfg, &dataset, rep).map_err(|e| Error::Repetition {
            index: rep,
            source: Box::new(e),
        })?;
        per_repetition.push(r);
    }

    let rmses: Vec<f64> = per_repetition.iter().map(|r| r.rmse).collect();
    Ok(ExperimentResult {
        config: cfg.clone(),
        sweep_value: None,
        mean_rmse: mean(&rmses),
        standard_error: standard_error(&rmses),
        per_repetition,
    })
}

fn run_repetition(cfg: &ExperimentConfig, dataset: &Dataset, rep: usize) -> Result<Repetition> {
    let rep_seed = seeds::derive(cfg.seed, STREAM_REP + rep as u64);
    let spec = SplitSpec {
        seed: seeds::derive(rep_seed, STREAM_SPLIT),
        mode: cfg.split,
    };
    let sp = data::split(dataset, &spec)?;
    if sp.test.is_empty() {
        return Err(Error::invalid("split produced an empty test set"));
    }

    let out = execute_method(cfg, &sp, rep_seed)?;
    let (train_s, infer_s) = if cfg.record_timings {
        (out.train_s, out.infer_s)
    } else {
        (0.0, 0.0)
    };
    Ok(Repetition {
        seed: rep_seed,
        rmse: rmse(&out.predictions, &sp.test.targets)?,
        train_s,
        infer_s,
        parameters: out.parameters,
    })
}

struct RepOutput {
    predictions: Vec<f64>,
    parameters: u64,
    train_s: f64,
    infer_s: f64,
}

/// Pairing strategy for the MLP twin methods, honoring the multiplier and
/// augmentation overrides.
fn mlp_pair_strategy(cfg: &ExperimentConfig) -> PairingStrategy {
    let base = match cfg.multiplier {
        Some(k) => PairingStrategy::multiplier(k),
        None => PairingStrategy::full(),
    };
    base.with_augment(cfg.augment)
}

/// Inference anchors for a twin model: every training row, or a fresh
/// random subset of the requested size.
fn anchor_policy(cfg: &ExperimentConfig, n_train: usize, rep_seed: u64) -> Result<AnchorPolicy> {
    match cfg.anchors {
        None => Ok(AnchorPolicy::All),
        Some(c) => {
            if c > n_train {
                return Err(Error::invalid(format!(
                    "anchor count {c} exceeds the {n_train} training rows"
                )));
            }
            let mut rng = seeds::rng(seeds::derive(rep_seed, STREAM_ANCHOR));
            let mut idx = rand::seq::index::sample(&mut rng, n_train, c).into_vec();
            idx.sort_unstable();
            Ok(AnchorPolicy::FixedSubset(idx))
        }
    }
}

fn policy_anchor_count(policy: &AnchorPolicy, tm: &TwinModel) -> usize {
    match policy {
        AnchorPolicy::All => tm.anchor_count(),
        AnchorPolicy::FixedSubset(idx) => idx.len(),
        // Finding the nearest anchors requires keeping the whole table.
        AnchorPolicy::Nearest(_) => tm.anchor_count(),
    }
}

/// Anchor-table storage: one target plus f coordinates per anchor.
fn anchor_parameters(count: usize, features: usize) -> u64 {
    (count * (features + 1)) as u64
}

fn validation_opt(sp: &Split) -> Option<&Dataset> {
    if sp.validation.is_empty() {
        None
    } else {
        Some(&sp.validation)
    }
}

fn execute_method(cfg: &ExperimentConfig, sp: &Split, rep_seed: u64) -> Result<RepOutput> {
    match &cfg.method {
        Method::Ann => fit_ann_ensemble(cfg, sp, rep_seed, 1),
        Method::AnnEnsemble { members } => fit_ann_ensemble(cfg, sp, rep_seed, *members),
        Method::Tnnr => fit_tnnr_ensemble(cfg, sp, rep_seed, 1),
        Method::TnnrEnsemble { members } => fit_tnnr_ensemble(cfg, sp, rep_seed, *members),
        Method::Nntnnr { m, train_mode } => fit_nntnnr(cfg, sp, rep_seed, *m, *train_mode),
        Method::Knn { k } => fit_knn(sp, *k),
        Method::Rf => fit_rf(cfg, sp, rep_seed),
        Method::TwinRf => fit_twin_rf(cfg, sp, rep_seed),
        Method::SemisupRf {
            lambda,
            transductive,
        } => fit_semisup_rf(cfg, sp, rep_seed, *lambda, *transductive),
    }
}

fn fit_ann_ensemble(
    cfg: &ExperimentConfig,
    sp: &Split,
    rep_seed: u64,
    members: usize,
) -> Result<RepOutput> {
    let t0 = Instant::now();
    let scaler = fit_scaler_with_target(&sp.train)?;
    let scaled_train = scaler.transform(&sp.train);
    let scaled_val = validation_opt(sp).map(|v| scaler.transform(v));
    let val_ref = scaled_val
        .as_ref()
        .map(|v| (&v.features, v.targets.as_slice()));

    let learner = LearnerConfig::Mlp(cfg.mlp.clone());
    let mut models = Vec::with_capacity(members);
    for e in 0..members {
        models.push(learners::fit(
            &learner,
            &scaled_train.features,
            &scaled_train.targets,
            val_ref,
            seeds::derive(rep_seed, STREAM_FIT + e as u64),
        )?);
    }
    let train_s = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let scaled_test = scaler.transform_features(&sp.test.features);
    let mut sum = vec![0.0; sp.test.len()];
    for model in &models {
        let preds = model.predict(&scaled_test)?;
        for (s, p) in sum.iter_mut().zip(&preds) {
            *s += p;
        }
    }
    let n = members as f64;
    let predictions = scaler.inverse_targets(&sum.iter().map(|s| s / n).collect::<Vec<_>>());
    let infer_s = t1.elapsed().as_secs_f64();

    Ok(RepOutput {
        predictions,
        parameters: models.iter().map(|m| m.parameter_count()).sum(),
        train_s,
        infer_s,
    })
}

fn fit_tnnr_ensemble(
    cfg: &ExperimentConfig,
    sp: &Split,
    rep_seed: u64,
    members: usize,
) -> Result<RepOutput> {
    let strategy = mlp_pair_strategy(cfg);
    let learner = LearnerConfig::Mlp(cfg.mlp.clone());
    let policy = anchor_policy(cfg, sp.train.len(), rep_seed)?;

    let t0 = Instant::now();
    let mut models = Vec::with_capacity(members);
    for e in 0..members {
        models.push(twin_fit(
            &learner,
            &sp.train,
            &strategy,
            validation_opt(sp),
            seeds::derive(rep_seed, STREAM_FIT + e as u64),
        )?);
    }
    let train_s = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let mut sum = vec![0.0; sp.test.len()];
    for tm in &models {
        let preds = twin_predict_batch(tm, &sp.test.features, &policy)?;
        for (s, p) in sum.iter_mut().zip(&preds) {
            *s += p.value;
        }
    }
    let n = members as f64;
    let predictions: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let infer_s = t1.elapsed().as_secs_f64();

    let f = sp.train.feature_count();
    let per_member_anchors = anchor_parameters(policy_anchor_count(&policy, &models[0]), f);
    Ok(RepOutput {
        predictions,
        parameters: models
            .iter()
            .map(|tm| tm.base.parameter_count() + per_member_anchors)
            .sum(),
        train_s,
        infer_s,
    })
}

fn fit_nntnnr(
    cfg: &ExperimentConfig,
    sp: &Split,
    rep_seed: u64,
    m: usize,
    train_mode: TrainMode,
) -> Result<RepOutput> {
    let strategy = match train_mode {
        TrainMode::Nearest => PairingStrategy::nearest_neighbors(m).with_augment(cfg.augment),
        TrainMode::Full => mlp_pair_strategy(cfg),
    };
    let learner = LearnerConfig::Mlp(cfg.mlp.clone());

    let t0 = Instant::now();
    let tm = twin_fit(
        &learner,
        &sp.train,
        &strategy,
        validation_opt(sp),
        seeds::derive(rep_seed, STREAM_FIT),
    )?;
    let train_s = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let policy = AnchorPolicy::Nearest(m);
    let preds = twin_predict_batch(&tm, &sp.test.features, &policy)?;
    let predictions: Vec<f64> = preds.iter().map(|p| p.value).collect();
    let infer_s = t1.elapsed().as_secs_f64();

    let f = sp.train.feature_count();
    Ok(RepOutput {
        predictions,
        parameters: tm.base.parameter_count() + anchor_parameters(tm.anchor_count(), f),
        train_s,
        infer_s,
    })
}

fn fit_knn(sp: &Split, k: usize) -> Result<RepOutput> {
    let t0 = Instant::now();
    let scaler = fit_scaler(&sp.train)?;
    let knn = KnnModel::fit(
        &KnnConfig { k },
        &scaler.transform_features(&sp.train.features),
        &sp.train.targets,
    )?;
    let model = Model::Knn(knn);
    let train_s = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let predictions = model.predict(&scaler.transform_features(&sp.test.features))?;
    let infer_s = t1.elapsed().as_secs_f64();

    Ok(RepOutput {
        parameters: model.parameter_count(),
        predictions,
        train_s,
        infer_s,
    })
}

fn fit_rf(cfg: &ExperimentConfig, sp: &Split, rep_seed: u64) -> Result<RepOutput> {
    let t0 = Instant::now();
    let gs = learners::grid_search_cv(
        &cfg.rf_grid,
        &sp.train.features,
        &sp.train.targets,
        seeds::derive(rep_seed, STREAM_FIT),
    )?;
    let model = Model::Forest(gs.model);
    let train_s = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let predictions = model.predict(&sp.test.features)?;
    let infer_s = t1.elapsed().as_secs_f64();

    Ok(RepOutput {
        parameters: model.parameter_count(),
        predictions,
        train_s,
        infer_s,
    })
}

fn fit_twin_rf(cfg: &ExperimentConfig, sp: &Split, rep_seed: u64) -> Result<RepOutput> {
    // Trees split on one coordinate at a time, so the difference block is
    // what lets a forest express y_i - y_j; twin forests always augment.
    let strategy = PairingStrategy::full().with_augment(true);
    let learner = LearnerConfig::RandomForest(cfg.rf_grid.clone());

    let t0 = Instant::now();
    let tm = twin_fit(
        &learner,
        &sp.train,
        &strategy,
        None,
        seeds::derive(rep_seed, STREAM_FIT),
    )?;
    let train_s = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let preds = twin_predict_batch(&tm, &sp.test.features, &AnchorPolicy::All)?;
    let predictions: Vec<f64> = preds.iter().map(|p| p.value).collect();
    let infer_s = t1.elapsed().as_secs_f64();

    let f = sp.train.feature_count();
    Ok(RepOutput {
        predictions,
        parameters: tm.base.parameter_count() + anchor_parameters(tm.anchor_count(), f),
        train_s,
        infer_s,
    })
}

fn fit_semisup_rf(
    cfg: &ExperimentConfig,
    sp: &Split,
    rep_seed: u64,
    lambda: f64,
    transductive: bool,
) -> Result<RepOutput> {
    let pool: &Matrix = if transductive {
        &sp.test.features
    } else {
        if sp.validation.is_empty() {
            return Err(Error::invalid(
                "inductive semi-supervised fit needs a validation set as unlabeled pool",
            ));
        }
        &sp.validation.features
    };
    let semi_cfg = SemiSupConfig {
        lambda,
        loop_count: cfg.loop_count,
        transductive,
    };
    let learner = LearnerConfig::RandomForest(cfg.rf_grid.clone());

    let t0 = Instant::now();
    let (tm, _report) = semisup_fit(
        &learner,
        &sp.train,
        pool,
        &semi_cfg,
        seeds::derive(rep_seed, STREAM_FIT),
    )?;
    let train_s = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let preds = twin_predict_batch(&tm, &sp.test.features, &AnchorPolicy::All)?;
    let predictions: Vec<f64> = preds.iter().map(|p| p.value).collect();
    let infer_s = t1.elapsed().as_secs_f64();

    let f = sp.train.feature_count();
    Ok(RepOutput {
        predictions,
        parameters: tm.base.parameter_count() + anchor_parameters(tm.anchor_count(), f),
        train_s,
        infer_s,
    })
}
