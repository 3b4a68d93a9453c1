//! Twinned regression: a base learner trained on pairs of training points to
//! predict target differences, queried by averaging over anchors.
//!
//! Training fits `F` on pair rows with targets `y_i - y_j`. A query `q` is
//! answered per anchor `a` by the symmetrized estimate
//! `1/2 F(q, a) - 1/2 F(a, q) + y_a`, and the final value is the mean over
//! the chosen anchor set. The spread across anchors doubles as an
//! uncertainty estimate, and the closed loop sum
//! `F(x1,x2) + F(x2,x3) + F(x3,x1)` measures self-consistency.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::data::{fit_scaler, fit_scaler_with_target, Dataset, Scaler};
use crate::error::{Error, Result};
use crate::learners::{self, LearnerConfig, Model};
use crate::matrix::Matrix;
use crate::pairing::{self, assemble_pair_features, build_pairs, PairMode, PairingStrategy};
use crate::seeds;

const STREAM_PAIRS: u64 = 0x7477696e_01;
const STREAM_BASE: u64 = 0x7477696e_02;
const STREAM_VAL: u64 = 0x7477696e_03;

/// A fitted twin model: the pair-difference base model plus the retained
/// training rows that serve as candidate anchors.
///
/// Anchors are stored in the base model's input space (scaled features) and
/// target space (z-scored when the scaler carries target statistics, as it
/// does for MLP bases).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TwinModel {
    pub base: Model,
    pub anchor_features: Matrix,
    pub anchor_targets: Vec<f64>,
    pub augment: bool,
    pub scaler: Scaler,
}

/// Which anchors a prediction averages over.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum AnchorPolicy {
    /// Every retained training row.
    All,
    /// An explicit list of anchor indices.
    FixedSubset(Vec<usize>),
    /// The m anchors nearest to the query in the scaled feature space,
    /// found by the same search the pairing module uses.
    Nearest(usize),
}

#[derive(Clone, Debug)]
pub struct TwinPrediction {
    /// Mean of `per_anchor_values`.
    pub value: f64,
    /// One estimate per anchor, in original target units, anchor order as
    /// selected by the policy.
    pub per_anchor_values: Vec<f64>,
    /// Population standard deviation of the per-anchor values.
    pub uncertainty: f64,
}

impl TwinModel {
    pub fn anchor_count(&self) -> usize {
        self.anchor_features.rows()
    }

    pub fn feature_count(&self) -> usize {
        self.anchor_features.cols()
    }

    /// Assemble a model from an already-fitted base and a raw anchor table
    /// (identity scaling). Intended for tests and fixtures.
    pub fn from_parts(
        base: Model,
        anchor_features: Matrix,
        anchor_targets: Vec<f64>,
        augment: bool,
    ) -> Result<TwinModel> {
        if anchor_features.rows() == 0 || anchor_features.rows() != anchor_targets.len() {
            return Err(Error::invalid("anchor table empty or misaligned"));
        }
        let width = anchor_features.cols() * if augment { 3 } else { 2 };
        if base.input_width() != width {
            return Err(Error::invalid(format!(
                "base expects width {}, anchors imply {}",
                base.input_width(),
                width
            )));
        }
        let cols = anchor_features.cols();
        Ok(TwinModel {
            base,
            anchor_features,
            anchor_targets,
            augment,
            scaler: Scaler::identity(cols),
        })
    }
}

/// Train a twin model: scale, build pair rows under `strategy`, fit the base
/// learner on them, and retain the whole training set as candidate anchors.
///
/// `validation` feeds MLP early stopping; its rows are paired against
/// training rows only (one direction, mirroring the pairing strategy), so
/// the validation distribution matches how anchors are used at inference.
/// Forest and k-NN bases ignore it.
pub fn twin_fit(
    learner: &LearnerConfig,
    train: &Dataset,
    strategy: &PairingStrategy,
    validation: Option<&Dataset>,
    seed: u64,
) -> Result<TwinModel> {
    if train.is_empty() {
        return Err(Error::invalid("cannot fit a twin model on an empty dataset"));
    }
    let scaler = match learner {
        LearnerConfig::Mlp(_) => fit_scaler_with_target(train)?,
        _ => fit_scaler(train)?,
    };
    let scaled = scaler.transform(train);
    let paired = build_pairs(&scaled, strategy, seeds::derive(seed, STREAM_PAIRS))?;

    let val_pairs = match (learner, validation) {
        (LearnerConfig::Mlp(_), Some(val)) => {
            if val.feature_count() != train.feature_count() {
                return Err(Error::invalid("validation feature width mismatch"));
            }
            if val.is_empty() {
                None
            } else {
                let val_scaled = scaler.transform(val);
                Some(build_validation_pairs(
                    &scaled,
                    &val_scaled,
                    strategy,
                    seeds::derive(seed, STREAM_VAL),
                )?)
            }
        }
        _ => None,
    };

    let base = learners::fit(
        learner,
        &paired.pair_features,
        &paired.pair_targets,
        val_pairs.as_ref().map(|(x, y)| (x, y.as_slice())),
        seeds::derive(seed, STREAM_BASE),
    )?;

    Ok(TwinModel {
        base,
        anchor_features: scaled.features,
        anchor_targets: scaled.targets,
        augment: strategy.augment,
        scaler,
    })
}

/// Pair each validation row with training partners chosen like the training
/// strategy: all rows (full), k seeded draws (multiplier), or the m nearest
/// training rows. Single direction `(validation, train)`.
fn build_validation_pairs(
    train: &Dataset,
    validation: &Dataset,
    strategy: &PairingStrategy,
    seed: u64,
) -> Result<(Matrix, Vec<f64>)> {
    let n = train.len();
    let width = train.feature_count() * if strategy.augment { 3 } else { 2 };
    let mut features = Matrix::zeros(0, width);
    let mut targets = Vec::new();
    let mut rng = seeds::rng(seed);
    let mut buf = Vec::with_capacity(width);
    for (v, vrow) in validation.features.iter_rows().enumerate() {
        let partners: Vec<usize> = match strategy.mode {
            PairMode::Full => (0..n).collect(),
            PairMode::Multiplier(k) => {
                let mut idx = sample(&mut rng, n, k.min(n)).into_vec();
                idx.sort_unstable();
                idx
            }
            PairMode::NearestNeighbors(m) => pairing::nearest_neighbors(vrow, &train.features, m)?,
        };
        for t in partners {
            assemble_pair_features(&mut buf, vrow, train.features.row(t), strategy.augment);
            features.push_row(&buf);
            targets.push(validation.targets[v] - train.targets[t]);
        }
    }
    Ok((features, targets))
}

fn anchor_indices(tm: &TwinModel, scaled_query: &[f64], policy: &AnchorPolicy) -> Result<Vec<usize>> {
    let n = tm.anchor_count();
    let indices = match policy {
        AnchorPolicy::All => (0..n).collect(),
        AnchorPolicy::FixedSubset(idx) => {
            if let Some(&bad) = idx.iter().find(|&&i| i >= n) {
                return Err(Error::invalid(format!(
                    "anchor index {bad} out of range for {n} anchors"
                )));
            }
            idx.clone()
        }
        AnchorPolicy::Nearest(m) => pairing::nearest_neighbors(scaled_query, &tm.anchor_features, *m)?,
    };
    if indices.is_empty() {
        return Err(Error::invalid("anchor selection is empty"));
    }
    Ok(indices)
}

fn predict_impl(
    tm: &TwinModel,
    query: &[f64],
    policy: &AnchorPolicy,
    symmetrize: bool,
) -> Result<TwinPrediction> {
    if query.len() != tm.feature_count() {
        return Err(Error::invalid(format!(
            "query width {} does not match the trained width {}",
            query.len(),
            tm.feature_count()
        )));
    }
    let q = tm.scaler.transform_row(query);
    let anchors = anchor_indices(tm, &q, policy)?;

    // One batched base evaluation: forward pairs first, then (when
    // symmetrizing) the reversed pairs in the same anchor order.
    let width = tm.feature_count() * if tm.augment { 3 } else { 2 };
    let mut rows = Matrix::zeros(0, width);
    let mut buf = Vec::with_capacity(width);
    for &a in &anchors {
        assemble_pair_features(&mut buf, &q, tm.anchor_features.row(a), tm.augment);
        rows.push_row(&buf);
    }
    if symmetrize {
        for &a in &anchors {
            assemble_pair_features(&mut buf, tm.anchor_features.row(a), &q, tm.augment);
            rows.push_row(&buf);
        }
    }
    let out = tm.base.predict(&rows)?;

    let k = anchors.len();
    let per_anchor_values: Vec<f64> = anchors
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let diff = if symmetrize {
                0.5 * out[i] - 0.5 * out[k + i]
            } else {
                out[i]
            };
            tm.scaler.inverse_target(diff + tm.anchor_targets[a])
        })
        .collect();

    let value = per_anchor_values.iter().sum::<f64>() / k as f64;
    let var = per_anchor_values
        .iter()
        .map(|v| (v - value) * (v - value))
        .sum::<f64>()
        / k as f64;
    Ok(TwinPrediction {
        value,
        per_anchor_values,
        uncertainty: var.sqrt(),
    })
}

/// Symmetrized twin prediction: per anchor `1/2 F(q,a) - 1/2 F(a,q) + y_a`.
pub fn twin_predict(tm: &TwinModel, query: &[f64], policy: &AnchorPolicy) -> Result<TwinPrediction> {
    predict_impl(tm, query, policy, true)
}

/// Single-direction variant: per anchor `F(q,a) + y_a`.
pub fn twin_predict_unsymmetrized(
    tm: &TwinModel,
    query: &[f64],
    policy: &AnchorPolicy,
) -> Result<TwinPrediction> {
    predict_impl(tm, query, policy, false)
}

/// Predict every row of `queries` under one policy.
pub fn twin_predict_batch(
    tm: &TwinModel,
    queries: &Matrix,
    policy: &AnchorPolicy,
) -> Result<Vec<TwinPrediction>> {
    queries
        .iter_rows()
        .map(|row| twin_predict(tm, row, policy))
        .collect()
}

/// The base model's estimate of `y(a) - y(b)` for two raw feature vectors,
/// in original target units.
pub fn pair_diff(tm: &TwinModel, a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != tm.feature_count() || b.len() != tm.feature_count() {
        return Err(Error::invalid("pair_diff inputs must match the trained width"));
    }
    let sa = tm.scaler.transform_row(a);
    let sb = tm.scaler.transform_row(b);
    let mut buf = Vec::with_capacity(tm.feature_count() * 3);
    assemble_pair_features(&mut buf, &sa, &sb, tm.augment);
    Ok(tm.scaler.inverse_target_diff(tm.base.predict_row(&buf)?))
}

/// Signed loop sum `F(x1,x2) + F(x2,x3) + F(x3,x1)`; zero for a perfectly
/// self-consistent model.
pub fn loop_violation(tm: &TwinModel, x1: &[f64], x2: &[f64], x3: &[f64]) -> Result<f64> {
    Ok(pair_diff(tm, x1, x2)? + pair_diff(tm, x2, x3)? + pair_diff(tm, x3, x1)?)
}

/// A single-anchor predictor `g_j(x) = F(x, x_j) + y_j`: an ordinary
/// one-input regressor distilled from the twin model.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnchoredPredictor {
    base: Model,
    anchor: Vec<f64>,
    anchor_target: f64,
    augment: bool,
    scaler: Scaler,
}

impl AnchoredPredictor {
    pub fn predict_row(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.anchor.len() {
            return Err(Error::invalid("query width mismatch"));
        }
        let q = self.scaler.transform_row(row);
        let mut buf = Vec::with_capacity(self.anchor.len() * 3);
        assemble_pair_features(&mut buf, &q, &self.anchor, self.augment);
        let diff = self.base.predict_row(&buf)?;
        Ok(self.scaler.inverse_target(diff + self.anchor_target))
    }

    pub fn predict(&self, features: &Matrix) -> Result<Vec<f64>> {
        features.iter_rows().map(|r| self.predict_row(r)).collect()
    }
}

/// Freeze one anchor into a plain predictor (unsymmetrized by definition).
pub fn materialize_anchored_predictor(tm: &TwinModel, anchor_index: usize) -> Result<AnchoredPredictor> {
    if anchor_index >= tm.anchor_count() {
        return Err(Error::invalid(format!(
            "anchor index {} out of range for {} anchors",
            anchor_index,
            tm.anchor_count()
        )));
    }
    Ok(AnchoredPredictor {
        base: tm.base.clone(),
        anchor: tm.anchor_features.row(anchor_index).to_vec(),
        anchor_target: tm.anchor_targets[anchor_index],
        augment: tm.augment,
        scaler: tm.scaler.clone(),
    })
}

const TWIN_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct TwinModelFile {
    format_version: u32,
    model: TwinModel,
}

/// Persist the base model together with its anchor table (f + 1 numbers per
/// anchor) in one versioned file.
pub fn save_twin_model(tm: &TwinModel, path: impl AsRef<std::path::Path>) -> Result<()> {
    let file = TwinModelFile {
        format_version: TWIN_FORMAT_VERSION,
        model: tm.clone(),
    };
    std::fs::write(path, serde_json::to_string(&file)?)?;
    Ok(())
}

pub fn load_twin_model(path: impl AsRef<std::path::Path>) -> Result<TwinModel> {
    let file: TwinModelFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    if file.format_version != TWIN_FORMAT_VERSION {
        return Err(Error::FormatVersion {
            found: file.format_version,
            expected: TWIN_FORMAT_VERSION,
        });
    }
    Ok(file.model)
}
