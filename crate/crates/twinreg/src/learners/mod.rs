//! Base regressors behind one fit/predict contract.
//!
//! Three from-scratch learners are provided: a multilayer perceptron trained
//! by backpropagation, a CART random forest selected by cross-validated grid
//! search, and k-nearest-neighbor regression. A fitted [`Model`] is immutable
//! and prediction is deterministic.

mod forest;
mod grid;
mod knn;
mod mlp;

pub use forest::{fit_forest, ForestModel, ForestParams, Tree};
pub use grid::{grid_search_cv, GridSearchResult, RfGrid};
pub use knn::{KnnConfig, KnnModel};
pub use mlp::{
    fit_mlp, loss as mlp_loss, loss_and_gradient as mlp_loss_and_gradient, MlpConfig, MlpModel,
    OptimizerKind, TrainLog,
};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum LearnerConfig {
    Mlp(MlpConfig),
    /// Random forest selected over a hyperparameter grid (a singleton grid
    /// fits exactly one configuration).
    RandomForest(RfGrid),
    Knn(KnnConfig),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum Model {
    Mlp(MlpModel),
    Forest(ForestModel),
    Knn(KnnModel),
}

fn check_training_inputs(features: &Matrix, targets: &[f64]) -> Result<()> {
    if features.rows() == 0 {
        return Err(Error::invalid("cannot fit on an empty training set"));
    }
    if features.rows() != targets.len() {
        return Err(Error::invalid(format!(
            "{} feature rows vs {} targets",
            features.rows(),
            targets.len()
        )));
    }
    if !features.all_finite() || targets.iter().any(|t| !t.is_finite()) {
        return Err(Error::invalid("training data contains non-finite values"));
    }
    Ok(())
}

/// Fit a model. `validation` is used by the MLP for early stopping; when
/// absent, the MLP carves a held-out tenth from the given rows.
pub fn fit(
    config: &LearnerConfig,
    features: &Matrix,
    targets: &[f64],
    validation: Option<(&Matrix, &[f64])>,
    seed: u64,
) -> Result<Model> {
    check_training_inputs(features, targets)?;
    match config {
        LearnerConfig::Mlp(cfg) => {
            let (model, _log) = fit_mlp(cfg, features, targets, validation, seed)?;
            Ok(Model::Mlp(model))
        }
        LearnerConfig::RandomForest(grid) => {
            let result = grid_search_cv(grid, features, targets, seed)?;
            Ok(Model::Forest(result.model))
        }
        LearnerConfig::Knn(cfg) => Ok(Model::Knn(KnnModel::fit(cfg, features, targets)?)),
    }
}

/// Refit on new data reusing the hyperparameters already resolved in
/// `prior` (the forest keeps its selected grid point; no re-search).
pub fn refit_resolved(
    prior: &Model,
    config: &LearnerConfig,
    features: &Matrix,
    targets: &[f64],
    validation: Option<(&Matrix, &[f64])>,
    seed: u64,
) -> Result<Model> {
    check_training_inputs(features, targets)?;
    match prior {
        Model::Forest(f) => Ok(Model::Forest(fit_forest(
            &f.params, features, targets, seed,
        ))),
        Model::Mlp(_) => match config {
            LearnerConfig::Mlp(cfg) => {
                let (model, _log) = fit_mlp(cfg, features, targets, validation, seed)?;
                Ok(Model::Mlp(model))
            }
            _ => Err(Error::invalid(
                "config does not match the prior MLP model kind",
            )),
        },
        Model::Knn(k) => Ok(Model::Knn(KnnModel::fit(
            &KnnConfig { k: k.k },
            features,
            targets,
        )?)),
    }
}

impl Model {
    pub fn input_width(&self) -> usize {
        match self {
            Model::Mlp(m) => m.input_width(),
            Model::Forest(f) => f.feature_count,
            Model::Knn(k) => k.features.cols(),
        }
    }

    fn check_width(&self, cols: usize) -> Result<()> {
        if cols != self.input_width() {
            return Err(Error::invalid(format!(
                "feature width {} does not match the trained width {}",
                cols,
                self.input_width()
            )));
        }
        Ok(())
    }

    pub fn predict_row(&self, row: &[f64]) -> Result<f64> {
        self.check_width(row.len())?;
        Ok(match self {
            Model::Mlp(m) => m.forward_row(row),
            Model::Forest(f) => f.predict_row(row),
            Model::Knn(k) => k.predict_row(row),
        })
    }

    pub fn predict(&self, features: &Matrix) -> Result<Vec<f64>> {
        self.check_width(features.cols())?;
        Ok(match self {
            Model::Mlp(m) => m.forward_batch(features),
            Model::Forest(f) => features.iter_rows().map(|r| f.predict_row(r)).collect(),
            Model::Knn(k) => features.iter_rows().map(|r| k.predict_row(r)).collect(),
        })
    }

    /// Stored parameters: weights and biases for the MLP, split and leaf
    /// values for the forest, the retained table for k-NN.
    pub fn parameter_count(&self) -> u64 {
        match self {
            Model::Mlp(m) => m.parameter_count(),
            Model::Forest(f) => f.parameter_count(),
            Model::Knn(k) => (k.features.rows() * (k.features.cols() + 1)) as u64,
        }
    }
}

/// Input-width convention for parameter accounting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MlpKind {
    /// Direct regression: input width = feature count.
    Plain,
    /// Pair input: both rows concatenated, width 2f.
    Twin,
    /// Pair input plus the difference block, width 3f.
    TwinAugmented,
}

/// Number of stored parameters of a fully-connected net with the given
/// hidden widths and a single linear output: sum over layers of
/// `in * out + out`.
pub fn count_parameters(kind: MlpKind, feature_count: usize, hidden: &[usize]) -> u64 {
    let input = match kind {
        MlpKind::Plain => feature_count,
        MlpKind::Twin => 2 * feature_count,
        MlpKind::TwinAugmented => 3 * feature_count,
    };
    let mut total = 0u64;
    let mut prev = input as u64;
    for &h in hidden {
        total += prev * h as u64 + h as u64;
        prev = h as u64;
    }
    total + prev + 1
}

const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    model: Model,
}

pub fn save_model(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    let file = ModelFile {
        format_version: MODEL_FORMAT_VERSION,
        model: model.clone(),
    };
    let json = serde_json::to_string(&file)?;
    std::fs::write(path, json)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    let json = std::fs::read_to_string(path)?;
    let file: ModelFile = serde_json::from_str(&json)?;
    if file.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::FormatVersion {
            found: file.format_version,
            expected: MODEL_FORMAT_VERSION,
        });
    }
    Ok(file.model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_counts_match_layer_summation() {
        // independent oracle: accumulate (in*out + out) layer by layer
        fn oracle(input: usize, hidden: &[usize]) -> u64 {
            let mut dims = vec![input];
            dims.extend_from_slice(hidden);
            dims.push(1);
            dims.windows(2).map(|w| (w[0] * w[1] + w[1]) as u64).sum()
        }
        assert_eq!(count_parameters(MlpKind::Plain, 13, &[128, 128]), oracle(13, &[128, 128]));
        assert_eq!(count_parameters(MlpKind::Plain, 13, &[128, 128]), 18433);
        assert_eq!(count_parameters(MlpKind::Twin, 13, &[128, 128]), oracle(26, &[128, 128]));
        assert_eq!(count_parameters(MlpKind::Twin, 13, &[128, 128]), 20097);
        assert_eq!(count_parameters(MlpKind::TwinAugmented, 13, &[128, 128]), oracle(39, &[128, 128]));
        // linear model: weights + bias
        assert_eq!(count_parameters(MlpKind::Plain, 4, &[]), 5);
    }

    #[test]
    fn empty_training_set_rejected() {
        let cfg = LearnerConfig::Knn(KnnConfig { k: 1 });
        let err = fit(&cfg, &Matrix::zeros(0, 2), &[], None, 0).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn non_finite_training_data_rejected() {
        let cfg = LearnerConfig::Knn(KnnConfig { k: 1 });
        let m = Matrix::from_rows(&[vec![f64::NAN]]).unwrap();
        assert!(fit(&cfg, &m, &[1.0], None, 0).is_err());
    }
}
