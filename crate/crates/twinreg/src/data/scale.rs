//! Feature and target standardization fitted on training rows only.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Per-feature z-scoring statistics, plus optional target statistics.
///
/// Standard deviations are population standard deviations; zero-variance
/// columns are clamped to a std of 1 so constant features map to zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub target_mean: Option<f64>,
    pub target_std: Option<f64>,
}

fn column_stats(values: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    let std = var.sqrt();
    (mean, if std > 0.0 { std } else { 1.0 })
}

pub fn fit_scaler(train: &Dataset) -> Result<Scaler> {
    if train.is_empty() {
        return Err(Error::invalid("cannot fit a scaler on an empty dataset"));
    }
    let n = train.len();
    let f = train.feature_count();
    let mut means = Vec::with_capacity(f);
    let mut stds = Vec::with_capacity(f);
    for j in 0..f {
        let col = (0..n).map(|i| train.features.get(i, j));
        let (mean, std) = column_stats(col, n);
        means.push(mean);
        stds.push(std);
    }
    Ok(Scaler {
        means,
        stds,
        target_mean: None,
        target_std: None,
    })
}

/// Like [`fit_scaler`] but also records target statistics, enabling target
/// z-scoring for learners that want it.
pub fn fit_scaler_with_target(train: &Dataset) -> Result<Scaler> {
    let mut scaler = fit_scaler(train)?;
    let (mean, std) = column_stats(train.targets.iter().copied(), train.len());
    scaler.target_mean = Some(mean);
    scaler.target_std = Some(std);
    Ok(scaler)
}

impl Scaler {
    /// A no-op scaler (zero means, unit stds, no target statistics).
    pub fn identity(cols: usize) -> Scaler {
        Scaler {
            means: vec![0.0; cols],
            stds: vec![1.0; cols],
            target_mean: None,
            target_std: None,
        }
    }

    pub fn transform_features(&self, features: &Matrix) -> Matrix {
        Matrix::from_fn(features.rows(), features.cols(), |i, j| {
            (features.get(i, j) - self.means[j]) / self.stds[j]
        })
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, v)| (v - self.means[j]) / self.stds[j])
            .collect()
    }

    pub fn inverse_features(&self, features: &Matrix) -> Matrix {
        Matrix::from_fn(features.rows(), features.cols(), |i, j| {
            features.get(i, j) * self.stds[j] + self.means[j]
        })
    }

    pub fn transform_targets(&self, targets: &[f64]) -> Vec<f64> {
        match (self.target_mean, self.target_std) {
            (Some(mean), Some(std)) => targets.iter().map(|t| (t - mean) / std).collect(),
            _ => targets.to_vec(),
        }
    }

    pub fn inverse_target(&self, value: f64) -> f64 {
        match (self.target_mean, self.target_std) {
            (Some(mean), Some(std)) => value * std + mean,
            _ => value,
        }
    }

    pub fn inverse_targets(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|&v| self.inverse_target(v)).collect()
    }

    /// Scale a pair-target (a difference of targets): only the std applies.
    pub fn transform_target_diff(&self, diff: f64) -> f64 {
        match self.target_std {
            Some(std) => diff / std,
            None => diff,
        }
    }

    /// Undo [`Self::transform_target_diff`].
    pub fn inverse_target_diff(&self, diff: f64) -> f64 {
        match self.target_std {
            Some(std) => diff * std,
            None => diff,
        }
    }

    /// Transform features, and targets when target statistics are present.
    pub fn transform(&self, dataset: &Dataset) -> Dataset {
        Dataset {
            name: dataset.name.clone(),
            features: self.transform_features(&dataset.features),
            targets: self.transform_targets(&dataset.targets),
        }
    }
}
