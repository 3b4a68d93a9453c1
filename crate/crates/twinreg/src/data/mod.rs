//! Datasets: synthetic generators, CSV ingestion, standardization and
//! deterministic splits.
//!
//! A [`Dataset`] is immutable after construction; every pipeline stage
//! consumes it by reference and produces new datasets.

mod csv_io;
mod scale;
mod split;
mod synthetic;

pub use csv_io::{load_csv, write_csv, TargetColumn};
pub use scale::{fit_scaler, fit_scaler_with_target, Scaler};
pub use split::{split, Split, SplitMode, SplitSpec};
pub use synthetic::{
    generate_rcl, generate_rcl_in, generate_test_function, generate_test_function_in,
    generate_wheatstone, generate_wheatstone_in, rcl_current, test_function, wheatstone_voltage,
    RclDomain, TfDomain, WsbDomain,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// A feature matrix with aligned targets.
///
/// Invariants, enforced on construction: the row count of `features` equals
/// the length of `targets`, and every stored value is finite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub features: Matrix,
    pub targets: Vec<f64>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, features: Matrix, targets: Vec<f64>) -> Result<Self> {
        if features.rows() != targets.len() {
            return Err(Error::invalid(format!(
                "{} feature rows vs {} targets",
                features.rows(),
                targets.len()
            )));
        }
        if !features.all_finite() || targets.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("dataset contains non-finite values"));
        }
        Ok(Dataset {
            name: name.into(),
            features,
            targets,
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn feature_count(&self) -> usize {
        self.features.cols()
    }

    /// Sub-dataset with the given rows, in the given order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            features: self.features.select_rows(indices),
            targets: indices.iter().map(|&i| self.targets[i]).collect(),
        }
    }

    /// Mean of the targets; 0 for an empty dataset.
    pub fn target_mean(&self) -> f64 {
        if self.targets.is_empty() {
            0.0
        } else {
            self.targets.iter().sum::<f64>() / self.targets.len() as f64
        }
    }
}
