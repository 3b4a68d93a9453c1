//! Storage accounting: a direct-network ensemble stores one full network
//! per member, while a twin network turns every extra anchor into an extra
//! ensemble member for the price of one stored row — f coordinates plus a
//! target. This module tabulates both costs as a function of ensemble size.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::{count_parameters, MlpKind};

/// Parameter totals for one ensemble size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StorageRow {
    pub ensemble_size: usize,
    /// E independent direct networks.
    pub ann_parameters: u64,
    /// One twin network plus E anchors of f + 1 values each.
    pub tnnr_parameters: u64,
}

/// Storage for one direct network on f features.
pub fn ann_parameters(features: usize, hidden: &[usize]) -> u64 {
    count_parameters(MlpKind::Plain, features, hidden)
}

/// Storage for one twin network with `anchors` stored anchors.
pub fn tnnr_parameters(features: usize, hidden: &[usize], anchors: usize) -> u64 {
    count_parameters(MlpKind::Twin, features, hidden) + (anchors * (features + 1)) as u64
}

/// Tabulate direct-network vs twin-network storage per ensemble size. On
/// the twin side the ensemble members are the anchors themselves, so the
/// marginal member costs f + 1 stored values instead of a whole network.
pub fn storage_report(
    features: usize,
    hidden: &[usize],
    ensemble_sizes: &[usize],
) -> Result<Vec<StorageRow>> {
    if features == 0 {
        return Err(Error::invalid("feature count must be at least 1"));
    }
    if ensemble_sizes.is_empty() {
        return Err(Error::invalid("need at least one ensemble size"));
    }
    if ensemble_sizes.contains(&0) {
        return Err(Error::invalid("ensemble sizes must be at least 1"));
    }
    let ann_one = ann_parameters(features, hidden);
    Ok(ensemble_sizes
        .iter()
        .map(|&e| StorageRow {
            ensemble_size: e,
            ann_parameters: (e as u64) * ann_one,
            tnnr_parameters: tnnr_parameters(features, hidden, e),
        })
        .collect())
}
