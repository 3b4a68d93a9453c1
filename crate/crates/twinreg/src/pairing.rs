//! Paired training sets: every pair of rows (i, j) becomes one training row
//! whose target is the difference `targets[i] - targets[j]`.
//!
//! Three pairing modes are supported: the full n^2 ordered set, a
//! multiplier-limited random subset (k partners per row), and symmetrized
//! nearest-neighbor pairs. Pair features are the concatenation of both rows,
//! optionally augmented with their componentwise difference.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::matrix::{squared_distance, Matrix};
use crate::seeds;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum PairMode {
    /// All n^2 ordered pairs, self-pairs included.
    Full,
    /// `k` partners per row, drawn without replacement from all rows
    /// (self included); `k = n` reproduces the full set.
    Multiplier(usize),
    /// For each row i, the pairs {(i,j), (j,i)} for the m nearest neighbors
    /// j of i (self excluded), de-duplicated.
    NearestNeighbors(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairingStrategy {
    pub mode: PairMode,
    /// Append `x_i - x_j` to the pair features (2f -> 3f columns).
    pub augment: bool,
}

impl PairingStrategy {
    pub fn full() -> Self {
        PairingStrategy {
            mode: PairMode::Full,
            augment: false,
        }
    }

    pub fn multiplier(k: usize) -> Self {
        PairingStrategy {
            mode: PairMode::Multiplier(k),
            augment: false,
        }
    }

    pub fn nearest_neighbors(m: usize) -> Self {
        PairingStrategy {
            mode: PairMode::NearestNeighbors(m),
            augment: false,
        }
    }

    pub fn with_augment(mut self, augment: bool) -> Self {
        self.augment = augment;
        self
    }

    fn validate(&self, n: usize) -> Result<()> {
        match self.mode {
            PairMode::Full => Ok(()),
            PairMode::Multiplier(k) => {
                if k == 0 {
                    Err(Error::invalid("multiplier must be at least 1"))
                } else if k > n {
                    Err(Error::invalid(format!(
                        "multiplier {k} exceeds the number of rows {n}"
                    )))
                } else {
                    Ok(())
                }
            }
            PairMode::NearestNeighbors(m) => {
                if m == 0 {
                    Err(Error::invalid("neighbor count must be at least 1"))
                } else if m >= n {
                    Err(Error::invalid(format!(
                        "neighbor count {m} must be below the number of rows {n}"
                    )))
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// Ordered row-index pairs with their concatenated features and difference
/// targets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairedDataset {
    pub pair_index: Vec<(usize, usize)>,
    pub pair_features: Matrix,
    pub pair_targets: Vec<f64>,
    pub augmented: bool,
    pub base_feature_count: usize,
}

impl PairedDataset {
    pub fn len(&self) -> usize {
        self.pair_targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pair_targets.is_empty()
    }

    /// Append one pair row given raw feature slices and a target.
    pub fn push_pair(&mut self, left: &[f64], right: &[f64], target: f64) {
        let mut row = Vec::with_capacity(self.pair_features.cols());
        assemble_pair_features(&mut row, left, right, self.augmented);
        self.pair_features.push_row(&row);
        self.pair_targets.push(target);
    }
}

/// Write the features of the ordered pair (left, right) into `out`:
/// `[left, right]`, plus `left - right` when `augment` is set.
pub fn assemble_pair_features(out: &mut Vec<f64>, left: &[f64], right: &[f64], augment: bool) {
    out.clear();
    out.extend_from_slice(left);
    out.extend_from_slice(right);
    if augment {
        for (a, b) in left.iter().zip(right.iter()) {
            out.push(a - b);
        }
    }
}

/// Build the paired training set for `train` under `strategy`.
///
/// Output ordering is fixed: row-major by i, partners in ascending index
/// order, so the full and multiplier modes agree exactly when k = n.
/// Only the multiplier mode consumes the seed.
pub fn build_pairs(
    train: &Dataset,
    strategy: &PairingStrategy,
    seed: u64,
) -> Result<PairedDataset> {
    let n = train.len();
    if n == 0 {
        return Err(Error::invalid("cannot pair an empty dataset"));
    }
    strategy.validate(n)?;

    let pair_index: Vec<(usize, usize)> = match strategy.mode {
        PairMode::Full => {
            let mut pairs = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    pairs.push((i, j));
                }
            }
            pairs
        }
        PairMode::Multiplier(k) => {
            let mut rng = seeds::rng(seeds::derive(seed, seeds::STREAM_PAIRING));
            let all: Vec<usize> = (0..n).collect();
            let mut pairs = Vec::with_capacity(k * n);
            for i in 0..n {
                let mut partners: Vec<usize> =
                    all.choose_multiple(&mut rng, k).copied().collect();
                partners.sort_unstable();
                pairs.extend(partners.into_iter().map(|j| (i, j)));
            }
            pairs
        }
        PairMode::NearestNeighbors(m) => {
            let mut pairs = Vec::with_capacity(2 * m * n);
            for i in 0..n {
                for &j in &nearest_neighbors_excluding(train.features.row(i), &train.features, m, Some(i))? {
                    pairs.push((i, j));
                    pairs.push((j, i));
                }
            }
            pairs.sort_unstable();
            pairs.dedup();
            pairs
        }
    };

    let f = train.feature_count();
    let cols = if strategy.augment { 3 * f } else { 2 * f };
    let mut features = Matrix::zeros(0, cols);
    let mut targets = Vec::with_capacity(pair_index.len());
    let mut row = Vec::with_capacity(cols);
    for &(i, j) in &pair_index {
        assemble_pair_features(
            &mut row,
            train.features.row(i),
            train.features.row(j),
            strategy.augment,
        );
        features.push_row(&row);
        targets.push(train.targets[i] - train.targets[j]);
    }

    Ok(PairedDataset {
        pair_index,
        pair_features: features,
        pair_targets: targets,
        augmented: strategy.augment,
        base_feature_count: f,
    })
}

/// Indices of the `m` rows of `features` closest to `query` in Euclidean
/// distance, ascending by distance; ties break toward the lower index.
pub fn nearest_neighbors(query: &[f64], features: &Matrix, m: usize) -> Result<Vec<usize>> {
    nearest_neighbors_excluding(query, features, m, None)
}

fn nearest_neighbors_excluding(
    query: &[f64],
    features: &Matrix,
    m: usize,
    exclude: Option<usize>,
) -> Result<Vec<usize>> {
    let n = features.rows() - usize::from(exclude.is_some());
    if m == 0 || m > n {
        return Err(Error::invalid(format!(
            "neighbor count {m} out of range for {n} candidate rows"
        )));
    }
    let mut order: Vec<(f64, usize)> = (0..features.rows())
        .filter(|&i| Some(i) != exclude)
        .map(|i| (squared_distance(query, features.row(i)), i))
        .collect();
    // stable under distance ties: the index is the secondary key
    order.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(order.into_iter().take(m).map(|(_, i)| i).collect())
}
