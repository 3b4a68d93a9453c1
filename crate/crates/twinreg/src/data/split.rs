//! Deterministic train/validation/test splits.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::seeds;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SplitMode {
    /// Proportional split; fractions must sum to 1.
    Fractions {
        train: f64,
        validation: f64,
        test: f64,
    },
    /// Fixed train/test sizes drawn from the shuffled rows; no validation
    /// set. Remaining rows are left unused.
    Counts { train: usize, test: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub seed: u64,
    pub mode: SplitMode,
}

impl SplitSpec {
    pub fn fractions(seed: u64, train: f64, validation: f64, test: f64) -> Result<Self> {
        let sum = train + validation + test;
        if train < 0.0 || validation < 0.0 || test < 0.0 {
            return Err(Error::invalid("split fractions must be nonnegative"));
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "split fractions must sum to 1, got {sum}"
            )));
        }
        Ok(SplitSpec {
            seed,
            mode: SplitMode::Fractions {
                train,
                validation,
                test,
            },
        })
    }

    pub fn counts(seed: u64, train: usize, test: usize) -> Self {
        SplitSpec {
            seed,
            mode: SplitMode::Counts { train, test },
        }
    }
}

#[derive(Clone, Debug)]
pub struct Split {
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
    pub train_indices: Vec<usize>,
    pub validation_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

/// Shuffle row indices with the spec's seed and cut the requested segments.
/// Index sets are disjoint; the same seed reproduces them exactly.
pub fn split(dataset: &Dataset, spec: &SplitSpec) -> Result<Split> {
    let n = dataset.len();
    let (n_train, n_val, n_test) = match spec.mode {
        SplitMode::Fractions {
            train,
            validation,
            test,
        } => {
            // re-validate: specs can arrive via config files
            SplitSpec::fractions(spec.seed, train, validation, test)?;
            let n_train = (n as f64 * train).round() as usize;
            let n_val = ((n as f64 * validation).round() as usize).min(n - n_train.min(n));
            let n_train = n_train.min(n);
            (n_train, n_val, n - n_train - n_val)
        }
        SplitMode::Counts { train, test } => {
            if train + test > n {
                return Err(Error::invalid(format!(
                    "requested {train}+{test} rows from a dataset of {n}"
                )));
            }
            (train, 0, test)
        }
    };

    let mut indices: Vec<usize> = (0..n).collect();
    indices.shuffle(&mut seeds::rng(seeds::derive(spec.seed, seeds::STREAM_SPLIT)));

    let train_indices = indices[..n_train].to_vec();
    let validation_indices = indices[n_train..n_train + n_val].to_vec();
    let test_indices = indices[n_train + n_val..n_train + n_val + n_test].to_vec();

    Ok(Split {
        train: dataset.select(&train_indices),
        validation: dataset.select(&validation_indices),
        test: dataset.select(&test_indices),
        train_indices,
        validation_indices,
        test_indices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::generate_test_function;
    use std::collections::HashSet;

    #[test]
    fn fraction_sizes() {
        let d = generate_test_function(1000, 1, 0.0).unwrap();
        let s = split(&d, &SplitSpec::fractions(3, 0.7, 0.1, 0.2).unwrap()).unwrap();
        assert_eq!(s.train.len(), 700);
        assert_eq!(s.validation.len(), 100);
        assert_eq!(s.test.len(), 200);
    }

    #[test]
    fn count_mode_has_empty_validation() {
        let d = generate_test_function(1599, 1, 0.0).unwrap();
        let s = split(&d, &SplitSpec::counts(5, 100, 100)).unwrap();
        assert_eq!(s.train.len(), 100);
        assert_eq!(s.test.len(), 100);
        assert!(s.validation.is_empty());
    }

    #[test]
    fn counts_exceeding_n_rejected() {
        let d = generate_test_function(50, 1, 0.0).unwrap();
        assert!(split(&d, &SplitSpec::counts(5, 40, 20)).is_err());
    }

    #[test]
    fn bad_fractions_rejected() {
        assert!(SplitSpec::fractions(0, 0.5, 0.1, 0.2).is_err());
        assert!(SplitSpec::fractions(0, 0.9, -0.1, 0.2).is_err());
    }

    #[test]
    fn same_seed_reproduces_indices_and_sets_are_disjoint() {
        let d = generate_test_function(233, 1, 0.0).unwrap();
        let spec = SplitSpec::fractions(17, 0.7, 0.1, 0.2).unwrap();
        let a = split(&d, &spec).unwrap();
        let b = split(&d, &spec).unwrap();
        assert_eq!(a.train_indices, b.train_indices);
        assert_eq!(a.validation_indices, b.validation_indices);
        assert_eq!(a.test_indices, b.test_indices);

        let mut seen = HashSet::new();
        for i in a
            .train_indices
            .iter()
            .chain(&a.validation_indices)
            .chain(&a.test_indices)
        {
            assert!(seen.insert(*i), "index {i} appears twice");
        }
        assert_eq!(seen.len(), 233);
    }
}
