//! Exhaustive hyperparameter search for the random forest, scored by
//! k-fold cross-validated RMSE.
//!
//! Folds are contiguous blocks of a seeded shuffle. Candidates are scored in
//! grid order (`max_depth` outermost, `n_estimators` innermost) and ties keep
//! the earlier candidate, so selection is deterministic.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::forest::{fit_forest, ForestModel, ForestParams};
use crate::matrix::Matrix;
use crate::seeds;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct RfGrid {
    pub max_depth: Vec<usize>,
    pub max_features: Vec<f64>,
    pub min_samples_leaf: Vec<usize>,
    pub min_samples_split: Vec<usize>,
    pub n_estimators: Vec<usize>,
    pub cv_folds: usize,
}

impl Default for RfGrid {
    /// The full reference grid: 5 * 3 * 3 * 3 * 3 = 405 candidates.
    fn default() -> Self {
        RfGrid {
            max_depth: vec![4, 8, 16, 32, 64],
            max_features: vec![0.33, 0.667, 1.0],
            min_samples_leaf: vec![1, 2, 5],
            min_samples_split: vec![2, 4, 8],
            n_estimators: vec![100, 300, 600],
            cv_folds: 5,
        }
    }
}

impl RfGrid {
    /// A desk-scale grid for quick runs; same shape, far fewer fits.
    pub fn small() -> RfGrid {
        RfGrid {
            max_depth: vec![8, 32],
            max_features: vec![1.0],
            min_samples_leaf: vec![1],
            min_samples_split: vec![2],
            n_estimators: vec![100],
            cv_folds: 5,
        }
    }

    pub fn singleton(p: ForestParams, cv_folds: usize) -> RfGrid {
        RfGrid {
            max_depth: vec![p.max_depth],
            max_features: vec![p.max_features],
            min_samples_leaf: vec![p.min_samples_leaf],
            min_samples_split: vec![p.min_samples_split],
            n_estimators: vec![p.n_estimators],
            cv_folds,
        }
    }

    /// All candidates, nested in declared axis order.
    pub fn candidates(&self) -> Vec<ForestParams> {
        let mut out = Vec::new();
        for &max_depth in &self.max_depth {
            for &max_features in &self.max_features {
                for &min_samples_leaf in &self.min_samples_leaf {
                    for &min_samples_split in &self.min_samples_split {
                        for &n_estimators in &self.n_estimators {
                            out.push(ForestParams {
                                n_estimators,
                                max_depth,
                                max_features,
                                min_samples_leaf,
                                min_samples_split,
                            });
                        }
                    }
                }
            }
        }
        out
    }

    fn validate(&self) -> Result<()> {
        if self.cv_folds < 2 {
            return Err(Error::invalid("cv_folds must be at least 2"));
        }
        let candidates = self.candidates();
        if candidates.is_empty() {
            return Err(Error::invalid("hyperparameter grid is empty"));
        }
        for c in &candidates {
            c.validate()?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct GridSearchResult {
    pub best: ForestParams,
    pub cv_rmse: f64,
    pub model: ForestModel,
    pub evaluated: usize,
}

const STREAM_FOLDS: u64 = 0x67726964_01;
const STREAM_FIT: u64 = 0x67726964_02;
const STREAM_REFIT: u64 = 0x67726964_03;

/// Contiguous fold blocks over a seeded shuffle of the row indices; the
/// first `n % k` folds absorb the remainder.
pub(crate) fn fold_assignments(n: usize, k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeds::rng(seeds::derive(seed, STREAM_FOLDS)));
    let base = n / k;
    let extra = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        folds.push(order[start..start + size].to_vec());
        start += size;
    }
    folds
}

pub fn grid_search_cv(
    grid: &RfGrid,
    features: &Matrix,
    targets: &[f64],
    seed: u64,
) -> Result<GridSearchResult> {
    grid.validate()?;
    let n = features.rows();
    if n < grid.cv_folds {
        return Err(Error::invalid(format!(
            "{} rows cannot be split into {} folds",
            n, grid.cv_folds
        )));
    }
    let k = grid.cv_folds;
    let folds = fold_assignments(n, k, seed);
    let candidates = grid.candidates();

    let jobs: Vec<(usize, usize)> = (0..candidates.len())
        .flat_map(|c| (0..k).map(move |f| (c, f)))
        .collect();
    let fold_rmse: Vec<f64> = jobs
        .par_iter()
        .map(|&(c, f)| {
            let test_idx = &folds[f];
            let train_idx: Vec<usize> = folds
                .iter()
                .enumerate()
                .filter(|&(g, _)| g != f)
                .flat_map(|(_, idx)| idx.iter().copied())
                .collect();
            let tx = features.select_rows(&train_idx);
            let ty: Vec<f64> = train_idx.iter().map(|&i| targets[i]).collect();
            let fit_seed = seeds::derive(seed, STREAM_FIT + (c * k + f) as u64);
            let model = fit_forest(&candidates[c], &tx, &ty, fit_seed);
            let sq_sum: f64 = test_idx
                .iter()
                .map(|&i| {
                    let r = model.predict_row(features.row(i)) - targets[i];
                    r * r
                })
                .sum();
            (sq_sum / test_idx.len() as f64).sqrt()
        })
        .collect();

    let mut best_c = 0;
    let mut best_rmse = f64::INFINITY;
    for c in 0..candidates.len() {
        let mean = fold_rmse[c * k..(c + 1) * k].iter().sum::<f64>() / k as f64;
        if mean < best_rmse {
            best_rmse = mean;
            best_c = c;
        }
    }

    let best = candidates[best_c];
    let model = fit_forest(&best, features, targets, seeds::derive(seed, STREAM_REFIT));
    Ok(GridSearchResult {
        best,
        cv_rmse: best_rmse,
        model,
        evaluated: candidates.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn full_grid_has_405_candidates() {
        assert_eq!(RfGrid::default().candidates().len(), 405);
    }

    #[test]
    fn fold_blocks_partition_the_rows() {
        let folds = fold_assignments(1599, 5, 7);
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![320, 320, 320, 320, 319]);
        let mut all: Vec<usize> = folds.into_iter().flatten().collect();
        all.sort_unstable();
        assert_eq!(all, (0..1599).collect::<Vec<_>>());
    }

    #[test]
    fn singleton_grid_selects_that_candidate() {
        let p = ForestParams {
            n_estimators: 10,
            max_depth: 3,
            max_features: 1.0,
            min_samples_leaf: 2,
            min_samples_split: 4,
        };
        let mut rng = seeds::rng(1);
        let x = Matrix::from_fn(40, 2, |_, _| rng.gen_range(-1.0..1.0f64));
        let y: Vec<f64> = x.iter_rows().map(|r| r[0] + r[1]).collect();
        let result = grid_search_cv(&RfGrid::singleton(p, 5), &x, &y, 3).unwrap();
        assert_eq!(result.best, p);
        assert_eq!(result.evaluated, 1);
    }

    #[test]
    fn tied_candidates_resolve_to_earliest_grid_order() {
        // A cleanly separable step function: every candidate scores an exact
        // CV RMSE of zero, so the first grid entry (smallest depth) wins.
        let n = 100;
        let x = Matrix::from_fn(n, 1, |i, _| if i % 2 == 0 { -1.0 } else { 1.0 });
        let y: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 0.0 } else { 1.0 }).collect();
        let grid = RfGrid {
            max_depth: vec![4, 8],
            max_features: vec![1.0],
            min_samples_leaf: vec![1],
            min_samples_split: vec![2],
            n_estimators: vec![20],
            cv_folds: 5,
        };
        let result = grid_search_cv(&grid, &x, &y, 11).unwrap();
        assert_eq!(result.best.max_depth, 4);
        assert_eq!(result.cv_rmse, 0.0);
    }

    #[test]
    fn fewer_rows_than_folds_rejected() {
        let x = Matrix::from_fn(3, 1, |i, _| i as f64);
        let y = vec![0.0; 3];
        assert!(grid_search_cv(&RfGrid::small(), &x, &y, 0).is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let mut rng = seeds::rng(9);
        let x = Matrix::from_fn(30, 2, |_, _| rng.gen_range(-1.0..1.0f64));
        let y: Vec<f64> = x.iter_rows().map(|r| r[0] * 2.0).collect();
        let grid = RfGrid {
            max_depth: vec![2, 4],
            max_features: vec![1.0],
            min_samples_leaf: vec![1],
            min_samples_split: vec![2],
            n_estimators: vec![5],
            cv_folds: 3,
        };
        let a = grid_search_cv(&grid, &x, &y, 21).unwrap();
        let b = grid_search_cv(&grid, &x, &y, 21).unwrap();
        assert_eq!(a.best, b.best);
        assert_eq!(a.cv_rmse, b.cv_rmse);
        assert_eq!(a.model, b.model);
    }
}
