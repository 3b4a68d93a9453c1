//! k-nearest-neighbor regression by brute-force Euclidean search.
//!
//! Neighbor lookup delegates to [`crate::pairing::nearest_neighbors`] so the
//! neighbor sets (ordering and tie-breaks included) are identical to the ones
//! used when pairing queries with anchors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::pairing;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct KnnConfig {
    pub k: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub features: Matrix,
    pub targets: Vec<f64>,
}

impl KnnModel {
    pub fn fit(config: &KnnConfig, features: &Matrix, targets: &[f64]) -> Result<KnnModel> {
        if config.k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        if config.k > features.rows() {
            return Err(Error::invalid(format!(
                "k = {} exceeds the {} training rows",
                config.k,
                features.rows()
            )));
        }
        Ok(KnnModel {
            k: config.k,
            features: features.clone(),
            targets: targets.to_vec(),
        })
    }

    /// Mean target over the k nearest training rows, summed in
    /// ascending-distance order.
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let neighbors = pairing::nearest_neighbors(row, &self.features, self.k)
            .expect("k is validated against the table size at fit time");
        let sum: f64 = neighbors.iter().map(|&i| self.targets[i]).sum();
        sum / self.k as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> KnnModel {
        let features = Matrix::from_rows(&[
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![5.0, 5.0],
        ])
        .unwrap();
        KnnModel::fit(&KnnConfig { k: 2 }, &features, &[1.0, 2.0, 3.0, 10.0]).unwrap()
    }

    #[test]
    fn mean_of_two_nearest() {
        let model = fixture();
        // Nearest to (0.1, 0.0): rows 0 and 1.
        assert_eq!(model.predict_row(&[0.1, 0.0]), 1.5);
        // Nearest to (5, 5): row 3, then row 1 or 2 (tie broken to row 1).
        assert_eq!(model.predict_row(&[5.0, 5.0]), 6.0);
    }

    #[test]
    fn k_equal_n_returns_global_mean() {
        let features = Matrix::from_rows(&[vec![0.0], vec![3.0], vec![-1.0], vec![7.0]]).unwrap();
        let targets = [2.0, 4.0, 6.0, 8.0];
        let model = KnnModel::fit(&KnnConfig { k: 4 }, &features, &targets).unwrap();
        let mean = targets.iter().sum::<f64>() / 4.0;
        for q in [-10.0, 0.0, 2.5, 100.0] {
            assert!((model.predict_row(&[q]) - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn k_larger_than_n_rejected() {
        let features = Matrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        assert!(KnnModel::fit(&KnnConfig { k: 3 }, &features, &[0.0, 1.0]).is_err());
        assert!(KnnModel::fit(&KnnConfig { k: 0 }, &features, &[0.0, 1.0]).is_err());
    }
}
