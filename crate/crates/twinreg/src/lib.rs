//! Twinned regression: solve a regression problem through its dual task of
//! predicting pairwise target differences, then recover point predictions by
//! averaging difference estimates against labeled anchor points.
//!
//! The crate provides
//!
//! - [`data`]: synthetic dataset generators, CSV ingestion, standardization
//!   and deterministic train/validation/test splits,
//! - [`pairing`]: construction of paired training sets (full, multiplier-limited
//!   and nearest-neighbor pairing, with optional difference-feature augmentation),
//! - [`learners`]: from-scratch base regressors (MLP, CART random forest with
//!   cross-validated grid search, k-NN) behind one fit/predict contract,
//! - [`twin`]: the twinned wrapper that trains a base learner on pairs and
//!   ensembles per-anchor predictions, including nearest-neighbor anchors,
//! - [`semisup`]: loop-consistency pseudo-labeling over unlabeled points with a
//!   single retraining pass,
//! - [`bench`]: a repeated-split experiment harness with RMSE/standard-error
//!   reporting, sweeps, storage accounting and a bias-variance diagnostic.
//!
//! Everything is deterministic per seed: identical inputs and seeds produce
//! identical models and identical reported metrics.

pub mod bench;
pub mod data;
pub mod error;
pub mod learners;
pub mod matrix;
pub mod pairing;
pub mod seeds;
pub mod semisup;
pub mod twin;

pub use error::{Error, Result};
pub use matrix::Matrix;
