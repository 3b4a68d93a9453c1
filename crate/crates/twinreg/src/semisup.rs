//! Semi-supervised twinned regression by loop consistency.
//!
//! Closed loops through one labeled and two unlabeled points let a fitted
//! pair model label its own inconsistencies: the loop sum
//! `a = M(xi,xj) + M(xj,xk) + M(xk,xi)` would vanish for a perfect model,
//! so each predicted difference is corrected by `-lambda * a` and the three
//! corrected pairs join the training set for a single retraining pass. The
//! base learner's hyperparameters are resolved during the supervised step
//! and carried forward unchanged.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::learners::{self, LearnerConfig};
use crate::matrix::Matrix;
use crate::pairing::{build_pairs, PairingStrategy};
use crate::seeds;
use crate::twin::{pair_diff, twin_fit, TwinModel};

const STREAM_SUPERVISED: u64 = 0x73656d69_01;
const STREAM_LOOPS: u64 = 0x73656d69_02;
const STREAM_REFIT: u64 = 0x73656d69_03;

/// One sampled loop: a labeled row and two distinct unlabeled rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopSample {
    pub labeled: usize,
    pub unlabeled_j: usize,
    pub unlabeled_k: usize,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct SemiSupConfig {
    /// Loop weight: how strongly proposed labels are pushed toward loop
    /// consistency. 0 is pure self-training; 1/3 projects each loop onto
    /// consistent labels.
    pub lambda: f64,
    /// Number of loops; defaults to `max(1, labeled / 3)`.
    pub loop_count: Option<usize>,
    /// Use the test features as the unlabeled pool (the caller wires this;
    /// the fit itself just consumes whatever pool it is given).
    pub transductive: bool,
}

impl Default for SemiSupConfig {
    fn default() -> Self {
        SemiSupConfig {
            lambda: 1.0,
            loop_count: None,
            transductive: true,
        }
    }
}

pub fn default_loop_count(labeled: usize) -> usize {
    (labeled / 3).max(1)
}

/// Uniformly sample `count` loops: the labeled index with replacement, the
/// two unlabeled indices without replacement within the loop.
pub fn sample_loops(
    n_labeled: usize,
    n_unlabeled: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<LoopSample>> {
    if n_labeled == 0 {
        return Err(Error::invalid("no labeled rows to sample loops from"));
    }
    if n_unlabeled < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 unlabeled rows for a loop, got {n_unlabeled}"
        )));
    }
    if count == 0 {
        return Err(Error::invalid("loop count must be at least 1"));
    }
    let mut rng = seeds::rng(seed);
    Ok((0..count)
        .map(|_| {
            let labeled = rng.gen_range(0..n_labeled);
            let jk = sample(&mut rng, n_unlabeled, 2);
            LoopSample {
                labeled,
                unlabeled_j: jk.index(0),
                unlabeled_k: jk.index(1),
            }
        })
        .collect())
}

/// Corrected pair labels for one loop, in original target units:
/// `a = M(xi,xj) + M(xj,xk) + M(xk,xi)`, each prediction reduced by
/// `lambda * a`.
pub fn propose_loop_labels(
    tm: &TwinModel,
    xi: &[f64],
    xj: &[f64],
    xk: &[f64],
    lambda: f64,
) -> Result<(f64, f64, f64)> {
    let m_ij = pair_diff(tm, xi, xj)?;
    let m_jk = pair_diff(tm, xj, xk)?;
    let m_ki = pair_diff(tm, xk, xi)?;
    let a = m_ij + m_jk + m_ki;
    Ok((m_ij - lambda * a, m_jk - lambda * a, m_ki - lambda * a))
}

/// What the fit did, for diagnostics and tests.
#[derive(Clone, Debug, Serialize)]
pub struct SemiSupReport {
    pub n_loops: usize,
    pub labeled_pairs: usize,
    pub appended_pairs: usize,
    pub loops: Vec<LoopSample>,
}

/// Algorithm: (1) supervised twin fit on the full labeled pairing with
/// feature augmentation; (2) sample loops; (3) propose corrected labels;
/// (4) append three pair rows per loop; (5) refit once, reusing the
/// hyperparameters resolved in step 1.
pub fn semisup_fit(
    learner: &LearnerConfig,
    labeled: &Dataset,
    unlabeled: &Matrix,
    cfg: &SemiSupConfig,
    seed: u64,
) -> Result<(TwinModel, SemiSupReport)> {
    if labeled.is_empty() {
        return Err(Error::invalid("labeled dataset is empty"));
    }
    if unlabeled.cols() != labeled.feature_count() {
        return Err(Error::invalid("unlabeled feature width mismatch"));
    }
    if !unlabeled.all_finite() {
        return Err(Error::invalid("unlabeled features contain non-finite values"));
    }
    if !(cfg.lambda.is_finite() && cfg.lambda >= 0.0) {
        return Err(Error::invalid("lambda must be finite and nonnegative"));
    }

    let strategy = PairingStrategy::full().with_augment(true);
    let supervised = twin_fit(
        learner,
        labeled,
        &strategy,
        None,
        seeds::derive(seed, STREAM_SUPERVISED),
    )?;

    let n_loops = match cfg.loop_count {
        Some(0) => return Err(Error::invalid("loop count must be at least 1")),
        Some(c) => c,
        None => default_loop_count(labeled.len()),
    };
    let loops = sample_loops(
        labeled.len(),
        unlabeled.rows(),
        n_loops,
        seeds::derive(seed, STREAM_LOOPS),
    )?;

    // Rebuild the labeled pair set in the base model's space (full pairing is
    // deterministic, so this matches what the supervised fit trained on),
    // then append the loop pairs.
    let scaled = supervised.scaler.transform(labeled);
    let mut paired = build_pairs(&scaled, &strategy, 0)?;
    let labeled_pairs = paired.len();
    let unlabeled_scaled = supervised.scaler.transform_features(unlabeled);
    for lp in &loops {
        let xi = labeled.features.row(lp.labeled);
        let xj = unlabeled.row(lp.unlabeled_j);
        let xk = unlabeled.row(lp.unlabeled_k);
        let (l_ij, l_jk, l_ki) = propose_loop_labels(&supervised, xi, xj, xk, cfg.lambda)?;
        let si = scaled.features.row(lp.labeled);
        let sj = unlabeled_scaled.row(lp.unlabeled_j);
        let sk = unlabeled_scaled.row(lp.unlabeled_k);
        let sc = &supervised.scaler;
        paired.push_pair(si, sj, sc.transform_target_diff(l_ij));
        paired.push_pair(sj, sk, sc.transform_target_diff(l_jk));
        paired.push_pair(sk, si, sc.transform_target_diff(l_ki));
    }
    let appended_pairs = paired.len() - labeled_pairs;

    let base = learners::refit_resolved(
        &supervised.base,
        learner,
        &paired.pair_features,
        &paired.pair_targets,
        None,
        seeds::derive(seed, STREAM_REFIT),
    )?;

    let model = TwinModel {
        base,
        anchor_features: supervised.anchor_features,
        anchor_targets: supervised.anchor_targets,
        augment: supervised.augment,
        scaler: supervised.scaler,
    };
    Ok((
        model,
        SemiSupReport {
            n_loops,
            labeled_pairs,
            appended_pairs,
            loops,
        },
    ))
}
