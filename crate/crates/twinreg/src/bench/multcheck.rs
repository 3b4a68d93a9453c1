//! Pair-multiplier sanity check.
//!
//! Twin training inflates n rows into up to n^2 pairs. On tasks where that
//! inflation helps, more pairs per row means lower error; on tasks where
//! pairwise differences carry no signal, more pairs just means more noise
//! fitted, and error *rises* with the multiplier. That rising pattern is
//! the failure signature this check looks for: RMSE strictly increasing
//! across multipliers 1, 4, 16 yields an advisory "reject-tnnr" verdict.

use serde::{Deserialize, Serialize};

use crate::bench::experiment::{run_experiment, ExperimentConfig, Method};
use crate::error::{Error, Result};

pub const CHECK_MULTIPLIERS: [usize; 3] = [1, 4, 16];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// No failure signature; twin training looks viable here.
    Ok,
    /// Error rose strictly with every multiplier step: advisory only.
    RejectTnnr,
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Ok => "ok",
            Verdict::RejectTnnr => "reject-tnnr",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MultiplierCheckReport {
    pub multipliers: Vec<usize>,
    /// Mean RMSE per multiplier, same order.
    pub mean_rmses: Vec<f64>,
    pub verdict: Verdict,
}

/// Derive the verdict from the measured errors: reject only when they
/// increase strictly at every step (ties and dips are both "ok").
pub fn verdict_from_rmses(rmses: &[f64]) -> Verdict {
    let strictly_increasing = rmses.windows(2).all(|w| w[0] < w[1]);
    if rmses.len() >= 2 && strictly_increasing {
        Verdict::RejectTnnr
    } else {
        Verdict::Ok
    }
}

/// Fit a twin network at multipliers 1, 4, 16 (same seeds, so the splits
/// pair up) and report the advisory verdict.
pub fn multiplier_check(base: &ExperimentConfig) -> Result<MultiplierCheckReport> {
    if !matches!(base.method, Method::Tnnr) {
        return Err(Error::invalid(format!(
            "multiplier check runs method 'tnnr', got '{}'",
            base.method.name()
        )));
    }
    let mut mean_rmses = Vec::with_capacity(CHECK_MULTIPLIERS.len());
    for &k in &CHECK_MULTIPLIERS {
        let mut cfg = base.clone();
        cfg.multiplier = Some(k);
        mean_rmses.push(run_experiment(&cfg)?.mean_rmse);
    }
    Ok(MultiplierCheckReport {
        multipliers: CHECK_MULTIPLIERS.to_vec(),
        verdict: verdict_from_rmses(&mean_rmses),
        mean_rmses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strictly_increasing_rejects() {
        assert_eq!(verdict_from_rmses(&[0.1, 0.2, 0.3]), Verdict::RejectTnnr);
    }

    #[test]
    fn identical_rmses_are_ok() {
        assert_eq!(verdict_from_rmses(&[0.2, 0.2, 0.2]), Verdict::Ok);
    }

    #[test]
    fn any_dip_or_tie_is_ok() {
        assert_eq!(verdict_from_rmses(&[0.3, 0.2, 0.4]), Verdict::Ok);
        assert_eq!(verdict_from_rmses(&[0.1, 0.1, 0.2]), Verdict::Ok);
        assert_eq!(verdict_from_rmses(&[0.3, 0.2, 0.1]), Verdict::Ok);
    }

    #[test]
    fn verdict_serializes_kebab_case() {
        assert_eq!(
            serde_json::to_string(&Verdict::RejectTnnr).unwrap(),
            "\"reject-tnnr\""
        );
        assert_eq!(Verdict::RejectTnnr.name(), "reject-tnnr");
    }

    #[test]
    fn wrong_method_rejected() {
        use crate::bench::experiment::DatasetSpec;
        let cfg = ExperimentConfig::new(
            DatasetSpec::TestFunction {
                n: 40,
                noise_std: 0.0,
            },
            Method::Rf,
        );
        assert_eq!(
            multiplier_check(&cfg).unwrap_err().kind(),
            "invalid-argument"
        );
    }
}
