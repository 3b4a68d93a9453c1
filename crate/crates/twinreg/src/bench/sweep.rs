//! Parameter sweeps: rerun one experiment while varying a single knob.
//!
//! Every sweep point reuses the base config's seed, so all points see the
//! same sequence of splits; differences between points come from the swept
//! knob alone.

use serde::{Deserialize, Serialize};

use crate::bench::experiment::{run_experiment, ExperimentConfig, ExperimentResult, Method};
use crate::error::{Error, Result};

/// The knob a sweep varies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Ensemble member count (ann_ensemble, tnnr_ensemble).
    EnsembleSize,
    /// Pairs per training row (tnnr, tnnr_ensemble, nntnnr in full mode).
    Multiplier,
    /// Neighbor count (nntnnr anchors, knn's k).
    Neighbors,
    /// Loop weight (semisup_rf).
    Lambda,
    /// Random inference-anchor subset size (tnnr, tnnr_ensemble).
    Anchors,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::EnsembleSize => "ensemble_size",
            SweepAxis::Multiplier => "multiplier",
            SweepAxis::Neighbors => "neighbors",
            SweepAxis::Lambda => "lambda",
            SweepAxis::Anchors => "anchors",
        }
    }

    pub fn parse(text: &str) -> Result<SweepAxis> {
        match text {
            "ensemble_size" => Ok(SweepAxis::EnsembleSize),
            "multiplier" => Ok(SweepAxis::Multiplier),
            "neighbors" => Ok(SweepAxis::Neighbors),
            "lambda" => Ok(SweepAxis::Lambda),
            "anchors" => Ok(SweepAxis::Anchors),
            other => Err(Error::invalid(format!(
                "unknown sweep axis '{other}' (expected ensemble_size, multiplier, \
                 neighbors, lambda, or anchors)"
            ))),
        }
    }
}

/// Integer-valued axes reject fractional or nonpositive values.
fn as_count(axis: SweepAxis, value: f64) -> Result<usize> {
    if !(value.is_finite() && value >= 1.0 && value.fract() == 0.0) {
        return Err(Error::invalid(format!(
            "axis {} needs a positive integer value, got {value}",
            axis.name()
        )));
    }
    Ok(value as usize)
}

fn axis_mismatch(axis: SweepAxis, method: &Method) -> Error {
    Error::invalid(format!(
        "axis {} does not apply to method '{}'",
        axis.name(),
        method.name()
    ))
}

/// A copy of `base` with the axis set to `value`; errors if the axis does
/// not apply to the configured method.
pub fn apply_axis(base: &ExperimentConfig, axis: SweepAxis, value: f64) -> Result<ExperimentConfig> {
    let mut cfg = base.clone();
    match axis {
        SweepAxis::EnsembleSize => {
            let members = as_count(axis, value)?;
            match &mut cfg.method {
                Method::AnnEnsemble { members: m } | Method::TnnrEnsemble { members: m } => {
                    *m = members;
                }
                other => return Err(axis_mismatch(axis, other)),
            }
        }
        SweepAxis::Multiplier => {
            let k = as_count(axis, value)?;
            if !matches!(
                cfg.method,
                Method::Tnnr | Method::TnnrEnsemble { .. } | Method::Nntnnr { .. }
            ) {
                return Err(axis_mismatch(axis, &cfg.method));
            }
            cfg.multiplier = Some(k);
        }
        SweepAxis::Neighbors => {
            let n = as_count(axis, value)?;
            match &mut cfg.method {
                Method::Nntnnr { m, .. } => *m = n,
                Method::Knn { k } => *k = n,
                other => return Err(axis_mismatch(axis, other)),
            }
        }
        SweepAxis::Lambda => {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::invalid(format!(
                    "axis lambda needs a finite nonnegative value, got {value}"
                )));
            }
            match &mut cfg.method {
                Method::SemisupRf { lambda, .. } => *lambda = value,
                other => return Err(axis_mismatch(axis, other)),
            }
        }
        SweepAxis::Anchors => {
            let c = as_count(axis, value)?;
            if !matches!(cfg.method, Method::Tnnr | Method::TnnrEnsemble { .. }) {
                return Err(axis_mismatch(axis, &cfg.method));
            }
            cfg.anchors = Some(c);
        }
    }
    Ok(cfg)
}

/// Run the base experiment once per axis value, in the given order. Each
/// result carries its value in `sweep_value`.
pub fn sweep(
    base: &ExperimentConfig,
    axis: SweepAxis,
    values: &[f64],
) -> Result<Vec<ExperimentResult>> {
    if values.is_empty() {
        return Err(Error::invalid("sweep needs at least one value"));
    }
    // Validate every point up front so a mid-sweep config error cannot
    // discard hours of finished points.
    let configs: Vec<ExperimentConfig> = values
        .iter()
        .map(|&v| apply_axis(base, axis, v))
        .collect::<Result<_>>()?;

    let mut results = Vec::with_capacity(values.len());
    for (cfg, &value) in configs.iter().zip(values) {
        let mut res = run_experiment(cfg)?;
        res.sweep_value = Some(value);
        results.push(res);
    }
    Ok(results)
}
