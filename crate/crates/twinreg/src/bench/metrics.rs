//! Error metrics and the aggregation used in every report.

use crate::error::{Error, Result};

/// Root mean square error: `sqrt(mean((p - t)^2))`.
pub fn rmse(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.is_empty() || predictions.len() != targets.len() {
        return Err(Error::invalid(format!(
            "rmse needs equal nonempty lengths, got {} and {}",
            predictions.len(),
            targets.len()
        )));
    }
    let sq: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok((sq / predictions.len() as f64).sqrt())
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len().max(1) as f64
}

/// Sample standard deviation (n - 1 denominator); zero for fewer than two
/// values.
pub fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

/// Standard error of the mean: sample std / sqrt(n).
pub fn standard_error(values: &[f64]) -> f64 {
    sample_std(values) / (values.len().max(1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rmse_hand_cases() {
        assert!((rmse(&[1.0, 2.0], &[1.0, 4.0]).unwrap() - 2.0f64.sqrt()).abs() < 1e-15);
        assert_eq!(rmse(&[3.0, -1.0], &[3.0, -1.0]).unwrap(), 0.0);
        assert_eq!(rmse(&[2.0], &[-1.5]).unwrap(), 3.5);
    }

    #[test]
    fn rmse_rejects_mismatch_and_empty() {
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
        assert!(rmse(&[], &[]).is_err());
    }

    #[test]
    fn aggregation_oracles() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&xs), 2.5);
        // sample std of 1..4: sqrt(5/3)
        assert!((sample_std(&xs) - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((standard_error(&xs) - (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(sample_std(&[7.0]), 0.0);
    }
}
