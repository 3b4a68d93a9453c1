//! Synthetic regression datasets with closed-form targets.
//!
//! Inputs are sampled uniformly from configurable ranges; the noise stream is
//! seeded independently of the input stream, so the noiseless and noisy
//! variants of a dataset share identical feature rows.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seeds::{self, STREAM_NOISE};

/// `y = x1^3 + x1^2 - x1 - 1 + x1*x2 + sin(x2)`
pub fn test_function(x1: f64, x2: f64) -> f64 {
    x1.powi(3) + x1.powi(2) - x1 - 1.0 + x1 * x2 + x2.sin()
}

/// Amplitude of the driven series-RLC current:
/// `i0 = v0 * cos(omega*t) / sqrt(r^2 + (omega*l - 1/(omega*c))^2)`
pub fn rcl_current(v0: f64, omega: f64, t: f64, r: f64, l: f64, c: f64) -> f64 {
    let reactance = omega * l - 1.0 / (omega * c);
    v0 * (omega * t).cos() / (r * r + reactance * reactance).sqrt()
}

/// Bridge voltage `v = u * (r2/(r1+r2) - r3/(r2+r3))`.
///
/// The second branch divides by `r2 + r3`; this is intentional and part of
/// the dataset definition.
pub fn wheatstone_voltage(u: f64, r1: f64, r2: f64, r3: f64) -> f64 {
    u * (r2 / (r1 + r2) - r3 / (r2 + r3))
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TfDomain {
    pub x1: (f64, f64),
    pub x2: (f64, f64),
}

impl Default for TfDomain {
    fn default() -> Self {
        TfDomain {
            x1: (-1.0, 1.0),
            x2: (-1.0, 1.0),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RclDomain {
    pub v0: (f64, f64),
    pub omega: (f64, f64),
    pub t: (f64, f64),
    pub r: (f64, f64),
    pub l: (f64, f64),
    pub c: (f64, f64),
}

impl Default for RclDomain {
    fn default() -> Self {
        RclDomain {
            v0: (1.0, 2.0),
            omega: (0.5, 2.0),
            t: (0.0, std::f64::consts::TAU),
            r: (0.5, 2.0),
            l: (0.5, 2.0),
            c: (0.5, 2.0),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct WsbDomain {
    pub u: (f64, f64),
    pub r1: (f64, f64),
    pub r2: (f64, f64),
    pub r3: (f64, f64),
}

impl Default for WsbDomain {
    fn default() -> Self {
        WsbDomain {
            u: (1.0, 2.0),
            r1: (0.5, 2.0),
            r2: (0.5, 2.0),
            r3: (0.5, 2.0),
        }
    }
}

fn check_range(name: &str, (lo, hi): (f64, f64)) -> Result<()> {
    if !lo.is_finite() || !hi.is_finite() || lo > hi {
        return Err(Error::invalid(format!("bad sampling range for {name}: [{lo}, {hi}]")));
    }
    Ok(())
}

fn check_positive_range(name: &str, range: (f64, f64)) -> Result<()> {
    check_range(name, range)?;
    if range.0 <= 0.0 {
        return Err(Error::invalid(format!(
            "sampling range for {name} must be strictly positive, got [{}, {}]",
            range.0, range.1
        )));
    }
    Ok(())
}

/// Sample feature rows uniformly from `ranges`, compute targets with `f`,
/// then add `noise_std` Gaussian noise from an independent stream.
fn generate(
    name: &str,
    n: usize,
    seed: u64,
    noise_std: f64,
    ranges: &[(f64, f64)],
    f: impl Fn(&[f64]) -> f64,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    if noise_std < 0.0 || !noise_std.is_finite() {
        return Err(Error::invalid("noise_std must be finite and nonnegative"));
    }
    let cols = ranges.len();
    let mut rng = seeds::rng(seed);
    let features = Matrix::from_fn(n, cols, |_, j| {
        let (lo, hi) = ranges[j];
        rng.gen_range(lo..=hi)
    });
    let mut targets: Vec<f64> = features.iter_rows().map(|row| f(row)).collect();
    if noise_std > 0.0 {
        let mut noise_rng = seeds::rng(seeds::derive(seed, STREAM_NOISE));
        for t in targets.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut noise_rng);
            *t += noise_std * z;
        }
    }
    Dataset::new(name, features, targets)
}

pub fn generate_test_function_in(
    n: usize,
    seed: u64,
    noise_std: f64,
    domain: &TfDomain,
) -> Result<Dataset> {
    check_range("x1", domain.x1)?;
    check_range("x2", domain.x2)?;
    generate("TF", n, seed, noise_std, &[domain.x1, domain.x2], |r| {
        test_function(r[0], r[1])
    })
}

/// TF dataset: 2 features, default noise 0.
pub fn generate_test_function(n: usize, seed: u64, noise_std: f64) -> Result<Dataset> {
    generate_test_function_in(n, seed, noise_std, &TfDomain::default())
}

pub fn generate_rcl_in(n: usize, seed: u64, noise_std: f64, domain: &RclDomain) -> Result<Dataset> {
    check_range("v0", domain.v0)?;
    check_positive_range("omega", domain.omega)?;
    check_range("t", domain.t)?;
    check_positive_range("r", domain.r)?;
    check_range("l", domain.l)?;
    check_positive_range("c", domain.c)?;
    let ranges = [
        domain.v0, domain.omega, domain.t, domain.r, domain.l, domain.c,
    ];
    generate("RCL", n, seed, noise_std, &ranges, |r| {
        rcl_current(r[0], r[1], r[2], r[3], r[4], r[5])
    })
}

/// RCL dataset: 6 features (v0, omega, t, r, l, c). The published setup adds
/// noise with standard deviation 0.1.
pub fn generate_rcl(n: usize, seed: u64, noise_std: f64) -> Result<Dataset> {
    generate_rcl_in(n, seed, noise_std, &RclDomain::default())
}

pub fn generate_wheatstone_in(
    n: usize,
    seed: u64,
    noise_std: f64,
    domain: &WsbDomain,
) -> Result<Dataset> {
    check_range("u", domain.u)?;
    check_positive_range("r1", domain.r1)?;
    check_positive_range("r2", domain.r2)?;
    check_positive_range("r3", domain.r3)?;
    let ranges = [domain.u, domain.r1, domain.r2, domain.r3];
    generate("WSB", n, seed, noise_std, &ranges, |r| {
        wheatstone_voltage(r[0], r[1], r[2], r[3])
    })
}

/// WSB dataset: 4 features (u, r1, r2, r3), conventionally noise 0.1.
pub fn generate_wheatstone(n: usize, seed: u64, noise_std: f64) -> Result<Dataset> {
    generate_wheatstone_in(n, seed, noise_std, &WsbDomain::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tf_shape_and_formula_points() {
        let d = generate_test_function(1000, 7, 0.0).unwrap();
        assert_eq!(d.len(), 1000);
        assert_eq!(d.feature_count(), 2);
        // 1 + 1 - 1 - 1 + 0 + sin(0) = 0
        assert_eq!(test_function(1.0, 0.0), 0.0);
        assert_eq!(test_function(0.0, 0.0), -1.0);
    }

    #[test]
    fn rcl_shape_and_special_points() {
        let d = generate_rcl(4000, 3, 0.0).unwrap();
        assert_eq!(d.len(), 4000);
        assert_eq!(d.feature_count(), 6);
        // at resonance omega*l == 1/(omega*c): reactance cancels, i0 = v0/r
        let omega = 1.25_f64;
        let l = 0.8;
        let c = 1.0 / (omega * omega * l);
        assert!((rcl_current(1.0, omega, 0.0, 1.0, l, c) - 1.0).abs() < 1e-12);
        assert_eq!(rcl_current(0.0, 1.0, 0.3, 1.0, 1.0, 1.0), 0.0);
    }

    #[test]
    fn wsb_shape_and_special_points() {
        let d = generate_wheatstone(200, 5, 0.0).unwrap();
        assert_eq!(d.len(), 200);
        assert_eq!(d.feature_count(), 4);
        // balanced bridge: r1 == r2 == r3 gives u * (1/2 - 1/2) = 0
        assert_eq!(wheatstone_voltage(2.0, 1.5, 1.5, 1.5), 0.0);
        assert_eq!(wheatstone_voltage(0.0, 1.0, 2.0, 0.5), 0.0);
    }

    #[test]
    fn zero_n_rejected() {
        assert!(generate_test_function(0, 1, 0.0).is_err());
    }

    #[test]
    fn nonpositive_ranges_rejected() {
        let mut d = RclDomain::default();
        d.omega = (0.0, 2.0);
        assert!(generate_rcl_in(10, 1, 0.0, &d).is_err());
        let mut w = WsbDomain::default();
        w.r2 = (-0.5, 2.0);
        assert!(generate_wheatstone_in(10, 1, 0.0, &w).is_err());
    }

    #[test]
    fn same_seed_bit_identical_and_noise_shares_inputs() {
        let a = generate_wheatstone(50, 11, 0.0).unwrap();
        let b = generate_wheatstone(50, 11, 0.0).unwrap();
        assert_eq!(a, b);
        let noisy = generate_wheatstone(50, 11, 0.1).unwrap();
        assert_eq!(a.features, noisy.features);
        assert_ne!(a.targets, noisy.targets);
    }

    #[test]
    fn noiseless_targets_match_formula_exactly() {
        let d = generate_rcl(100, 9, 0.0).unwrap();
        for i in 0..d.len() {
            let r = d.features.row(i);
            let y = rcl_current(r[0], r[1], r[2], r[3], r[4], r[5]);
            assert_eq!(d.targets[i], y);
        }
    }
}
