//! Monte-Carlo bias-variance-covariance diagnostic.
//!
//! For a two-member ensemble h = (h1 + h2) / 2 trained on resampled data,
//! the expected squared error decomposes as
//! `MSE = E_x{ Bias^2 + Var/2 + Cov/2 } + sigma^2`,
//! where Bias, Var, Cov are taken over training-set draws and E_x averages
//! over a fixed evaluation grid. This module estimates every term by
//! simulation on a one-dimensional polynomial task and checks that the
//! identity closes to within Monte-Carlo error: the gap between the two
//! sides involves only fresh test noise, so it shrinks like 1/sqrt(trials).

use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeds;

const STREAM_TRIAL: u64 = 0x62766469_01;
const STREAM_MEMBER: u64 = 0x62766469_02;
const STREAM_TEST: u64 = 0x62766469_03;
const STREAM_BOOT: u64 = 0x62766469_04;

const BOOTSTRAP_REPLICATES: usize = 200;
/// Absolute slack added to the 3-SE band so exact-zero cases pass cleanly.
const GAP_FLOOR: f64 = 1e-9;
/// Below this spread the trials are effectively identical (only mean
/// round-off remains) and the statistical check is vacuous.
const DEGENERATE_EPS: f64 = 1e-15;

/// The fixed ground truth: a cubic on [-1, 1].
const TRUE_COEFFS: [f64; 4] = [1.0, 2.0, -1.0, 0.5];

fn true_function(x: f64) -> f64 {
    TRUE_COEFFS
        .iter()
        .rev()
        .fold(0.0, |acc, &c| acc * x + c)
}

/// How the two ensemble members are produced from a trial's data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemberMode {
    /// One training set per trial; each member fits its own bootstrap
    /// resample. Members are correlated but not identical.
    SharedBootstrap,
    /// Two independent training sets per trial; covariance vanishes in
    /// expectation.
    Independent,
    /// One fit reused for both members; covariance equals variance.
    Identical,
}

/// What each member is: a least-squares polynomial, or the ground truth
/// itself (a perfect, data-ignoring estimator).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Polynomial { degree: usize },
    TrueFunction,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BvConfig {
    /// Training-set resamples; at least 30.
    pub trials: usize,
    /// Rows per training set.
    pub train_n: usize,
    /// Fixed evaluation grid size on [-1, 1].
    pub grid_points: usize,
    /// Observation noise sigma (train and test).
    pub noise_std: f64,
    pub estimator: EstimatorKind,
    pub member_mode: MemberMode,
    pub seed: u64,
}

impl Default for BvConfig {
    fn default() -> Self {
        BvConfig {
            trials: 500,
            train_n: 30,
            grid_points: 64,
            noise_std: 0.1,
            estimator: EstimatorKind::Polynomial { degree: 3 },
            member_mode: MemberMode::SharedBootstrap,
            seed: 0,
        }
    }
}

/// Grid-averaged estimates of every term in the decomposition.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BvRecord {
    pub config: BvConfig,
    /// Left side: mean squared error of the ensemble against fresh noisy
    /// targets.
    pub mse: f64,
    pub bias_sq: f64,
    pub variance: f64,
    pub covariance: f64,
    /// sigma^2, known exactly from the generator.
    pub noise_var: f64,
    /// Right side: bias_sq + variance/2 + covariance/2 + noise_var.
    pub rhs: f64,
    pub gap: f64,
    /// Bootstrap standard error of the gap over trials.
    pub gap_se: f64,
    /// Bootstrap standard error of the covariance term.
    pub cov_se: f64,
    /// |gap| within 3 standard errors (plus an absolute floor).
    pub identity_ok: bool,
    /// No spread across trials: the statistical check is vacuous.
    pub degenerate: bool,
}

/// Solve A x = b for a small dense system by Gaussian elimination with
/// partial pivoting. A is row-major n x n.
fn solve_dense(mut a: Vec<f64>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
            .unwrap();
        if a[pivot * n + col].abs() < 1e-12 {
            return Err(Error::invalid("singular normal equations"));
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        for row in col + 1..n {
            let factor = a[row * n + col] / a[col * n + col];
            for k in col..n {
                a[row * n + k] -= factor * a[col * n + k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row * n + k] * x[k];
        }
        x[row] = acc / a[row * n + row];
    }
    Ok(x)
}

/// Least-squares polynomial coefficients (low degree first) via the normal
/// equations; fine at the tiny degrees used here.
fn fit_polynomial(xs: &[f64], ys: &[f64], degree: usize) -> Result<Vec<f64>> {
    let p = degree + 1;
    let mut ata = vec![0.0; p * p];
    let mut aty = vec![0.0; p];
    for (&x, &y) in xs.iter().zip(ys) {
        let mut powers = vec![1.0; p];
        for j in 1..p {
            powers[j] = powers[j - 1] * x;
        }
        for i in 0..p {
            aty[i] += powers[i] * y;
            for j in 0..p {
                ata[i * p + j] += powers[i] * powers[j];
            }
        }
    }
    solve_dense(ata, aty)
}

fn eval_polynomial(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

struct Member {
    coeffs: Option<Vec<f64>>,
}

impl Member {
    fn predict(&self, x: f64) -> f64 {
        match &self.coeffs {
            Some(c) => eval_polynomial(c, x),
            None => true_function(x),
        }
    }
}

fn fit_member(
    estimator: EstimatorKind,
    xs: &[f64],
    ys: &[f64],
) -> Result<Member> {
    match estimator {
        EstimatorKind::Polynomial { degree } => Ok(Member {
            coeffs: Some(fit_polynomial(xs, ys, degree)?),
        }),
        EstimatorKind::TrueFunction => Ok(Member { coeffs: None }),
    }
}

fn draw_training_set(
    rng: &mut impl Rng,
    n: usize,
    noise: &Option<Normal<f64>>,
) -> (Vec<f64>, Vec<f64>) {
    let dom = Uniform::new_inclusive(-1.0, 1.0);
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let x = dom.sample(rng);
        let eps = noise.as_ref().map_or(0.0, |d| d.sample(rng));
        xs.push(x);
        ys.push(true_function(x) + eps);
    }
    (xs, ys)
}

fn bootstrap_resample(rng: &mut impl Rng, xs: &[f64], ys: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = xs.len();
    let mut bx = Vec::with_capacity(n);
    let mut by = Vec::with_capacity(n);
    for _ in 0..n {
        let i = rng.gen_range(0..n);
        bx.push(xs[i]);
        by.push(ys[i]);
    }
    (bx, by)
}

/// All per-trial raw material, kept so the bootstrap can recompute every
/// moment from resampled trials.
struct TrialTable {
    /// trials x grid, member 1 predictions.
    h1: Vec<Vec<f64>>,
    /// trials x grid, member 2 predictions.
    h2: Vec<Vec<f64>>,
    /// trials x grid, fresh noisy test targets.
    targets: Vec<Vec<f64>>,
    /// Grid ground truth.
    truth: Vec<f64>,
}

/// Compute both sides of the identity from a set of trial indices
/// (repeats allowed, as the bootstrap requires).
/// Returns (mse, bias_sq, var, cov, rhs, gap).
fn evaluate(table: &TrialTable, idx: &[usize], noise_var: f64) -> (f64, f64, f64, f64, f64, f64) {
    let t = idx.len();
    let g = table.truth.len();
    let tf = t as f64;
    let gf = g as f64;

    let mut mse = 0.0;
    let mut bias_sq = 0.0;
    let mut var = 0.0;
    let mut cov = 0.0;
    for point in 0..g {
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for &trial in idx {
            m1 += table.h1[trial][point];
            m2 += table.h2[trial][point];
        }
        m1 /= tf;
        m2 /= tf;

        let mut v1 = 0.0;
        let mut v2 = 0.0;
        let mut c12 = 0.0;
        let mut se = 0.0;
        for &trial in idx {
            let d1 = table.h1[trial][point] - m1;
            let d2 = table.h2[trial][point] - m2;
            v1 += d1 * d1;
            v2 += d2 * d2;
            c12 += d1 * d2;
            let ens = 0.5 * (table.h1[trial][point] + table.h2[trial][point]);
            let r = ens - table.targets[trial][point];
            se += r * r;
        }
        let ens_mean = 0.5 * (m1 + m2);
        let b = ens_mean - table.truth[point];
        bias_sq += b * b;
        var += 0.5 * (v1 + v2) / tf;
        cov += c12 / tf;
        mse += se / tf;
    }
    mse /= gf;
    bias_sq /= gf;
    var /= gf;
    cov /= gf;
    let rhs = bias_sq + 0.5 * var + 0.5 * cov + noise_var;
    (mse, bias_sq, var, cov, rhs, mse - rhs)
}

/// Run the diagnostic: `trials` training resamples, two members each, a
/// fixed evaluation grid, and a bootstrap over trials for the error bars.
pub fn bias_variance_diagnostic(cfg: &BvConfig) -> Result<BvRecord> {
    if cfg.trials < 30 {
        return Err(Error::invalid(format!(
            "need at least 30 trials for the Monte-Carlo check, got {}",
            cfg.trials
        )));
    }
    if cfg.train_n < 2 {
        return Err(Error::invalid("train_n must be at least 2"));
    }
    if cfg.grid_points < 2 {
        return Err(Error::invalid("grid_points must be at least 2"));
    }
    if !(cfg.noise_std.is_finite() && cfg.noise_std >= 0.0) {
        return Err(Error::invalid("noise_std must be finite and nonnegative"));
    }
    if let EstimatorKind::Polynomial { degree } = cfg.estimator {
        if degree + 1 >= cfg.train_n {
            return Err(Error::invalid(
                "polynomial degree too high for the training size",
            ));
        }
    }

    let noise = if cfg.noise_std > 0.0 {
        Some(Normal::new(0.0, cfg.noise_std).map_err(|e| Error::invalid(e.to_string()))?)
    } else {
        None
    };
    let grid: Vec<f64> = (0..cfg.grid_points)
        .map(|i| -1.0 + 2.0 * i as f64 / (cfg.grid_points - 1) as f64)
        .collect();
    let truth: Vec<f64> = grid.iter().map(|&x| true_function(x)).collect();

    let mut h1 = Vec::with_capacity(cfg.trials);
    let mut h2 = Vec::with_capacity(cfg.trials);
    let mut targets = Vec::with_capacity(cfg.trials);
    for trial in 0..cfg.trials {
        let mut rng = seeds::rng(seeds::derive(cfg.seed, STREAM_TRIAL + trial as u64));
        let (xs, ys) = draw_training_set(&mut rng, cfg.train_n, &noise);

        let (m1, m2) = match cfg.member_mode {
            MemberMode::SharedBootstrap => {
                let mut rng1 = seeds::rng(seeds::derive(
                    cfg.seed,
                    STREAM_MEMBER + 2 * trial as u64,
                ));
                let mut rng2 = seeds::rng(seeds::derive(
                    cfg.seed,
                    STREAM_MEMBER + 2 * trial as u64 + 1,
                ));
                let (x1, y1) = bootstrap_resample(&mut rng1, &xs, &ys);
                let (x2, y2) = bootstrap_resample(&mut rng2, &xs, &ys);
                (
                    fit_member(cfg.estimator, &x1, &y1)?,
                    fit_member(cfg.estimator, &x2, &y2)?,
                )
            }
            MemberMode::Independent => {
                let (x2, y2) = draw_training_set(&mut rng, cfg.train_n, &noise);
                (
                    fit_member(cfg.estimator, &xs, &ys)?,
                    fit_member(cfg.estimator, &x2, &y2)?,
                )
            }
            MemberMode::Identical => {
                let m = fit_member(cfg.estimator, &xs, &ys)?;
                (
                    Member {
                        coeffs: m.coeffs.clone(),
                    },
                    m,
                )
            }
        };

        h1.push(grid.iter().map(|&x| m1.predict(x)).collect::<Vec<_>>());
        h2.push(grid.iter().map(|&x| m2.predict(x)).collect::<Vec<_>>());

        let mut test_rng = seeds::rng(seeds::derive(cfg.seed, STREAM_TEST + trial as u64));
        targets.push(
            truth
                .iter()
                .map(|&t| t + noise.as_ref().map_or(0.0, |d| d.sample(&mut test_rng)))
                .collect::<Vec<_>>(),
        );
    }

    let table = TrialTable {
        h1,
        h2,
        targets,
        truth,
    };
    let noise_var = cfg.noise_std * cfg.noise_std;
    let all: Vec<usize> = (0..cfg.trials).collect();
    let (mse, bias_sq, var, cov, rhs, gap) = evaluate(&table, &all, noise_var);

    // Bootstrap over trials for the error bars on gap and covariance.
    let mut boot_rng = seeds::rng(seeds::derive(cfg.seed, STREAM_BOOT));
    let mut gaps = Vec::with_capacity(BOOTSTRAP_REPLICATES);
    let mut covs = Vec::with_capacity(BOOTSTRAP_REPLICATES);
    for _ in 0..BOOTSTRAP_REPLICATES {
        let idx: Vec<usize> = (0..cfg.trials)
            .map(|_| boot_rng.gen_range(0..cfg.trials))
            .collect();
        let (_, _, _, bcov, _, bgap) = evaluate(&table, &idx, noise_var);
        gaps.push(bgap);
        covs.push(bcov);
    }
    let gap_se = replicate_std(&gaps);
    let cov_se = replicate_std(&covs);

    let degenerate = var < DEGENERATE_EPS && mse < DEGENERATE_EPS;
    let identity_ok = gap.abs() <= 3.0 * gap_se + GAP_FLOOR;

    Ok(BvRecord {
        config: cfg.clone(),
        mse,
        bias_sq,
        variance: var,
        covariance: cov,
        noise_var,
        rhs,
        gap,
        gap_se,
        cov_se,
        identity_ok,
        degenerate,
    })
}

/// Sample standard deviation of bootstrap replicates.
fn replicate_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let m = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_solver_recovers_exact_solution() {
        // x = [2, -1, 3] for a hand-picked system.
        let a = vec![4.0, 1.0, 0.0, 1.0, 3.0, -1.0, 0.0, -1.0, 2.0];
        let b = vec![7.0, -4.0, 7.0];
        let x = solve_dense(a, b).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-12);
        assert!((x[1] + 1.0).abs() < 1e-12);
        assert!((x[2] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn polynomial_fit_recovers_noiseless_cubic() {
        let xs: Vec<f64> = (0..40).map(|i| -1.0 + i as f64 / 20.0).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| true_function(x)).collect();
        let c = fit_polynomial(&xs, &ys, 3).unwrap();
        for (got, want) in c.iter().zip(TRUE_COEFFS) {
            assert!((got - want).abs() < 1e-8, "{got} vs {want}");
        }
    }

    #[test]
    fn too_few_trials_rejected() {
        let cfg = BvConfig {
            trials: 29,
            ..BvConfig::default()
        };
        assert_eq!(
            bias_variance_diagnostic(&cfg).unwrap_err().kind(),
            "invalid-argument"
        );
    }

    #[test]
    fn identity_holds_for_bootstrap_members() {
        let rec = bias_variance_diagnostic(&BvConfig::default()).unwrap();
        assert!(rec.identity_ok, "gap {} vs se {}", rec.gap, rec.gap_se);
        assert!(!rec.degenerate);
        assert!(rec.variance > 0.0);
        // Bootstrap members share data, so they correlate positively.
        assert!(rec.covariance > 0.0);
        assert!(rec.gap_se > 0.0);
    }

    #[test]
    fn identical_members_have_cov_equal_var() {
        let cfg = BvConfig {
            member_mode: MemberMode::Identical,
            ..BvConfig::default()
        };
        let rec = bias_variance_diagnostic(&cfg).unwrap();
        assert_eq!(rec.covariance, rec.variance);
        assert!(rec.identity_ok);
    }

    #[test]
    fn independent_members_have_near_zero_cov() {
        let cfg = BvConfig {
            member_mode: MemberMode::Independent,
            ..BvConfig::default()
        };
        let rec = bias_variance_diagnostic(&cfg).unwrap();
        assert!(
            rec.covariance.abs() <= 3.0 * rec.cov_se,
            "cov {} vs se {}",
            rec.covariance,
            rec.cov_se
        );
        assert!(rec.identity_ok);
    }

    #[test]
    fn perfect_estimator_without_noise_is_degenerate_zero() {
        let cfg = BvConfig {
            estimator: EstimatorKind::TrueFunction,
            noise_std: 0.0,
            ..BvConfig::default()
        };
        let rec = bias_variance_diagnostic(&cfg).unwrap();
        // Only mean-accumulation round-off remains (~1e-28).
        assert!(rec.mse < 1e-20);
        assert!(rec.bias_sq < 1e-20);
        assert!(rec.variance < 1e-20);
        assert!(rec.covariance.abs() < 1e-20);
        assert!(rec.degenerate);
        assert!(rec.identity_ok);
    }

    #[test]
    fn noiseless_misspecified_fit_still_satisfies_identity() {
        // Degree 2 on a cubic truth: each trial's projection depends on its
        // x draws, so variance and bias are both real even without noise.
        let cfg = BvConfig {
            noise_std: 0.0,
            estimator: EstimatorKind::Polynomial { degree: 2 },
            ..BvConfig::default()
        };
        let rec = bias_variance_diagnostic(&cfg).unwrap();
        assert!(!rec.degenerate);
        assert!(rec.bias_sq > 0.0);
        assert!(rec.variance > 0.0);
        assert!(rec.identity_ok);
    }

    #[test]
    fn noiseless_wellspecified_fit_is_flagged_degenerate() {
        // Degree 3 on the cubic with no noise recovers the same function
        // every trial; the statistical check is vacuous, not failed.
        let cfg = BvConfig {
            noise_std: 0.0,
            ..BvConfig::default()
        };
        let rec = bias_variance_diagnostic(&cfg).unwrap();
        assert!(rec.degenerate);
        assert!(rec.identity_ok);
    }

    #[test]
    fn diagnostic_is_deterministic() {
        let a = bias_variance_diagnostic(&BvConfig::default()).unwrap();
        let b = bias_variance_diagnostic(&BvConfig::default()).unwrap();
        assert_eq!(a.gap, b.gap);
        assert_eq!(a.gap_se, b.gap_se);
        assert_eq!(a.mse, b.mse);
    }
}
