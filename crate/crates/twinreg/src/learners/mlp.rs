//! Fully-connected regression network trained by minibatch backpropagation.
//!
//! Architecture: ReLU hidden layers, one linear output, squared-error loss.
//! Training uses Adadelta by default, halves the learning rate when the
//! validation error plateaus, and stops early, restoring the weights of the
//! best validation epoch. All randomness (init, holdout carving, batch
//! shuffling) derives from the caller's seed, so a fit is reproducible.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seeds;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub enum OptimizerKind {
    Adadelta { rho: f64, eps: f64, lr: f64 },
    Adam { lr: f64, beta1: f64, beta2: f64, eps: f64 },
}

impl Default for OptimizerKind {
    fn default() -> Self {
        OptimizerKind::Adadelta {
            rho: 0.95,
            eps: 1e-7,
            lr: 1.0,
        }
    }
}

impl OptimizerKind {
    fn base_lr(&self) -> f64 {
        match self {
            OptimizerKind::Adadelta { lr, .. } => *lr,
            OptimizerKind::Adam { lr, .. } => *lr,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub optimizer: OptimizerKind,
    /// Stagnant validation epochs before the learning rate is halved.
    pub plateau_patience: usize,
    pub plateau_factor: f64,
    pub min_lr: f64,
    /// Stagnant validation epochs before training stops.
    pub early_stop_patience: usize,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden: vec![128, 128],
            batch_size: 16,
            max_epochs: 2000,
            optimizer: OptimizerKind::default(),
            plateau_patience: 25,
            plateau_factor: 0.5,
            min_lr: 1e-5,
            early_stop_patience: 50,
        }
    }
}

impl MlpConfig {
    fn validate(&self) -> Result<()> {
        if self.hidden.contains(&0) {
            return Err(Error::invalid("hidden layer width must be positive"));
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::invalid("batch_size and max_epochs must be positive"));
        }
        if !(self.plateau_factor > 0.0 && self.plateau_factor < 1.0) {
            return Err(Error::invalid("plateau_factor must lie in (0, 1)"));
        }
        if self.plateau_patience == 0 || self.early_stop_patience == 0 {
            return Err(Error::invalid("patience values must be positive"));
        }
        Ok(())
    }
}

/// Weights live in one flat vector, layer by layer: `W0, b0, W1, b1, ...`
/// with each `W` stored row-major as `out x in`. `dims` holds the node
/// counts `[input, hidden..., 1]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MlpModel {
    dims: Vec<usize>,
    params: Vec<f64>,
}

fn layer_offsets(dims: &[usize]) -> (Vec<(usize, usize)>, usize) {
    let mut offsets = Vec::with_capacity(dims.len() - 1);
    let mut off = 0;
    for w in dims.windows(2) {
        let (inn, out) = (w[0], w[1]);
        offsets.push((off, off + inn * out));
        off += inn * out + out;
    }
    (offsets, off)
}

impl MlpModel {
    fn dims_for(input: usize, hidden: &[usize]) -> Vec<usize> {
        let mut dims = Vec::with_capacity(hidden.len() + 2);
        dims.push(input);
        dims.extend_from_slice(hidden);
        dims.push(1);
        dims
    }

    /// Random uniform init in +-1/sqrt(fan_in) per layer, zero biases.
    pub fn init(input: usize, hidden: &[usize], seed: u64) -> MlpModel {
        let dims = Self::dims_for(input, hidden);
        let (offsets, total) = layer_offsets(&dims);
        let mut params = vec![0.0; total];
        let mut rng = seeds::rng(seeds::derive(seed, STREAM_INIT));
        for (l, &(w_off, b_off)) in offsets.iter().enumerate() {
            let bound = 1.0 / (dims[l] as f64).sqrt();
            for w in &mut params[w_off..b_off] {
                *w = rng.gen_range(-bound..bound);
            }
        }
        MlpModel { dims, params }
    }

    /// All-zero weights: the network is the constant zero function.
    pub fn zeros(input: usize, hidden: &[usize]) -> MlpModel {
        let dims = Self::dims_for(input, hidden);
        let (_, total) = layer_offsets(&dims);
        MlpModel {
            dims,
            params: vec![0.0; total],
        }
    }

    /// Build from explicit flat parameters (for hand-made fixtures).
    pub fn from_params(input: usize, hidden: &[usize], params: Vec<f64>) -> Result<MlpModel> {
        let dims = Self::dims_for(input, hidden);
        let (_, total) = layer_offsets(&dims);
        if params.len() != total {
            return Err(Error::invalid(format!(
                "expected {} parameters, got {}",
                total,
                params.len()
            )));
        }
        Ok(MlpModel { dims, params })
    }

    pub fn input_width(&self) -> usize {
        self.dims[0]
    }

    pub fn hidden(&self) -> &[usize] {
        &self.dims[1..self.dims.len() - 1]
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(Error::invalid("parameter length mismatch"));
        }
        self.params.copy_from_slice(params);
        Ok(())
    }

    pub fn parameter_count(&self) -> u64 {
        self.params.len() as u64
    }

    pub fn forward_row(&self, row: &[f64]) -> f64 {
        debug_assert_eq!(row.len(), self.dims[0]);
        let (offsets, _) = layer_offsets(&self.dims);
        let mut cur = row.to_vec();
        let mut next = Vec::new();
        let last = offsets.len() - 1;
        for (l, &(w_off, b_off)) in offsets.iter().enumerate() {
            let (inn, out) = (self.dims[l], self.dims[l + 1]);
            next.clear();
            next.resize(out, 0.0);
            for o in 0..out {
                let w = &self.params[w_off + o * inn..w_off + (o + 1) * inn];
                let mut acc = self.params[b_off + o];
                for i in 0..inn {
                    acc += w[i] * cur[i];
                }
                next[o] = if l < last { acc.max(0.0) } else { acc };
            }
            std::mem::swap(&mut cur, &mut next);
        }
        cur[0]
    }

    /// Predict every row; evaluation is chunked so memory stays flat.
    pub fn forward_batch(&self, features: &Matrix) -> Vec<f64> {
        let n = features.rows();
        let mut out = Vec::with_capacity(n);
        let chunk = CHUNK_ROWS.min(n.max(1));
        let mut scratch = Scratch::new(&self.dims, chunk);
        let mut start = 0;
        while start < n {
            let end = (start + chunk).min(n);
            scratch.load_rows(features, start..end);
            self.forward_scratch(end - start, &mut scratch);
            out.extend_from_slice(&scratch.acts[self.dims.len() - 1][..end - start]);
            start = end;
        }
        out
    }

    /// Forward pass over the rows already loaded in `scratch.acts[0]`.
    fn forward_scratch(&self, b: usize, scratch: &mut Scratch) {
        let (offsets, _) = layer_offsets(&self.dims);
        let last = offsets.len() - 1;
        for (l, &(w_off, b_off)) in offsets.iter().enumerate() {
            let (inn, out) = (self.dims[l], self.dims[l + 1]);
            let (prev, rest) = scratch.acts.split_at_mut(l + 1);
            let prev = &prev[l];
            let cur = &mut rest[0];
            for s in 0..b {
                let a = &prev[s * inn..(s + 1) * inn];
                let z = &mut cur[s * out..(s + 1) * out];
                for o in 0..out {
                    let w = &self.params[w_off + o * inn..w_off + (o + 1) * inn];
                    let mut acc = self.params[b_off + o];
                    for i in 0..inn {
                        acc += w[i] * a[i];
                    }
                    z[o] = if l < last { acc.max(0.0) } else { acc };
                }
            }
        }
    }

    /// Mean squared error and its gradient for the loaded batch. Returns the
    /// loss; gradients overwrite `scratch.grads`.
    fn backward_scratch(&self, b: usize, targets: &[f64], scratch: &mut Scratch) -> f64 {
        let (offsets, _) = layer_offsets(&self.dims);
        let n_layers = offsets.len();
        scratch.grads.iter_mut().for_each(|g| *g = 0.0);

        // Output deltas: d(mean (p - y)^2)/dz = 2 (p - y) / b.
        let preds = &scratch.acts[n_layers];
        let mut loss = 0.0;
        for s in 0..b {
            let r = preds[s] - targets[s];
            loss += r * r;
            scratch.deltas[n_layers][s] = 2.0 * r / b as f64;
        }
        loss /= b as f64;

        for l in (0..n_layers).rev() {
            let (w_off, b_off) = offsets[l];
            let (inn, out) = (self.dims[l], self.dims[l + 1]);
            {
                let acts_prev = &scratch.acts[l];
                let delta = &scratch.deltas[l + 1];
                let (gw, gb) = scratch.grads[w_off..].split_at_mut(inn * out);
                for s in 0..b {
                    let d = &delta[s * out..(s + 1) * out];
                    let a = &acts_prev[s * inn..(s + 1) * inn];
                    for o in 0..out {
                        let dv = d[o];
                        if dv != 0.0 {
                            let gw = &mut gw[o * inn..(o + 1) * inn];
                            for i in 0..inn {
                                gw[i] += dv * a[i];
                            }
                            gb[o] += dv;
                        }
                    }
                }
                let _ = b_off;
            }
            if l > 0 {
                let (lo, hi) = scratch.deltas.split_at_mut(l + 1);
                let delta = &hi[0];
                let dprev = &mut lo[l];
                let acts_prev = &scratch.acts[l];
                for s in 0..b {
                    let d = &delta[s * out..(s + 1) * out];
                    let dp = &mut dprev[s * inn..(s + 1) * inn];
                    dp.iter_mut().for_each(|v| *v = 0.0);
                    for o in 0..out {
                        let dv = d[o];
                        if dv != 0.0 {
                            let w = &self.params[w_off + o * inn..w_off + (o + 1) * inn];
                            for i in 0..inn {
                                dp[i] += dv * w[i];
                            }
                        }
                    }
                    // ReLU gate: gradient passes only through active units.
                    let a = &acts_prev[s * inn..(s + 1) * inn];
                    for i in 0..inn {
                        if a[i] <= 0.0 {
                            dp[i] = 0.0;
                        }
                    }
                }
            }
        }
        loss
    }
}

const CHUNK_ROWS: usize = 256;
const STREAM_INIT: u64 = 0x6d6c70_01;
const STREAM_SHUFFLE: u64 = 0x6d6c70_02;
const STREAM_HOLDOUT: u64 = 0x6d6c70_03;

struct Scratch {
    /// Per node layer, post-activation values for a chunk, batch-major.
    acts: Vec<Vec<f64>>,
    deltas: Vec<Vec<f64>>,
    grads: Vec<f64>,
}

impl Scratch {
    fn new(dims: &[usize], cap: usize) -> Scratch {
        let (_, total) = layer_offsets(dims);
        Scratch {
            acts: dims.iter().map(|&d| vec![0.0; cap * d]).collect(),
            deltas: dims.iter().map(|&d| vec![0.0; cap * d]).collect(),
            grads: vec![0.0; total],
        }
    }

    fn load_rows(&mut self, features: &Matrix, range: std::ops::Range<usize>) {
        let cols = features.cols();
        for (k, r) in range.enumerate() {
            self.acts[0][k * cols..(k + 1) * cols].copy_from_slice(features.row(r));
        }
    }

    fn load_indexed(&mut self, features: &Matrix, rows: &[usize]) {
        let cols = features.cols();
        for (k, &r) in rows.iter().enumerate() {
            self.acts[0][k * cols..(k + 1) * cols].copy_from_slice(features.row(r));
        }
    }
}

enum OptState {
    Adadelta { acc_g: Vec<f64>, acc_dx: Vec<f64> },
    Adam { m: Vec<f64>, v: Vec<f64>, t: u64 },
}

impl OptState {
    fn new(kind: &OptimizerKind, n: usize) -> OptState {
        match kind {
            OptimizerKind::Adadelta { .. } => OptState::Adadelta {
                acc_g: vec![0.0; n],
                acc_dx: vec![0.0; n],
            },
            OptimizerKind::Adam { .. } => OptState::Adam {
                m: vec![0.0; n],
                v: vec![0.0; n],
                t: 0,
            },
        }
    }

    fn step(&mut self, kind: &OptimizerKind, lr: f64, params: &mut [f64], grads: &[f64]) {
        match (self, kind) {
            (OptState::Adadelta { acc_g, acc_dx }, OptimizerKind::Adadelta { rho, eps, .. }) => {
                for i in 0..params.len() {
                    let g = grads[i];
                    acc_g[i] = rho * acc_g[i] + (1.0 - rho) * g * g;
                    let dx = -((acc_dx[i] + eps).sqrt() / (acc_g[i] + eps).sqrt()) * g;
                    acc_dx[i] = rho * acc_dx[i] + (1.0 - rho) * dx * dx;
                    params[i] += lr * dx;
                }
            }
            (
                OptState::Adam { m, v, t },
                OptimizerKind::Adam {
                    beta1, beta2, eps, ..
                },
            ) => {
                *t += 1;
                let b1t = 1.0 - beta1.powi(*t as i32);
                let b2t = 1.0 - beta2.powi(*t as i32);
                for i in 0..params.len() {
                    let g = grads[i];
                    m[i] = beta1 * m[i] + (1.0 - beta1) * g;
                    v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
                    let mhat = m[i] / b1t;
                    let vhat = v[i] / b2t;
                    params[i] -= lr * mhat / (vhat.sqrt() + eps);
                }
            }
            _ => unreachable!("optimizer state matches its kind by construction"),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_rmse: f64,
    pub lr: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct TrainLog {
    pub history: Vec<EpochStats>,
    pub best_epoch: usize,
    pub best_val_rmse: f64,
    pub stopped_early: bool,
}

fn mse(preds: &[f64], targets: &[f64]) -> f64 {
    debug_assert_eq!(preds.len(), targets.len());
    let n = preds.len().max(1) as f64;
    preds
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / n
}

/// Squared-error loss of the model on the given rows.
pub fn loss(model: &MlpModel, features: &Matrix, targets: &[f64]) -> f64 {
    mse(&model.forward_batch(features), targets)
}

/// Loss and the full flat gradient, analytically. The reference point for
/// finite-difference checks.
pub fn loss_and_gradient(model: &MlpModel, features: &Matrix, targets: &[f64]) -> (f64, Vec<f64>) {
    let b = features.rows();
    let mut scratch = Scratch::new(&model.dims, b);
    scratch.load_rows(features, 0..b);
    model.forward_scratch(b, &mut scratch);
    let loss = model.backward_scratch(b, targets, &mut scratch);
    (loss, scratch.grads)
}

/// Train a network on `(features, targets)`. With no explicit validation
/// split, a tenth of the rows (seeded shuffle) is held out; tiny inputs fall
/// back to validating on the training rows themselves.
pub fn fit_mlp(
    cfg: &MlpConfig,
    features: &Matrix,
    targets: &[f64],
    validation: Option<(&Matrix, &[f64])>,
    seed: u64,
) -> Result<(MlpModel, TrainLog)> {
    cfg.validate()?;
    if features.rows() == 0 || features.rows() != targets.len() {
        return Err(Error::invalid("features/targets size mismatch or empty"));
    }

    let holdout_store;
    let (tx, ty, vx, vy): (&Matrix, &[f64], &Matrix, &[f64]) = match validation {
        Some((vx, vy)) => {
            if vx.cols() != features.cols() {
                return Err(Error::invalid("validation feature width mismatch"));
            }
            if vx.rows() == 0 || vx.rows() != vy.len() {
                return Err(Error::invalid("validation set empty or mismatched"));
            }
            (features, targets, vx, vy)
        }
        None if features.rows() >= 10 => {
            let n = features.rows();
            let n_val = (n / 10).max(1);
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut seeds::rng(seeds::derive(seed, STREAM_HOLDOUT)));
            let (val_idx, train_idx) = order.split_at(n_val);
            holdout_store = (
                features.select_rows(train_idx),
                train_idx.iter().map(|&i| targets[i]).collect::<Vec<_>>(),
                features.select_rows(val_idx),
                val_idx.iter().map(|&i| targets[i]).collect::<Vec<_>>(),
            );
            (
                &holdout_store.0,
                &holdout_store.1,
                &holdout_store.2,
                &holdout_store.3,
            )
        }
        None => (features, targets, features, targets),
    };

    let mut model = MlpModel::init(features.cols(), &cfg.hidden, seed);
    let n = tx.rows();
    let batch = cfg.batch_size.min(n);
    let mut scratch = Scratch::new(&model.dims, batch);
    let mut opt = OptState::new(&cfg.optimizer, model.params.len());
    let mut shuffle_rng = seeds::rng(seeds::derive(seed, STREAM_SHUFFLE));

    let mut lr = cfg.optimizer.base_lr();
    let mut best = f64::INFINITY;
    let mut best_params = model.params.clone();
    let mut best_epoch = 0;
    let mut plateau_wait = 0;
    let mut stop_wait = 0;
    let mut log = TrainLog::default();
    let mut order: Vec<usize> = (0..n).collect();

    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        let mut batch_targets = Vec::with_capacity(batch);
        for rows in order.chunks(batch) {
            scratch.load_indexed(tx, rows);
            batch_targets.clear();
            batch_targets.extend(rows.iter().map(|&r| ty[r]));
            model.forward_scratch(rows.len(), &mut scratch);
            let l = model.backward_scratch(rows.len(), &batch_targets, &mut scratch);
            loss_sum += l * rows.len() as f64;
            opt.step(&cfg.optimizer, lr, &mut model.params, &scratch.grads);
        }
        let train_mse = loss_sum / n as f64;
        let val_rmse = loss(&model, vx, vy).sqrt();
        log.history.push(EpochStats {
            epoch,
            train_mse,
            val_rmse,
            lr,
        });

        if val_rmse < best {
            best = val_rmse;
            best_params.copy_from_slice(&model.params);
            best_epoch = epoch;
            plateau_wait = 0;
            stop_wait = 0;
        } else {
            plateau_wait += 1;
            stop_wait += 1;
            if plateau_wait >= cfg.plateau_patience && lr > cfg.min_lr {
                lr = (lr * cfg.plateau_factor).max(cfg.min_lr);
                plateau_wait = 0;
            }
            if stop_wait >= cfg.early_stop_patience {
                log.stopped_early = true;
                break;
            }
        }
    }

    model.params.copy_from_slice(&best_params);
    log.best_epoch = best_epoch;
    log.best_val_rmse = best;
    Ok((model, log))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_data(n: usize, seed: u64) -> (Matrix, Vec<f64>) {
        let mut rng = seeds::rng(seed);
        let x = Matrix::from_fn(n, 2, |_, _| rng.gen_range(-1.0..1.0));
        let y = x
            .iter_rows()
            .map(|r| 0.7 * r[0] - 0.3 * r[1] + 0.2)
            .collect();
        (x, y)
    }

    #[test]
    fn linear_fixture_is_exact() {
        // no hidden layers: f(x) = 2 x1 - 3 x2 + 0.5
        let m = MlpModel::from_params(2, &[], vec![2.0, -3.0, 0.5]).unwrap();
        assert_eq!(m.forward_row(&[1.0, 1.0]), -0.5);
        assert_eq!(m.forward_row(&[0.0, 0.0]), 0.5);
        assert_eq!(m.forward_row(&[2.0, 1.0]), 1.5);
    }

    #[test]
    fn relu_fixture_is_exact() {
        // one hidden unit: f(x) = 3 relu(2x - 1) + 0.5
        let m = MlpModel::from_params(1, &[1], vec![2.0, -1.0, 3.0, 0.5]).unwrap();
        assert_eq!(m.forward_row(&[0.0]), 0.5); // relu inactive
        assert_eq!(m.forward_row(&[1.0]), 3.5); // relu active
        assert_eq!(m.forward_row(&[0.5]), 0.5); // exactly at the kink
    }

    #[test]
    fn zeros_model_is_identically_zero() {
        let m = MlpModel::zeros(4, &[8, 8]);
        assert_eq!(m.forward_row(&[1.0, -2.0, 3.0, 4.0]), 0.0);
    }

    #[test]
    fn batch_forward_matches_row_forward() {
        let m = MlpModel::init(3, &[5, 4], 9);
        let mut rng = seeds::rng(3);
        let x = Matrix::from_fn(700, 3, |_, _| rng.gen_range(-2.0..2.0));
        let batch = m.forward_batch(&x);
        for (i, row) in x.iter_rows().enumerate() {
            assert_eq!(batch[i], m.forward_row(row), "row {i}");
        }
    }

    #[test]
    fn analytic_gradient_matches_central_differences() {
        let mut model = MlpModel::init(2, &[4, 3], 7);
        let mut rng = seeds::rng(11);
        let x = Matrix::from_fn(5, 2, |_, _| rng.gen_range(-1.0..1.0));
        let y: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();

        let (_, analytic) = loss_and_gradient(&model, &x, &y);
        let h = 1e-5;
        let base = model.params.clone();
        for i in 0..base.len() {
            let mut p = base.clone();
            p[i] = base[i] + h;
            model.set_params(&p).unwrap();
            let up = loss(&model, &x, &y);
            p[i] = base[i] - h;
            model.set_params(&p).unwrap();
            let down = loss(&model, &x, &y);
            let numeric = (up - down) / (2.0 * h);
            let denom = analytic[i].abs().max(numeric.abs()).max(1e-8);
            assert!(
                (analytic[i] - numeric).abs() / denom < 1e-4,
                "param {i}: analytic {} vs numeric {}",
                analytic[i],
                numeric
            );
        }
    }

    #[test]
    fn training_learns_a_linear_map() {
        let (x, y) = toy_data(200, 21);
        let cfg = MlpConfig {
            hidden: vec![16],
            max_epochs: 300,
            ..MlpConfig::default()
        };
        let (model, log) = fit_mlp(&cfg, &x, &y, None, 5).unwrap();
        let (tx, ty) = toy_data(100, 22);
        let rmse = loss(&model, &tx, &ty).sqrt();
        assert!(rmse < 0.05, "rmse {rmse}");
        assert!(!log.history.is_empty());
    }

    #[test]
    fn restored_weights_match_best_recorded_epoch() {
        let (x, y) = toy_data(80, 31);
        let (vx, vy) = toy_data(20, 32);
        let cfg = MlpConfig {
            hidden: vec![8],
            max_epochs: 120,
            ..MlpConfig::default()
        };
        let (model, log) = fit_mlp(&cfg, &x, &y, Some((&vx, &vy)), 6).unwrap();
        let min_recorded = log
            .history
            .iter()
            .map(|e| e.val_rmse)
            .fold(f64::INFINITY, f64::min);
        let restored = loss(&model, &vx, &vy).sqrt();
        assert_eq!(restored, log.best_val_rmse);
        assert_eq!(log.best_val_rmse, min_recorded);
    }

    #[test]
    fn learning_rate_only_halves_or_holds() {
        let (x, _) = toy_data(60, 41);
        // Unlearnable noise targets keep validation flat, forcing plateaus.
        let mut rng = seeds::rng(42);
        let y: Vec<f64> = (0..60).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let cfg = MlpConfig {
            hidden: vec![4],
            max_epochs: 200,
            plateau_patience: 5,
            early_stop_patience: 1000,
            ..MlpConfig::default()
        };
        let (_, log) = fit_mlp(&cfg, &x, &y, None, 13).unwrap();
        for pair in log.history.windows(2) {
            let (a, b) = (pair[0].lr, pair[1].lr);
            assert!(
                b == a || b == (a * 0.5).max(cfg.min_lr),
                "lr moved {a} -> {b}"
            );
        }
        let min_lr_seen = log.history.iter().map(|e| e.lr).fold(f64::INFINITY, f64::min);
        assert!(
            min_lr_seen < cfg.optimizer.base_lr(),
            "expected at least one halving on noise targets"
        );
    }

    #[test]
    fn early_stopping_fires_on_stagnation() {
        let (x, _) = toy_data(60, 51);
        let mut rng = seeds::rng(52);
        let y: Vec<f64> = (0..60).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let cfg = MlpConfig {
            hidden: vec![4],
            max_epochs: 2000,
            early_stop_patience: 10,
            ..MlpConfig::default()
        };
        let (_, log) = fit_mlp(&cfg, &x, &y, None, 14).unwrap();
        assert!(log.stopped_early);
        assert!(log.history.len() < 2000);
    }

    #[test]
    fn same_seed_same_fit() {
        let (x, y) = toy_data(50, 61);
        let cfg = MlpConfig {
            hidden: vec![6],
            max_epochs: 20,
            ..MlpConfig::default()
        };
        let (a, _) = fit_mlp(&cfg, &x, &y, None, 99).unwrap();
        let (b, _) = fit_mlp(&cfg, &x, &y, None, 99).unwrap();
        let (c, _) = fit_mlp(&cfg, &x, &y, None, 100).unwrap();
        assert_eq!(a.params(), b.params());
        assert_ne!(a.params(), c.params());
    }

    #[test]
    fn config_validation() {
        let bad = MlpConfig {
            batch_size: 0,
            ..MlpConfig::default()
        };
        let (x, y) = toy_data(10, 1);
        assert!(fit_mlp(&bad, &x, &y, None, 0).is_err());
    }
}
