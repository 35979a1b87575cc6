//! Feed-forward re-ranker trained from scratch: rectified-linear hidden
//! layers with optional batch normalization and inverted dropout, a sigmoid
//! output trained with class-weighted binary cross-entropy on logits, and
//! Adam updates with decoupled weight decay.
//!
//! Everything is seeded through [`SplitMix64`]; parallel matrix kernels
//! keep a fixed per-cell summation order, so training is bit-reproducible
//! regardless of thread count.

#![allow(clippy::needless_range_loop)]

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{enrichment_factor, RankedLibrary};
use crate::num::Real;
use crate::rng::SplitMix64;

use super::features::FeatureMatrix;

const BN_EPS: f64 = 1e-5;
const BN_MOMENTUM: f64 = 0.1;

/// Architecture and optimizer settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetConfig<F: Real> {
    pub name: String,
    /// Hidden widths plus the final output width (always 1).
    pub layer_widths: Vec<usize>,
    /// Dropout rate per hidden layer.
    pub dropout: Vec<F>,
    /// Batch-normalize every hidden layer.
    pub batch_norm: bool,
    pub learning_rate: F,
    /// Decoupled weight decay, applied to dense weights only.
    pub weight_decay: F,
    pub beta1: F,
    pub beta2: F,
    pub epsilon: F,
    pub max_epochs: usize,
    /// Early-stopping patience on validation EF1%.
    pub patience: usize,
    /// Batch size is ceil(N_train / batches_per_epoch).
    pub batches_per_epoch: usize,
    pub seed: u64,
}

impl<F: Real> NetConfig<F> {
    /// Wide network: 512-256-128-1, batch norm, adaptive dropout.
    pub fn wide(seed: u64) -> Self {
        Self {
            name: "wide".to_string(),
            layer_widths: vec![512, 256, 128, 1],
            dropout: [0.3, 0.21, 0.15].iter().map(|&d| F::from_f64_lossy(d)).collect(),
            batch_norm: true,
            ..Self::base(seed)
        }
    }

    /// Deep MLP: 256-128-64-1, fixed dropout, no batch norm.
    pub fn deep(seed: u64) -> Self {
        Self {
            name: "deep".to_string(),
            layer_widths: vec![256, 128, 64, 1],
            dropout: [0.3, 0.2, 0.1].iter().map(|&d| F::from_f64_lossy(d)).collect(),
            batch_norm: false,
            ..Self::base(seed)
        }
    }

    fn base(seed: u64) -> Self {
        Self {
            name: "custom".to_string(),
            layer_widths: vec![32, 1],
            dropout: vec![F::zero()],
            batch_norm: false,
            learning_rate: F::from_f64_lossy(0.001),
            weight_decay: F::from_f64_lossy(1e-5),
            beta1: F::from_f64_lossy(0.9),
            beta2: F::from_f64_lossy(0.999),
            epsilon: F::from_f64_lossy(1e-8),
            max_epochs: 30,
            patience: 5,
            batches_per_epoch: 4,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_widths.is_empty() || *self.layer_widths.last().unwrap() != 1 {
            return Err(Error::Config("layer widths must end in a single output unit".to_string()));
        }
        if self.layer_widths.contains(&0) {
            return Err(Error::Config("layer widths must be positive".to_string()));
        }
        if self.dropout.len() != self.layer_widths.len() - 1 {
            return Err(Error::Config(format!(
                "{} dropout rates for {} hidden layers",
                self.dropout.len(),
                self.layer_widths.len() - 1
            )));
        }
        if self.dropout.iter().any(|&d| d < F::zero() || d >= F::one()) {
            return Err(Error::Config("dropout rates must be in [0, 1)".to_string()));
        }
        if self.max_epochs == 0 {
            return Err(Error::Config("max_epochs must be >= 1".to_string()));
        }
        if self.batches_per_epoch == 0 {
            return Err(Error::Config("batches_per_epoch must be >= 1".to_string()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseParams<F: Real> {
    pub in_dim: usize,
    pub out_dim: usize,
    /// Row-major `[in_dim][out_dim]`.
    pub w: Vec<F>,
    pub b: Vec<F>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchNormParams<F: Real> {
    pub gamma: Vec<F>,
    pub beta: Vec<F>,
    pub running_mean: Vec<F>,
    pub running_var: Vec<F>,
}

/// The network parameters: dense layers (hidden plus output) with optional
/// batch norm on each hidden layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp<F: Real> {
    pub input_dim: usize,
    pub dense: Vec<DenseParams<F>>,
    pub batch_norm: Vec<Option<BatchNormParams<F>>>,
}

/// Gradients mirroring [`Mlp`]'s parameter layout.
#[derive(Debug, Clone)]
pub struct Gradients<F: Real> {
    pub dense: Vec<(Vec<F>, Vec<F>)>,
    pub batch_norm: Vec<Option<(Vec<F>, Vec<F>)>>,
}

/// Per-layer batch mean and variance captured during a training forward
/// pass (None where batch norm is off).
pub type BatchStats<F> = Vec<Option<(Vec<F>, Vec<F>)>>;

fn sigmoid<F: Real>(x: F) -> F {
    if x >= F::zero() {
        F::one() / (F::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (F::one() + e)
    }
}

fn softplus<F: Real>(x: F) -> F {
    x.max(F::zero()) + (-x.abs()).exp().ln_1p()
}

// --- parallel kernels; each output cell sums in fixed row order ---

fn dense_forward<F: Real>(x: &[F], rows: usize, layer: &DenseParams<F>, out: &mut Vec<F>) {
    let (d_in, d_out) = (layer.in_dim, layer.out_dim);
    out.clear();
    out.resize(rows * d_out, F::zero());
    out.par_chunks_mut(d_out).enumerate().for_each(|(r, yr)| {
        yr.copy_from_slice(&layer.b);
        let xr = &x[r * d_in..(r + 1) * d_in];
        for (j, &xj) in xr.iter().enumerate() {
            let wrow = &layer.w[j * d_out..(j + 1) * d_out];
            for (c, &wv) in wrow.iter().enumerate() {
                yr[c] = yr[c] + xj * wv;
            }
        }
    });
}

fn dense_backward_dx<F: Real>(delta: &[F], rows: usize, layer: &DenseParams<F>, dx: &mut Vec<F>) {
    let (d_in, d_out) = (layer.in_dim, layer.out_dim);
    dx.clear();
    dx.resize(rows * d_in, F::zero());
    dx.par_chunks_mut(d_in).enumerate().for_each(|(r, dxr)| {
        let dr = &delta[r * d_out..(r + 1) * d_out];
        for (j, slot) in dxr.iter_mut().enumerate() {
            let wrow = &layer.w[j * d_out..(j + 1) * d_out];
            let mut acc = F::zero();
            for (c, &wv) in wrow.iter().enumerate() {
                acc = acc + dr[c] * wv;
            }
            *slot = acc;
        }
    });
}

fn dense_backward_dw<F: Real>(
    x: &[F],
    rows: usize,
    delta: &[F],
    layer: &DenseParams<F>,
) -> (Vec<F>, Vec<F>) {
    let (d_in, d_out) = (layer.in_dim, layer.out_dim);
    let mut dw = vec![F::zero(); d_in * d_out];
    dw.par_chunks_mut(d_out).enumerate().for_each(|(j, dwj)| {
        for r in 0..rows {
            let xj = x[r * d_in + j];
            let dr = &delta[r * d_out..(r + 1) * d_out];
            for (c, &dv) in dr.iter().enumerate() {
                dwj[c] = dwj[c] + xj * dv;
            }
        }
    });
    let mut db = vec![F::zero(); d_out];
    for r in 0..rows {
        let dr = &delta[r * d_out..(r + 1) * d_out];
        for (c, &dv) in dr.iter().enumerate() {
            db[c] = db[c] + dv;
        }
    }
    (dw, db)
}

struct LayerCache<F> {
    /// Layer output after relu and dropout (input to the next layer).
    out: Vec<F>,
    /// Inverted dropout mask, if dropout was active.
    mask: Option<Vec<F>>,
    /// Batch-norm cache: normalized values and batch variance.
    bn_xhat: Option<Vec<F>>,
    bn_var: Option<Vec<F>>,
    bn_mean: Option<Vec<F>>,
}

pub struct ForwardOutcome<F: Real> {
    pub logits: Vec<F>,
    caches: Vec<LayerCache<F>>,
}

impl<F: Real> Mlp<F> {
    /// He-style seeded initialization: w ~ N(0, 2/fan_in), biases zero,
    /// batch-norm gamma 1 / beta 0.
    pub fn init(input_dim: usize, config: &NetConfig<F>, rng: &mut SplitMix64) -> Result<Self> {
        config.validate()?;
        if input_dim == 0 {
            return Err(Error::Config("input dimension must be positive".to_string()));
        }
        let mut dense = Vec::new();
        let mut batch_norm = Vec::new();
        let mut d_in = input_dim;
        let n_layers = config.layer_widths.len();
        for (l, &d_out) in config.layer_widths.iter().enumerate() {
            let scale = (2.0 / d_in as f64).sqrt();
            let w: Vec<F> = (0..d_in * d_out)
                .map(|_| F::from_f64_lossy(rng.next_gaussian() * scale))
                .collect();
            dense.push(DenseParams {
                in_dim: d_in,
                out_dim: d_out,
                w,
                b: vec![F::zero(); d_out],
            });
            let is_hidden = l + 1 < n_layers;
            batch_norm.push(if is_hidden && config.batch_norm {
                Some(BatchNormParams {
                    gamma: vec![F::one(); d_out],
                    beta: vec![F::zero(); d_out],
                    running_mean: vec![F::zero(); d_out],
                    running_var: vec![F::one(); d_out],
                })
            } else {
                None
            });
            d_in = d_out;
        }
        Ok(Self {
            input_dim,
            dense,
            batch_norm,
        })
    }

    pub fn hidden_count(&self) -> usize {
        self.dense.len() - 1
    }

    /// Pure training-mode forward pass. `masks` holds one inverted-dropout
    /// mask per hidden layer (None = dropout off for that layer). Batch
    /// statistics are computed from the batch; running statistics are not
    /// touched here.
    fn forward_train(&self, x: &[F], rows: usize, masks: &[Option<Vec<F>>]) -> ForwardOutcome<F> {
        let mut caches = Vec::with_capacity(self.hidden_count());
        let mut input = x.to_vec();
        let mut z = Vec::new();
        for l in 0..self.hidden_count() {
            let layer = &self.dense[l];
            dense_forward(&input, rows, layer, &mut z);
            let d_out = layer.out_dim;

            let (bn_xhat, bn_var, bn_mean) = if let Some(bn) = &self.batch_norm[l] {
                let inv_rows = F::one() / F::from_count(rows);
                let mut mean = vec![F::zero(); d_out];
                for r in 0..rows {
                    for c in 0..d_out {
                        mean[c] = mean[c] + z[r * d_out + c];
                    }
                }
                for m in mean.iter_mut() {
                    *m = *m * inv_rows;
                }
                let mut var = vec![F::zero(); d_out];
                for r in 0..rows {
                    for c in 0..d_out {
                        let d = z[r * d_out + c] - mean[c];
                        var[c] = var[c] + d * d;
                    }
                }
                for v in var.iter_mut() {
                    *v = *v * inv_rows;
                }
                let eps = F::from_f64_lossy(BN_EPS);
                let inv_std: Vec<F> = var.iter().map(|&v| F::one() / (v + eps).sqrt()).collect();
                let mut xhat = vec![F::zero(); rows * d_out];
                for r in 0..rows {
                    for c in 0..d_out {
                        let idx = r * d_out + c;
                        xhat[idx] = (z[idx] - mean[c]) * inv_std[c];
                        z[idx] = bn.gamma[c] * xhat[idx] + bn.beta[c];
                    }
                }
                (Some(xhat), Some(var), Some(mean))
            } else {
                (None, None, None)
            };

            // relu then inverted dropout
            let mask = masks.get(l).and_then(|m| m.as_ref());
            let mut out = vec![F::zero(); rows * d_out];
            for (idx, slot) in out.iter_mut().enumerate() {
                let mut v = z[idx].max(F::zero());
                if let Some(m) = mask {
                    v = v * m[idx];
                }
                *slot = v;
            }
            caches.push(LayerCache {
                out: out.clone(),
                mask: mask.cloned(),
                bn_xhat,
                bn_var,
                bn_mean,
            });
            input = out;
        }
        let mut logits = Vec::new();
        dense_forward(&input, rows, self.dense.last().unwrap(), &mut logits);
        ForwardOutcome { logits, caches }
    }

    /// Inference-mode forward: no dropout, batch norm on running statistics.
    pub fn forward_eval(&self, x: &[F], rows: usize) -> Vec<F> {
        let mut input = x.to_vec();
        let mut z = Vec::new();
        for l in 0..self.hidden_count() {
            let layer = &self.dense[l];
            dense_forward(&input, rows, layer, &mut z);
            let d_out = layer.out_dim;
            if let Some(bn) = &self.batch_norm[l] {
                let eps = F::from_f64_lossy(BN_EPS);
                let inv_std: Vec<F> = bn
                    .running_var
                    .iter()
                    .map(|&v| F::one() / (v + eps).sqrt())
                    .collect();
                for r in 0..rows {
                    for c in 0..d_out {
                        let idx = r * d_out + c;
                        z[idx] = bn.gamma[c] * (z[idx] - bn.running_mean[c]) * inv_std[c] + bn.beta[c];
                    }
                }
            }
            input = z.iter().map(|&v| v.max(F::zero())).collect();
        }
        let mut logits = Vec::new();
        dense_forward(&input, rows, self.dense.last().unwrap(), &mut logits);
        logits
    }

    /// Sigmoid probabilities in inference mode.
    pub fn predict_proba(&self, x: &[F], rows: usize) -> Vec<F> {
        self.forward_eval(x, rows).into_iter().map(sigmoid).collect()
    }

    /// Mean class-weighted BCE loss of a training-mode forward pass.
    pub fn loss(&self, x: &[F], rows: usize, labels: &[bool], pos_weight: F, masks: &[Option<Vec<F>>]) -> F {
        let fwd = self.forward_train(x, rows, masks);
        let mut total = F::zero();
        for (r, &y) in labels.iter().enumerate() {
            let z = fwd.logits[r];
            total = total
                + if y {
                    pos_weight * softplus(-z)
                } else {
                    softplus(z)
                };
        }
        total / F::from_count(rows)
    }

    /// Loss, gradients, and (when batch norm is active) the batch statistics
    /// needed to advance the running estimates. Pure in `self`.
    pub fn loss_and_grads(
        &self,
        x: &[F],
        rows: usize,
        labels: &[bool],
        pos_weight: F,
        masks: &[Option<Vec<F>>],
    ) -> (F, Gradients<F>, BatchStats<F>) {
        let fwd = self.forward_train(x, rows, masks);
        let inv_rows = F::one() / F::from_count(rows);

        let mut loss = F::zero();
        let mut delta = vec![F::zero(); rows];
        for (r, &y) in labels.iter().enumerate() {
            let z = fwd.logits[r];
            if y {
                loss = loss + pos_weight * softplus(-z);
                delta[r] = -pos_weight * sigmoid(-z) * inv_rows;
            } else {
                loss = loss + softplus(z);
                delta[r] = sigmoid(z) * inv_rows;
            }
        }
        loss = loss * inv_rows;

        let n_dense = self.dense.len();
        let mut dense_grads: Vec<(Vec<F>, Vec<F>)> = vec![(Vec::new(), Vec::new()); n_dense];
        let mut bn_grads: Vec<Option<(Vec<F>, Vec<F>)>> = vec![None; n_dense];
        let mut bn_stats: BatchStats<F> = vec![None; n_dense];

        // output layer
        let last_in = if self.hidden_count() == 0 {
            x
        } else {
            &fwd.caches[self.hidden_count() - 1].out
        };
        let out_layer = &self.dense[n_dense - 1];
        dense_grads[n_dense - 1] = dense_backward_dw(last_in, rows, &delta, out_layer);
        let mut da = Vec::new();
        dense_backward_dx(&delta, rows, out_layer, &mut da);

        // hidden layers, last to first
        for l in (0..self.hidden_count()).rev() {
            let cache = &fwd.caches[l];
            let layer = &self.dense[l];
            let d_out = layer.out_dim;

            // through dropout and relu: zero where the unit was inactive
            let mut dh = da;
            for (idx, g) in dh.iter_mut().enumerate() {
                if let Some(m) = &cache.mask {
                    *g = *g * m[idx];
                }
                if cache.out[idx] <= F::zero() {
                    *g = F::zero();
                }
            }

            // through batch norm
            let dz = if let Some(bn) = &self.batch_norm[l] {
                let xhat = cache.bn_xhat.as_ref().unwrap();
                let var = cache.bn_var.as_ref().unwrap();
                let mean = cache.bn_mean.as_ref().unwrap();
                let eps = F::from_f64_lossy(BN_EPS);
                let rows_f = F::from_count(rows);

                let mut dgamma = vec![F::zero(); d_out];
                let mut dbeta = vec![F::zero(); d_out];
                for r in 0..rows {
                    for c in 0..d_out {
                        let idx = r * d_out + c;
                        dbeta[c] = dbeta[c] + dh[idx];
                        dgamma[c] = dgamma[c] + dh[idx] * xhat[idx];
                    }
                }
                let mut dz = vec![F::zero(); rows * d_out];
                for c in 0..d_out {
                    let inv_std = F::one() / (var[c] + eps).sqrt();
                    let k = bn.gamma[c] * inv_std / rows_f;
                    for r in 0..rows {
                        let idx = r * d_out + c;
                        dz[idx] = k * (rows_f * dh[idx] - dbeta[c] - xhat[idx] * dgamma[c]);
                    }
                }
                bn_grads[l] = Some((dgamma, dbeta));
                bn_stats[l] = Some((mean.clone(), var.clone()));
                dz
            } else {
                dh
            };

            let layer_in = if l == 0 { x } else { &fwd.caches[l - 1].out };
            dense_grads[l] = dense_backward_dw(layer_in, rows, &dz, layer);
            da = Vec::new();
            if l > 0 {
                dense_backward_dx(&dz, rows, layer, &mut da);
            }
        }

        (
            loss,
            Gradients {
                dense: dense_grads,
                batch_norm: bn_grads,
            },
            bn_stats,
        )
    }

    fn update_running_stats(&mut self, bn_stats: &BatchStats<F>) {
        let momentum = F::from_f64_lossy(BN_MOMENTUM);
        let keep = F::one() - momentum;
        for (slot, stats) in self.batch_norm.iter_mut().zip(bn_stats) {
            if let (Some(bn), Some((mean, var))) = (slot.as_mut(), stats.as_ref()) {
                for c in 0..bn.running_mean.len() {
                    bn.running_mean[c] = keep * bn.running_mean[c] + momentum * mean[c];
                    bn.running_var[c] = keep * bn.running_var[c] + momentum * var[c];
                }
            }
        }
    }

    /// Flat parameter view for gradient checking: per layer weights, bias,
    /// then batch-norm gamma and beta.
    pub fn param_count(&self) -> usize {
        self.dense
            .iter()
            .map(|d| d.w.len() + d.b.len())
            .chain(self.batch_norm.iter().flatten().map(|bn| bn.gamma.len() + bn.beta.len()))
            .sum()
    }

    fn locate_param(&self, mut idx: usize) -> ParamSlot {
        for (l, d) in self.dense.iter().enumerate() {
            if idx < d.w.len() {
                return ParamSlot::Weight(l, idx);
            }
            idx -= d.w.len();
            if idx < d.b.len() {
                return ParamSlot::Bias(l, idx);
            }
            idx -= d.b.len();
        }
        for (l, bn) in self.batch_norm.iter().enumerate() {
            let Some(bn) = bn else { continue };
            if idx < bn.gamma.len() {
                return ParamSlot::Gamma(l, idx);
            }
            idx -= bn.gamma.len();
            if idx < bn.beta.len() {
                return ParamSlot::Beta(l, idx);
            }
            idx -= bn.beta.len();
        }
        panic!("parameter index out of range");
    }

    fn param_slot(&mut self, idx: usize) -> &mut F {
        match self.locate_param(idx) {
            ParamSlot::Weight(l, i) => &mut self.dense[l].w[i],
            ParamSlot::Bias(l, i) => &mut self.dense[l].b[i],
            ParamSlot::Gamma(l, i) => &mut self.batch_norm[l].as_mut().unwrap().gamma[i],
            ParamSlot::Beta(l, i) => &mut self.batch_norm[l].as_mut().unwrap().beta[i],
        }
    }

    pub fn get_param(&mut self, idx: usize) -> F {
        *self.param_slot(idx)
    }

    pub fn set_param(&mut self, idx: usize, value: F) {
        *self.param_slot(idx) = value;
    }
}

impl<F: Real> Gradients<F> {
    /// Gradient for the flat parameter index layout of [`Mlp::param_count`].
    pub fn get(&self, mut idx: usize) -> F {
        for (dw, db) in &self.dense {
            if idx < dw.len() {
                return dw[idx];
            }
            idx -= dw.len();
            if idx < db.len() {
                return db[idx];
            }
            idx -= db.len();
        }
        for (dgamma, dbeta) in self.batch_norm.iter().flatten() {
            if idx < dgamma.len() {
                return dgamma[idx];
            }
            idx -= dgamma.len();
            if idx < dbeta.len() {
                return dbeta[idx];
            }
            idx -= dbeta.len();
        }
        panic!("gradient index out of range");
    }
}

/// Max relative error between analytic and central finite-difference
/// gradients over the given flat parameter indices. Pairs where both
/// magnitudes are below 1e-10 count as matching.
pub fn gradient_check<F: Real>(
    mlp: &Mlp<F>,
    x: &[F],
    rows: usize,
    labels: &[bool],
    pos_weight: F,
    param_indices: &[usize],
    step: F,
) -> F {
    let (_, grads, _) = mlp.loss_and_grads(x, rows, labels, pos_weight, &no_dropout(mlp));
    let mut probe = mlp.clone();
    let mut worst = F::zero();
    for &idx in param_indices {
        let original = probe.get_param(idx);
        probe.set_param(idx, original + step);
        let up = probe.loss(x, rows, labels, pos_weight, &no_dropout(mlp));
        probe.set_param(idx, original - step);
        let down = probe.loss(x, rows, labels, pos_weight, &no_dropout(mlp));
        probe.set_param(idx, original);
        let numeric = (up - down) / (step + step);
        let analytic = grads.get(idx);
        let scale = analytic.abs().max(numeric.abs());
        if scale < F::from_f64_lossy(1e-10) {
            continue;
        }
        let rel = (analytic - numeric).abs() / scale;
        worst = worst.max(rel);
    }
    worst
}

fn no_dropout<F: Real>(mlp: &Mlp<F>) -> Vec<Option<Vec<F>>> {
    vec![None; mlp.hidden_count()]
}

enum ParamSlot {
    Weight(usize, usize),
    Bias(usize, usize),
    Gamma(usize, usize),
    Beta(usize, usize),
}

struct AdamState<F: Real> {
    m: Vec<F>,
    v: Vec<F>,
    step: usize,
}

impl<F: Real> AdamState<F> {
    fn new(len: usize) -> Self {
        Self {
            m: vec![F::zero(); len],
            v: vec![F::zero(); len],
            step: 0,
        }
    }

    fn apply(&mut self, params: &mut [F], grads: &[F], config: &NetConfig<F>, decay: bool) {
        let t = self.step as i32;
        let bc1 = F::one() - config.beta1.powi(t);
        let bc2 = F::one() - config.beta2.powi(t);
        for ((p, &g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            *m = config.beta1 * *m + (F::one() - config.beta1) * g;
            *v = config.beta2 * *v + (F::one() - config.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            let mut update = config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
            if decay {
                update = update + config.learning_rate * config.weight_decay * *p;
            }
            *p = *p - update;
        }
    }
}

/// Per-epoch training record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog<F: Real> {
    pub epoch: usize,
    pub train_loss: F,
    pub val_ef1: F,
    pub best: bool,
}

/// What training produced: best-epoch parameters, the log, and the class
/// weight that was applied.
#[derive(Debug, Clone)]
pub struct TrainingOutcome<F: Real> {
    pub mlp: Mlp<F>,
    pub log: Vec<EpochLog<F>>,
    pub best_epoch: usize,
    pub pos_weight: F,
}

/// Rank validation rows by predicted score (descending, ties by row index)
/// and compute EF1%.
pub fn validation_ef1<F: Real>(scores: &[F], labels: &[bool]) -> Result<F> {
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Training("non-finite validation prediction".to_string()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
    let ranked: Vec<bool> = order.iter().map(|&i| labels[i]).collect();
    let lib = RankedLibrary::full(ranked)?;
    enrichment_factor(&lib, F::one())
}

/// Train with seeded shuffling into `batches_per_epoch` batches, weighted
/// BCE (positive-class weight = inactives/actives in train), Adam with
/// decoupled weight decay, and early stopping on validation EF1%. Inputs
/// must already be scaled. Returns the best-EF1% epoch's parameters.
pub fn train_mlp<F: Real>(
    train: &FeatureMatrix<F>,
    validation: &FeatureMatrix<F>,
    config: &NetConfig<F>,
) -> Result<TrainingOutcome<F>> {
    config.validate()?;
    if validation.n_rows() == 0 {
        return Err(Error::Argument("empty validation split".to_string()));
    }
    if train.width() != validation.width() {
        return Err(Error::Shape(format!(
            "train width {} vs validation width {}",
            train.width(),
            validation.width()
        )));
    }
    let n = train.n_rows();
    let n_pos = train.labels.iter().filter(|&&y| y).count();
    let n_neg = n - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Argument("training split needs both classes".to_string()));
    }
    if !validation.labels.iter().any(|&y| y) {
        return Err(Error::Argument("validation split has no actives; EF1% undefined".to_string()));
    }
    let pos_weight = F::from_count(n_neg) / F::from_count(n_pos);

    let mut rng = SplitMix64::new(config.seed);
    let mut mlp = Mlp::init(train.width(), config, &mut rng)?;

    let mut adam_w: Vec<AdamState<F>> = mlp.dense.iter().map(|d| AdamState::new(d.w.len())).collect();
    let mut adam_b: Vec<AdamState<F>> = mlp.dense.iter().map(|d| AdamState::new(d.b.len())).collect();
    let mut adam_bn: Vec<Option<(AdamState<F>, AdamState<F>)>> = mlp
        .batch_norm
        .iter()
        .map(|bn| bn.as_ref().map(|b| (AdamState::new(b.gamma.len()), AdamState::new(b.beta.len()))))
        .collect();

    let batch_size = n.div_ceil(config.batches_per_epoch);
    let width = train.width();
    let mut indices: Vec<usize> = (0..n).collect();

    let mut log: Vec<EpochLog<F>> = Vec::new();
    let mut best: Option<(Mlp<F>, usize, F)> = None;
    let mut epochs_without_improvement = 0usize;

    for epoch in 1..=config.max_epochs {
        rng.shuffle(&mut indices);
        let mut epoch_loss_sum = F::zero();

        for (batch_no, batch) in indices.chunks(batch_size).enumerate() {
            let rows = batch.len();
            let mut x = Vec::with_capacity(rows * width);
            let mut y = Vec::with_capacity(rows);
            for &i in batch {
                x.extend_from_slice(train.row(i));
                y.push(train.labels[i]);
            }
            // dropout masks drawn in layer order from the single stream
            let masks: Vec<Option<Vec<F>>> = (0..mlp.hidden_count())
                .map(|l| {
                    let p = config.dropout[l].to_f64().unwrap_or(0.0);
                    if p == 0.0 {
                        return None;
                    }
                    let keep_scale = F::from_f64_lossy(1.0 / (1.0 - p));
                    let d_out = mlp.dense[l].out_dim;
                    Some(
                        (0..rows * d_out)
                            .map(|_| if rng.next_f64() < p { F::zero() } else { keep_scale })
                            .collect(),
                    )
                })
                .collect();

            let (loss, grads, bn_stats) = mlp.loss_and_grads(&x, rows, &y, pos_weight, &masks);
            if !loss.is_finite() {
                return Err(Error::Training(format!(
                    "non-finite loss at epoch {epoch}, batch {}",
                    batch_no + 1
                )));
            }
            epoch_loss_sum = epoch_loss_sum + loss * F::from_count(rows);

            for (l, (dw, db)) in grads.dense.iter().enumerate() {
                adam_w[l].step += 1;
                adam_w[l].apply(&mut mlp.dense[l].w, dw, config, true);
                adam_b[l].step += 1;
                adam_b[l].apply(&mut mlp.dense[l].b, db, config, false);
            }
            for (l, bn_grad) in grads.batch_norm.iter().enumerate() {
                if let (Some((dgamma, dbeta)), Some((sg, sb)), Some(bn)) =
                    (bn_grad, adam_bn[l].as_mut(), mlp.batch_norm[l].as_mut())
                {
                    sg.step += 1;
                    sg.apply(&mut bn.gamma, dgamma, config, false);
                    sb.step += 1;
                    sb.apply(&mut bn.beta, dbeta, config, false);
                }
            }
            mlp.update_running_stats(&bn_stats);
        }

        let train_loss = epoch_loss_sum / F::from_count(n);
        let val_scores = mlp.predict_proba(validation.values(), validation.n_rows());
        let val_ef1 = validation_ef1(&val_scores, &validation.labels)?;

        let improved = best.as_ref().is_none_or(|(_, _, b)| val_ef1 > *b);
        log.push(EpochLog {
            epoch,
            train_loss,
            val_ef1,
            best: false,
        });
        if improved {
            best = Some((mlp.clone(), epoch, val_ef1));
            epochs_without_improvement = 0;
        } else {
            epochs_without_improvement += 1;
            if epochs_without_improvement >= config.patience {
                break;
            }
        }
    }

    let (best_mlp, best_epoch, _) = best.expect("at least one epoch ran");
    for entry in log.iter_mut() {
        entry.best = entry.epoch == best_epoch;
    }
    Ok(TrainingOutcome {
        mlp: best_mlp,
        log,
        best_epoch,
        pos_weight,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::roc_auc;

    fn toy_separable(n: usize, seed: u64) -> FeatureMatrix<f64> {
        // two features; class decided by their sum plus light noise
        let mut rng = SplitMix64::new(seed);
        let mut rows = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let y = i % 2 == 0;
            let base = if y { 1.5 } else { -1.5 };
            rows.push(vec![
                base + 0.3 * rng.next_gaussian(),
                base + 0.3 * rng.next_gaussian(),
            ]);
            labels.push(y);
        }
        FeatureMatrix::from_rows(vec!["f0".into(), "f1".into()], rows, labels).unwrap()
    }

    fn small_config(seed: u64) -> NetConfig<f64> {
        let mut c = NetConfig::deep(seed);
        c.layer_widths = vec![16, 8, 1];
        c.dropout = vec![0.0, 0.0];
        c
    }

    #[test]
    fn wide_config_echo() {
        let c: NetConfig<f64> = NetConfig::wide(1);
        assert_eq!(c.layer_widths, vec![512, 256, 128, 1]);
        assert_eq!(c.dropout, vec![0.3, 0.21, 0.15]);
        assert!(c.batch_norm);
        assert_eq!(c.learning_rate, 0.001);
        assert_eq!(c.weight_decay, 1e-5);
        assert_eq!(c.max_epochs, 30);
        assert_eq!(c.batches_per_epoch, 4);
    }

    #[test]
    fn deep_config_echo() {
        let c: NetConfig<f64> = NetConfig::deep(1);
        assert_eq!(c.layer_widths, vec![256, 128, 64, 1]);
        assert_eq!(c.dropout, vec![0.3, 0.2, 0.1]);
        assert!(!c.batch_norm);
    }

    #[test]
    fn separable_toy_reaches_high_auc() {
        let train = toy_separable(200, 3);
        let val = toy_separable(60, 4);
        let out = train_mlp(&train, &val, &small_config(11)).unwrap();
        let scores = out.mlp.predict_proba(train.values(), train.n_rows());
        let auc = roc_auc(&scores, &train.labels).unwrap();
        assert!(auc >= 0.99, "training AUC {auc}");
        assert!(out.log.len() <= 30);
    }

    #[test]
    fn loss_decreases_on_separable_toy() {
        let train = toy_separable(200, 5);
        let val = toy_separable(60, 6);
        let mut config = small_config(12);
        config.patience = 30; // observe the full trajectory
        let out = train_mlp(&train, &val, &config).unwrap();
        let losses: Vec<f64> = out.log.iter().take(5).map(|e| e.train_loss).collect();
        for w in losses.windows(2) {
            assert!(w[1] < w[0], "loss did not decrease: {losses:?}");
        }
    }

    #[test]
    fn class_weight_is_one_for_balanced_classes() {
        let train = toy_separable(100, 7);
        let val = toy_separable(40, 8);
        let out = train_mlp(&train, &val, &small_config(13)).unwrap();
        assert_eq!(out.pos_weight, 1.0);
    }

    #[test]
    fn weighted_bce_equals_unweighted_at_unit_weight() {
        let m = toy_separable(32, 9);
        let mut rng = SplitMix64::new(2);
        let mlp = Mlp::<f64>::init(2, &small_config(1), &mut rng).unwrap();
        let masks = vec![None, None];
        let weighted = mlp.loss(m.values(), m.n_rows(), &m.labels, 1.0, &masks);
        // unweighted reference computed directly
        let logits = {
            let fwd = mlp.forward_train(m.values(), m.n_rows(), &masks);
            fwd.logits
        };
        let mut reference = 0.0;
        for (r, &y) in m.labels.iter().enumerate() {
            let z: f64 = logits[r];
            reference += if y { softplus(-z) } else { softplus(z) };
        }
        reference /= m.n_rows() as f64;
        assert_eq!(weighted, reference);
    }

    #[test]
    fn training_is_seed_deterministic() {
        let train = toy_separable(120, 21);
        let val = toy_separable(40, 22);
        let a = train_mlp(&train, &val, &small_config(5)).unwrap();
        let b = train_mlp(&train, &val, &small_config(5)).unwrap();
        assert_eq!(a.mlp, b.mlp);
        assert_eq!(a.log, b.log);
    }

    #[test]
    fn permuting_validation_rows_changes_no_weight() {
        let train = toy_separable(120, 31);
        let val = toy_separable(44, 32);
        let a = train_mlp(&train, &val, &small_config(6)).unwrap();
        let perm: Vec<usize> = (0..val.n_rows()).rev().collect();
        let val_permuted = val.select_rows(&perm);
        let b = train_mlp(&train, &val_permuted, &small_config(6)).unwrap();
        assert_eq!(a.mlp, b.mlp);
    }

    fn tiny_grad_instance(batch_norm: bool, seed: u64) -> (Mlp<f64>, Vec<f64>, Vec<bool>) {
        let mut config = small_config(seed);
        config.layer_widths = vec![8, 4, 1];
        config.dropout = vec![0.0, 0.0];
        config.batch_norm = batch_norm;
        let mut rng = SplitMix64::new(seed);
        let mlp = Mlp::init(3, &config, &mut rng).unwrap();
        let mut data_rng = SplitMix64::new(seed + 1);
        let x: Vec<f64> = (0..5 * 3).map(|_| data_rng.next_gaussian()).collect();
        let labels = vec![true, false, false, true, false];
        (mlp, x, labels)
    }

    #[test]
    fn gradients_match_finite_differences_plain() {
        let (mlp, x, labels) = tiny_grad_instance(false, 41);
        let all: Vec<usize> = (0..mlp.param_count()).collect();
        let worst = gradient_check(&mlp, &x, 5, &labels, 2.5, &all, 1e-5);
        assert!(worst < 1e-4, "max relative error {worst}");
    }

    #[test]
    fn gradients_match_finite_differences_with_batch_norm() {
        let (mlp, x, labels) = tiny_grad_instance(true, 43);
        let all: Vec<usize> = (0..mlp.param_count()).collect();
        let worst = gradient_check(&mlp, &x, 5, &labels, 1.0, &all, 1e-5);
        assert!(worst < 1e-4, "max relative error {worst}");
    }

    #[test]
    fn non_finite_loss_reports_epoch_and_batch() {
        let train = toy_separable(40, 51);
        let val = toy_separable(20, 52);
        let mut config = small_config(7);
        config.learning_rate = f64::INFINITY;
        let err = train_mlp(&train, &val, &config).unwrap_err();
        match err {
            Error::Training(msg) => assert!(msg.contains("epoch"), "{msg}"),
            other => panic!("expected training error, got {other}"),
        }
    }

    #[test]
    fn empty_validation_is_argument_error() {
        let train = toy_separable(40, 61);
        let val = FeatureMatrix::from_rows(vec!["f0".into(), "f1".into()], vec![], vec![]).unwrap();
        assert!(matches!(
            train_mlp(&train, &val, &small_config(8)),
            Err(Error::Argument(_))
        ));
    }
}
