//! Quantization-aware training of a one-hidden-layer binary network.
//!
//! Hidden units are Heaviside in the forward pass with a clipped
//! straight-through gradient. The output layer is trained through `tanh`
//! against ±1 targets and later swapped to Heaviside for deployment. When
//! `quantize_aware` is set the forward pass uses quantized weights while
//! Adam updates the latent real weights, which stay clipped to `[-1, 1]`.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Activation, BinaryNet, BnnError, LayerSpec, QuantSpec, DEFAULT_TAU};
use crate::dataset::{DatasetSplit, Image64, PIXELS};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainCfg {
    pub hidden: usize,
    pub outputs: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    /// Half-width of the straight-through window around the hidden threshold.
    pub ste_window: f64,
    /// Latent weights start uniform in `[-init_scale, init_scale]`.
    pub init_scale: f64,
    pub tau: f64,
    pub quantize_aware: bool,
    pub quant: QuantSpec,
}

impl Default for TrainCfg {
    fn default() -> Self {
        Self {
            hidden: 12,
            outputs: 4,
            epochs: 200,
            batch_size: 32,
            learning_rate: 0.005,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            ste_window: 1.0,
            init_scale: 0.5,
            tau: DEFAULT_TAU,
            quantize_aware: true,
            quant: QuantSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean training loss per epoch.
    pub loss: Vec<f64>,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Self { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    fn step(&mut self, params: &mut [f64], grads: &[f64], cfg: &TrainCfg) {
        self.t += 1;
        let bc1 = 1.0 - cfg.beta1.powi(self.t);
        let bc2 = 1.0 - cfg.beta2.powi(self.t);
        for ((p, g), (m, v)) in params.iter_mut().zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            let mh = *m / bc1;
            let vh = *v / bc2;
            *p = (*p - cfg.learning_rate * mh / (vh.sqrt() + cfg.adam_eps)).clamp(-1.0, 1.0);
        }
    }
}

/// Trains a `PIXELS × hidden × outputs` network on `split.train`.
pub fn train(split: &DatasetSplit, cfg: &TrainCfg, seed: u64) -> Result<BinaryNet, BnnError> {
    train_with_report(split, cfg, seed).map(|(net, _)| net)
}

pub fn train_with_report(
    split: &DatasetSplit,
    cfg: &TrainCfg,
    seed: u64,
) -> Result<(BinaryNet, TrainReport), BnnError> {
    if split.train.is_empty() {
        return Err(BnnError::EmptySplit);
    }
    let (n_in, n_h, n_out) = (PIXELS, cfg.hidden, cfg.outputs);
    let mut init = rng::stream(seed, &[0x7A1A, 0]);
    let mut w1: Vec<f64> = (0..n_h * n_in).map(|_| init.random_range(-cfg.init_scale..=cfg.init_scale)).collect();
    let mut w2: Vec<f64> = (0..n_out * n_h).map(|_| init.random_range(-cfg.init_scale..=cfg.init_scale)).collect();
    let mut adam1 = Adam::new(w1.len());
    let mut adam2 = Adam::new(w2.len());

    let snap = |w: &[f64]| -> Vec<f64> {
        if cfg.quantize_aware {
            w.iter().map(|&v| cfg.quant.quantize(v)).collect()
        } else {
            w.to_vec()
        }
    };

    let mut order: Vec<usize> = (0..split.train.len()).collect();
    let mut g1 = vec![0.0; w1.len()];
    let mut g2 = vec![0.0; w2.len()];
    let mut active = Vec::with_capacity(n_in);
    let mut a = vec![0.0; n_h];
    let mut h = vec![0.0; n_h];
    let mut dh = vec![0.0; n_h];
    let mut ds = vec![0.0; n_out];
    let mut losses = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let mut shuffle = rng::stream(seed, &[0x7A1A, 1, epoch as u64]);
        order.shuffle(&mut shuffle);
        let mut epoch_loss = 0.0;

        for batch in order.chunks(cfg.batch_size.max(1)) {
            let q1 = snap(&w1);
            let q2 = snap(&w2);
            g1.iter_mut().for_each(|g| *g = 0.0);
            g2.iter_mut().for_each(|g| *g = 0.0);
            let norm = 1.0 / (batch.len() * n_out) as f64;

            for &idx in batch {
                let im: &Image64 = &split.train[idx];
                active.clear();
                active.extend((0..n_in).filter(|&i| im.pixel(i)));

                for j in 0..n_h {
                    let row = &q1[j * n_in..(j + 1) * n_in];
                    a[j] = active.iter().map(|&i| row[i]).sum::<f64>() - cfg.tau;
                    h[j] = if a[j] > 0.0 { 1.0 } else { 0.0 };
                }
                for k in 0..n_out {
                    let row = &q2[k * n_h..(k + 1) * n_h];
                    let s = row.iter().zip(&h).map(|(w, x)| w * x).sum::<f64>() - cfg.tau;
                    let y = s.tanh();
                    let t = if k == im.label.index() { 1.0 } else { -1.0 };
                    epoch_loss += (y - t) * (y - t) * norm;
                    ds[k] = 2.0 * (y - t) * (1.0 - y * y) * norm;
                }
                for j in 0..n_h {
                    dh[j] = (0..n_out).map(|k| ds[k] * q2[k * n_h + j]).sum();
                }
                for k in 0..n_out {
                    for j in 0..n_h {
                        g2[k * n_h + j] += ds[k] * h[j];
                    }
                }
                for j in 0..n_h {
                    if a[j].abs() > cfg.ste_window {
                        continue;
                    }
                    let row = &mut g1[j * n_in..(j + 1) * n_in];
                    for &i in &active {
                        row[i] += dh[j];
                    }
                }
            }
            adam1.step(&mut w1, &g1, cfg);
            adam2.step(&mut w2, &g2, cfg);
        }

        let mean = epoch_loss / order.len().div_ceil(cfg.batch_size.max(1)) as f64;
        if !mean.is_finite() || w1.iter().chain(&w2).any(|w| !w.is_finite()) {
            return Err(BnnError::Diverged { epoch, loss: mean });
        }
        losses.push(mean);
    }

    let rows = |w: &[f64], n: usize, width: usize| -> Vec<Vec<f64>> {
        (0..n).map(|r| w[r * width..(r + 1) * width].to_vec()).collect()
    };
    let net = BinaryNet::new(
        vec![
            LayerSpec::new(rows(&w1, n_h, n_in), Activation::Heaviside),
            LayerSpec::new(rows(&w2, n_out, n_h), Activation::TanhTrainOnly),
        ],
        cfg.tau,
    )?;
    Ok((net, TrainReport { loss: losses }))
}
