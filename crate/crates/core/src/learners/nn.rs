//! Building blocks shared by the dense network and the LSTM: flat parameter
//! access, the Adam/SGD update, the tanh → ReLU → softmax head and its
//! backward pass, and the minibatch training loop.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::WINDOW_LEN;
use crate::learners::config::{Optimizer, TrainConfig};
use crate::rng::StreamRng;

/// A collection of trainable arrays that can be walked in a fixed order.
pub trait ParamSet: Clone {
    fn slices(&self) -> Vec<&[f64]>;
    fn slices_mut(&mut self) -> Vec<&mut [f64]>;

    fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for s in z.slices_mut() {
            s.fill(0.0);
        }
        z
    }

    fn num_params(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    /// Reads parameter `k` in flat order.
    fn get_flat(&self, k: usize) -> f64 {
        let mut k = k;
        for s in self.slices() {
            if k < s.len() {
                return s[k];
            }
            k -= s.len();
        }
        panic!("parameter index out of range")
    }

    fn set_flat(&mut self, k: usize, value: f64) {
        let mut k = k;
        for s in self.slices_mut() {
            if k < s.len() {
                s[k] = value;
                return;
            }
            k -= s.len();
        }
        panic!("parameter index out of range")
    }
}

pub(crate) struct OptimizerState<P: ParamSet> {
    kind: Optimizer,
    lr: f64,
    m: P,
    v: P,
    t: i32,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

impl<P: ParamSet> OptimizerState<P> {
    pub(crate) fn new(kind: Optimizer, lr: f64, like: &P) -> Self {
        Self {
            kind,
            lr,
            m: like.zeros_like(),
            v: like.zeros_like(),
            t: 0,
        }
    }

    pub(crate) fn step(&mut self, params: &mut P, grads: &P) {
        self.t += 1;
        let lr = self.lr;
        match self.kind {
            Optimizer::Sgd => {
                for (p, g) in params.slices_mut().into_iter().zip(grads.slices()) {
                    for (pi, gi) in p.iter_mut().zip(g) {
                        *pi -= lr * gi;
                    }
                }
            }
            Optimizer::Adam => {
                let c1 = 1.0 - BETA1.powi(self.t);
                let c2 = 1.0 - BETA2.powi(self.t);
                let slices = params
                    .slices_mut()
                    .into_iter()
                    .zip(grads.slices())
                    .zip(self.m.slices_mut().into_iter().zip(self.v.slices_mut()));
                for ((p, g), (m, v)) in slices {
                    for i in 0..p.len() {
                        m[i] = BETA1 * m[i] + (1.0 - BETA1) * g[i];
                        v[i] = BETA2 * v[i] + (1.0 - BETA2) * g[i] * g[i];
                        p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + ADAM_EPS);
                    }
                }
            }
        }
    }
}

/// Glorot-uniform initialisation of a `fan_out × fan_in` matrix.
pub(crate) fn glorot(rng: &mut StreamRng, fan_in: usize, fan_out: usize) -> Vec<f64> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..fan_in * fan_out).map(|_| rng.random_range(-limit..limit)).collect()
}

/// Numerically stable two-class softmax.
pub fn softmax2(logits: [f64; 2]) -> [f64; 2] {
    let m = logits[0].max(logits[1]);
    let e0 = (logits[0] - m).exp();
    let e1 = (logits[1] - m).exp();
    let s = e0 + e1;
    [e0 / s, e1 / s]
}

fn relu(x: f64) -> f64 {
    if x < 0.0 {
        0.0
    } else {
        x
    }
}

/// `n_in → h1 (tanh) → h2 (ReLU) → 2 (softmax)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseParams {
    pub n_in: usize,
    pub h1: usize,
    pub h2: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    pub w3: Vec<f64>,
    pub b3: Vec<f64>,
}

impl ParamSet for DenseParams {
    fn slices(&self) -> Vec<&[f64]> {
        vec![&self.w1, &self.b1, &self.w2, &self.b2, &self.w3, &self.b3]
    }

    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            &mut self.w1,
            &mut self.b1,
            &mut self.w2,
            &mut self.b2,
            &mut self.w3,
            &mut self.b3,
        ]
    }
}

pub(crate) struct HeadCache {
    pub input: Vec<f64>,
    pub a1: Vec<f64>,
    pub z2: Vec<f64>,
    pub a2: Vec<f64>,
    pub probs: [f64; 2],
}

fn affine(w: &[f64], b: &[f64], x: &[f64], n_out: usize) -> Vec<f64> {
    let n_in = x.len();
    (0..n_out)
        .map(|o| {
            b[o] + w[o * n_in..(o + 1) * n_in]
                .iter()
                .zip(x)
                .map(|(a, b)| a * b)
                .sum::<f64>()
        })
        .collect()
}

impl DenseParams {
    pub fn zeros(n_in: usize, h1: usize, h2: usize) -> Self {
        Self {
            n_in,
            h1,
            h2,
            w1: vec![0.0; h1 * n_in],
            b1: vec![0.0; h1],
            w2: vec![0.0; h2 * h1],
            b2: vec![0.0; h2],
            w3: vec![0.0; 2 * h2],
            b3: vec![0.0; 2],
        }
    }

    pub(crate) fn init(rng: &mut StreamRng, n_in: usize, h1: usize, h2: usize) -> Self {
        Self {
            w1: glorot(rng, n_in, h1),
            w2: glorot(rng, h1, h2),
            w3: glorot(rng, h2, 2),
            ..Self::zeros(n_in, h1, h2)
        }
    }

    pub(crate) fn forward(&self, x: &[f64]) -> HeadCache {
        let a1: Vec<f64> = affine(&self.w1, &self.b1, x, self.h1)
            .into_iter()
            .map(f64::tanh)
            .collect();
        let z2 = affine(&self.w2, &self.b2, &a1, self.h2);
        let a2: Vec<f64> = z2.iter().map(|&z| relu(z)).collect();
        let logits = affine(&self.w3, &self.b3, &a2, 2);
        HeadCache {
            input: x.to_vec(),
            a1,
            z2,
            a2,
            probs: softmax2([logits[0], logits[1]]),
        }
    }

    pub fn predict_proba(&self, x: &[f64]) -> [f64; 2] {
        self.forward(x).probs
    }

    /// Accumulates parameter gradients for one sample given `dlogits` and
    /// returns the gradient with respect to the head input.
    pub(crate) fn backward(&self, cache: &HeadCache, dlogits: [f64; 2], grads: &mut DenseParams) -> Vec<f64> {
        let (h1, h2, n_in) = (self.h1, self.h2, self.n_in);
        let mut da2 = vec![0.0; h2];
        for o in 0..2 {
            grads.b3[o] += dlogits[o];
            for j in 0..h2 {
                grads.w3[o * h2 + j] += dlogits[o] * cache.a2[j];
                da2[j] += dlogits[o] * self.w3[o * h2 + j];
            }
        }
        let dz2: Vec<f64> = (0..h2).map(|j| if cache.z2[j] > 0.0 { da2[j] } else { 0.0 }).collect();
        let mut da1 = vec![0.0; h1];
        for j in 0..h2 {
            grads.b2[j] += dz2[j];
            for i in 0..h1 {
                grads.w2[j * h1 + i] += dz2[j] * cache.a1[i];
                da1[i] += dz2[j] * self.w2[j * h1 + i];
            }
        }
        let dz1: Vec<f64> = (0..h1).map(|i| da1[i] * (1.0 - cache.a1[i] * cache.a1[i])).collect();
        let mut dx = vec![0.0; n_in];
        for i in 0..h1 {
            grads.b1[i] += dz1[i];
            for k in 0..n_in {
                grads.w1[i * n_in + k] += dz1[i] * cache.input[k];
                dx[k] += dz1[i] * self.w1[i * n_in + k];
            }
        }
        dx
    }
}

/// Per-sample cross-entropy weight for each class.
pub(crate) fn class_weights(y: &[u8], enabled: bool) -> [f64; 2] {
    if !enabled {
        return [1.0, 1.0];
    }
    let n1 = y.iter().filter(|&&v| v == 1).count() as f64;
    let n0 = y.len() as f64 - n1;
    let n = y.len() as f64;
    let w = |c: f64| if c > 0.0 { n / (2.0 * c) } else { 1.0 };
    [w(n0), w(n1)]
}

/// Mean weighted cross-entropy of one sample and its logit gradient (before
/// division by the batch size).
pub(crate) fn cross_entropy(probs: [f64; 2], y: u8, weight: f64) -> (f64, [f64; 2]) {
    // written as a comparison so that a NaN probability propagates
    let p = probs[y as usize];
    let p = if p < f64::MIN_POSITIVE { f64::MIN_POSITIVE } else { p };
    let mut d = probs;
    d[y as usize] -= 1.0;
    (-weight * p.ln(), [weight * d[0], weight * d[1]])
}

/// A network trainable by minibatch gradient descent.
pub(crate) trait Network {
    type Params: ParamSet;
    type BatchStats;

    fn params(&self) -> &Self::Params;
    fn params_mut(&mut self) -> &mut Self::Params;

    /// Mean loss and gradients over a batch, in training mode.
    fn batch_loss_grad(
        &self,
        xs: &[[f64; WINDOW_LEN]],
        ys: &[u8],
        weights: [f64; 2],
    ) -> Result<(f64, Self::Params, Self::BatchStats)>;

    fn absorb_batch_stats(&mut self, _stats: Self::BatchStats) {}

    /// Smallest batch the network accepts in training mode.
    fn min_batch(&self) -> usize {
        1
    }
}

/// Runs minibatch training; returns the mean training loss of each epoch.
pub(crate) fn train_network<N: Network>(
    net: &mut N,
    xs: &[[f64; WINDOW_LEN]],
    ys: &[u8],
    cfg: &TrainConfig,
    rng: &mut StreamRng,
) -> Result<Vec<f64>> {
    if xs.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let weights = class_weights(ys, cfg.class_weights);
    let mut opt = OptimizerState::new(cfg.optimizer, cfg.learning_rate, net.params());
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let min_batch = net.min_batch();
    if xs.len() < min_batch {
        return Err(Error::param(
            "batch_size",
            format!(
                "training set of {} rows is smaller than the minimum batch {min_batch}",
                xs.len()
            ),
        ));
    }
    for epoch in 0..cfg.epochs {
        order.shuffle(rng);
        let mut batches: Vec<&[usize]> = order.chunks(cfg.batch_size).collect();
        // a trailing batch too small for batch statistics is merged into its predecessor
        if batches.len() > 1 && batches.last().is_some_and(|b| b.len() < min_batch) {
            let tail = batches.pop().unwrap().len();
            let prev = batches.pop().unwrap();
            let start = order.len() - tail - prev.len();
            batches.push(&order[start..]);
        }
        let mut total = 0.0;
        for batch in batches {
            let bx: Vec<[f64; WINDOW_LEN]> = batch.iter().map(|&i| xs[i]).collect();
            let by: Vec<u8> = batch.iter().map(|&i| ys[i]).collect();
            let (loss, grads, stats) = net.batch_loss_grad(&bx, &by, weights)?;
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, loss });
            }
            opt.step(net.params_mut(), &grads);
            net.absorb_batch_stats(stats);
            total += loss * batch.len() as f64;
        }
        history.push(total / xs.len() as f64);
    }
    Ok(history)
}
