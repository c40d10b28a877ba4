//! Single-layer LSTM over the seven closes of a window (one scalar input per
//! step), optionally followed by batch normalisation of the final hidden
//! state, feeding the same tanh → ReLU → softmax head as [`DenseNet`].
//!
//! [`DenseNet`]: crate::learners::DenseNet

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::WINDOW_LEN;
use crate::learners::config::TrainConfig;
use crate::learners::nn::{cross_entropy, glorot, train_network, DenseParams, HeadCache, Network, ParamSet};
use crate::learners::TrainReport;
use crate::rng;

/// Gate blocks in the stacked weight matrices: input, forget, candidate, output.
const GATES: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    pub hidden: usize,
    /// Input weights, `4h × 1`.
    pub wx: Vec<f64>,
    /// Recurrent weights, `4h × h`.
    pub wh: Vec<f64>,
    pub b: Vec<f64>,
    /// Batch-norm scale and shift (empty without batch norm).
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub head: DenseParams,
}

impl ParamSet for LstmParams {
    fn slices(&self) -> Vec<&[f64]> {
        let mut v: Vec<&[f64]> = vec![&self.wx, &self.wh, &self.b, &self.gamma, &self.beta];
        v.extend(self.head.slices());
        v
    }

    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v: Vec<&mut [f64]> = vec![&mut self.wx, &mut self.wh, &mut self.b, &mut self.gamma, &mut self.beta];
        v.extend(self.head.slices_mut());
        v
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

struct StepCache {
    x: f64,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    i: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
    o: Vec<f64>,
    tanh_c: Vec<f64>,
}

/// Gate activations of one step, exposed for inspection.
#[derive(Debug, Clone, PartialEq)]
pub struct GateTrace {
    pub input: Vec<f64>,
    pub forget: Vec<f64>,
    pub output: Vec<f64>,
    pub cell: Vec<f64>,
    pub hidden: Vec<f64>,
}

impl LstmParams {
    pub fn zeros(hidden: usize, batchnorm: bool, h1: usize, h2: usize) -> Self {
        let bn = if batchnorm { hidden } else { 0 };
        Self {
            hidden,
            wx: vec![0.0; GATES * hidden],
            wh: vec![0.0; GATES * hidden * hidden],
            b: vec![0.0; GATES * hidden],
            gamma: vec![0.0; bn],
            beta: vec![0.0; bn],
            head: DenseParams::zeros(hidden, h1, h2),
        }
    }

    fn run(&self, seq: &[f64; WINDOW_LEN]) -> (Vec<StepCache>, Vec<f64>) {
        let h = self.hidden;
        let mut h_prev = vec![0.0; h];
        let mut c_prev = vec![0.0; h];
        let mut steps = Vec::with_capacity(WINDOW_LEN);
        for &x in seq {
            let mut z = vec![0.0; GATES * h];
            for (r, zr) in z.iter_mut().enumerate() {
                let rec: f64 = self.wh[r * h..(r + 1) * h]
                    .iter()
                    .zip(&h_prev)
                    .map(|(w, v)| w * v)
                    .sum();
                *zr = self.wx[r] * x + rec + self.b[r];
            }
            let i: Vec<f64> = z[0..h].iter().map(|&v| sigmoid(v)).collect();
            let f: Vec<f64> = z[h..2 * h].iter().map(|&v| sigmoid(v)).collect();
            let g: Vec<f64> = z[2 * h..3 * h].iter().map(|&v| v.tanh()).collect();
            let o: Vec<f64> = z[3 * h..4 * h].iter().map(|&v| sigmoid(v)).collect();
            let c: Vec<f64> = (0..h).map(|j| f[j] * c_prev[j] + i[j] * g[j]).collect();
            let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
            let h_new: Vec<f64> = (0..h).map(|j| o[j] * tanh_c[j]).collect();
            steps.push(StepCache {
                x,
                h_prev: std::mem::replace(&mut h_prev, h_new),
                c_prev: std::mem::replace(&mut c_prev, c),
                i,
                f,
                g,
                o,
                tanh_c,
            });
        }
        (steps, h_prev)
    }

    /// Per-step gate values, cell and hidden states for one sequence.
    pub fn trace(&self, seq: &[f64; WINDOW_LEN]) -> Vec<GateTrace> {
        let (steps, last_h) = self.run(seq);
        let mut out: Vec<GateTrace> = Vec::with_capacity(steps.len());
        for (t, s) in steps.iter().enumerate() {
            let hidden = match steps.get(t + 1) {
                Some(next) => next.h_prev.clone(),
                None => last_h.clone(),
            };
            let cell = match steps.get(t + 1) {
                Some(next) => next.c_prev.clone(),
                None => (0..self.hidden)
                    .map(|j| s.f[j] * s.c_prev[j] + s.i[j] * s.g[j])
                    .collect(),
            };
            out.push(GateTrace {
                input: s.i.clone(),
                forget: s.f.clone(),
                output: s.o.clone(),
                cell,
                hidden,
            });
        }
        out
    }

    /// Backpropagation through time for one sequence given dL/dh_T.
    fn bptt(&self, steps: &[StepCache], dh_last: &[f64], grads: &mut LstmParams) {
        let h = self.hidden;
        let mut dh = dh_last.to_vec();
        let mut dc = vec![0.0; h];
        let mut dz = vec![0.0; GATES * h];
        for s in steps.iter().rev() {
            for j in 0..h {
                let d_o = dh[j] * s.tanh_c[j];
                dc[j] += dh[j] * s.o[j] * (1.0 - s.tanh_c[j] * s.tanh_c[j]);
                let d_i = dc[j] * s.g[j];
                let d_g = dc[j] * s.i[j];
                let d_f = dc[j] * s.c_prev[j];
                dz[j] = d_i * s.i[j] * (1.0 - s.i[j]);
                dz[h + j] = d_f * s.f[j] * (1.0 - s.f[j]);
                dz[2 * h + j] = d_g * (1.0 - s.g[j] * s.g[j]);
                dz[3 * h + j] = d_o * s.o[j] * (1.0 - s.o[j]);
                dc[j] *= s.f[j];
            }
            let mut dh_prev = vec![0.0; h];
            for r in 0..GATES * h {
                grads.wx[r] += dz[r] * s.x;
                grads.b[r] += dz[r];
                let row = &self.wh[r * h..(r + 1) * h];
                let grow = &mut grads.wh[r * h..(r + 1) * h];
                for j in 0..h {
                    grow[j] += dz[r] * s.h_prev[j];
                    dh_prev[j] += dz[r] * row[j];
                }
            }
            dh = dh_prev;
        }
    }
}

/// Training-mode batch normalisation of `values[b][j]` over the batch axis.
/// Returns the normalised (pre-affine) values, batch means and variances
/// (biased).
pub fn batch_normalize(values: &[Vec<f64>], eps: f64) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let n = values.len() as f64;
    let width = values.first().map_or(0, Vec::len);
    let mean: Vec<f64> = (0..width)
        .map(|j| values.iter().map(|v| v[j]).sum::<f64>() / n)
        .collect();
    let var: Vec<f64> = (0..width)
        .map(|j| values.iter().map(|v| (v[j] - mean[j]).powi(2)).sum::<f64>() / n)
        .collect();
    let normed = values
        .iter()
        .map(|v| (0..width).map(|j| (v[j] - mean[j]) / (var[j] + eps).sqrt()).collect())
        .collect();
    (normed, mean, var)
}

/// Batch means and unbiased variances of one training batch, folded into the
/// running statistics after the optimizer step.
pub struct BnBatchStats {
    mean: Vec<f64>,
    var_unbiased: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmNet {
    pub params: LstmParams,
    pub use_batchnorm: bool,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub bn_epsilon: f64,
    pub bn_momentum: f64,
}

impl LstmNet {
    pub fn init(cfg: &TrainConfig, use_batchnorm: bool) -> Self {
        let h = cfg.lstm_hidden;
        let mut r = rng::stream(cfg.rng_seed, 0);
        let mut params = LstmParams::zeros(h, use_batchnorm, cfg.hidden1, cfg.hidden2);
        params.wx = glorot(&mut r, 1, GATES * h);
        params.wh = glorot(&mut r, h, GATES * h);
        // forget-gate bias starts at 1
        params.b[h..2 * h].fill(1.0);
        if use_batchnorm {
            params.gamma.fill(1.0);
        }
        params.head = DenseParams::init(&mut r, h, cfg.hidden1, cfg.hidden2);
        Self::from_params(params, use_batchnorm, cfg.bn_epsilon, cfg.bn_momentum)
    }

    pub fn from_params(params: LstmParams, use_batchnorm: bool, bn_epsilon: f64, bn_momentum: f64) -> Self {
        let h = params.hidden;
        Self {
            params,
            use_batchnorm,
            running_mean: vec![0.0; h],
            running_var: vec![1.0; h],
            bn_epsilon,
            bn_momentum,
        }
    }

    /// Final hidden state after the seven steps.
    pub fn final_hidden(&self, seq: &[f64; WINDOW_LEN]) -> Vec<f64> {
        self.params.run(seq).1
    }

    /// Inference-mode probabilities (running batch-norm statistics).
    pub fn predict_proba(&self, seq: &[f64; WINDOW_LEN]) -> [f64; 2] {
        let mut hid = self.final_hidden(seq);
        if self.use_batchnorm {
            for j in 0..hid.len() {
                let xhat = (hid[j] - self.running_mean[j]) / (self.running_var[j] + self.bn_epsilon).sqrt();
                hid[j] = self.params.gamma[j] * xhat + self.params.beta[j];
            }
        }
        self.params.head.predict_proba(&hid)
    }

    /// Training-mode loss (batch statistics for batch norm).
    pub fn train_loss(&self, xs: &[[f64; WINDOW_LEN]], ys: &[u8], weights: [f64; 2]) -> Result<f64> {
        Ok(self.loss_and_grad(xs, ys, weights)?.0)
    }

    /// Training-mode mean cross-entropy over a batch, its gradient, and the
    /// batch-norm statistics of the batch.
    pub fn loss_and_grad(
        &self,
        xs: &[[f64; WINDOW_LEN]],
        ys: &[u8],
        weights: [f64; 2],
    ) -> Result<(f64, LstmParams, BnBatchStats)> {
        let b = xs.len();
        if self.use_batchnorm && b < 2 {
            return Err(Error::param(
                "batch_size",
                "batch normalisation needs at least 2 rows per batch",
            ));
        }
        let p = &self.params;
        let h = p.hidden;
        let runs: Vec<(Vec<StepCache>, Vec<f64>)> = xs.iter().map(|x| p.run(x)).collect();
        let finals: Vec<Vec<f64>> = runs.iter().map(|(_, hl)| hl.clone()).collect();

        let (head_in, xhat, bn_mean, bn_var) = if self.use_batchnorm {
            let (xhat, mean, var) = batch_normalize(&finals, self.bn_epsilon);
            let out = xhat
                .iter()
                .map(|row| (0..h).map(|j| p.gamma[j] * row[j] + p.beta[j]).collect())
                .collect();
            (out, xhat, mean, var)
        } else {
            (finals.clone(), Vec::new(), Vec::new(), Vec::new())
        };

        let mut grads = p.zeros_like();
        let inv_b = 1.0 / b as f64;
        let mut loss = 0.0;
        let mut dy: Vec<Vec<f64>> = Vec::with_capacity(b);
        for (inp, &y) in head_in.iter().zip(ys) {
            let cache: HeadCache = p.head.forward(inp);
            let (l, d) = cross_entropy(cache.probs, y, weights[y as usize]);
            loss += l;
            dy.push(p.head.backward(&cache, [d[0] * inv_b, d[1] * inv_b], &mut grads.head));
        }

        let dfinal: Vec<Vec<f64>> = if self.use_batchnorm {
            let n = b as f64;
            let mut out = vec![vec![0.0; h]; b];
            for j in 0..h {
                let inv_std = 1.0 / (bn_var[j] + self.bn_epsilon).sqrt();
                let mut sum_dxhat = 0.0;
                let mut sum_dxhat_xhat = 0.0;
                for s in 0..b {
                    grads.gamma[j] += dy[s][j] * xhat[s][j];
                    grads.beta[j] += dy[s][j];
                    let dxhat = dy[s][j] * p.gamma[j];
                    sum_dxhat += dxhat;
                    sum_dxhat_xhat += dxhat * xhat[s][j];
                }
                for s in 0..b {
                    let dxhat = dy[s][j] * p.gamma[j];
                    out[s][j] = inv_std / n * (n * dxhat - sum_dxhat - xhat[s][j] * sum_dxhat_xhat);
                }
            }
            out
        } else {
            dy
        };

        for ((steps, _), dh) in runs.iter().zip(&dfinal) {
            p.bptt(steps, dh, &mut grads);
        }

        let correction = if b > 1 { b as f64 / (b as f64 - 1.0) } else { 1.0 };
        let stats = BnBatchStats {
            mean: bn_mean,
            var_unbiased: bn_var.iter().map(|v| v * correction).collect(),
        };
        Ok((loss * inv_b, grads, stats))
    }
}

impl Network for LstmNet {
    type Params = LstmParams;
    type BatchStats = BnBatchStats;

    fn params(&self) -> &LstmParams {
        &self.params
    }

    fn params_mut(&mut self) -> &mut LstmParams {
        &mut self.params
    }

    fn batch_loss_grad(
        &self,
        xs: &[[f64; WINDOW_LEN]],
        ys: &[u8],
        weights: [f64; 2],
    ) -> Result<(f64, LstmParams, BnBatchStats)> {
        self.loss_and_grad(xs, ys, weights)
    }

    fn absorb_batch_stats(&mut self, stats: BnBatchStats) {
        if !self.use_batchnorm {
            return;
        }
        let m = self.bn_momentum;
        for j in 0..self.running_mean.len() {
            self.running_mean[j] = (1.0 - m) * self.running_mean[j] + m * stats.mean[j];
            self.running_var[j] = (1.0 - m) * self.running_var[j] + m * stats.var_unbiased[j];
        }
    }

    fn min_batch(&self) -> usize {
        if self.use_batchnorm {
            2
        } else {
            1
        }
    }
}

pub fn train_lstm(
    xs: &[[f64; WINDOW_LEN]],
    ys: &[u8],
    cfg: &TrainConfig,
    use_batchnorm: bool,
) -> Result<(LstmNet, TrainReport)> {
    cfg.validate()?;
    if use_batchnorm && cfg.batch_size < 2 {
        return Err(Error::param(
            "batch_size",
            "batch size 1 is incompatible with batch normalisation in training mode",
        ));
    }
    let mut net = LstmNet::init(cfg, use_batchnorm);
    let mut shuffle = rng::stream(cfg.rng_seed, 1);
    let loss_history = train_network(&mut net, xs, ys, cfg, &mut shuffle)?;
    Ok((
        net,
        TrainReport {
            loss_history,
            warnings: Vec::new(),
        },
    ))
}
