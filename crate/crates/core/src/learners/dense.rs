use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::labels::WINDOW_LEN;
use crate::learners::config::TrainConfig;
use crate::learners::nn::{cross_entropy, train_network, DenseParams, Network, ParamSet};
use crate::learners::TrainReport;
use crate::rng;

/// Two hidden layers (tanh, ReLU) and a two-way softmax over the seven
/// closes of a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseNet {
    pub head: DenseParams,
}

impl DenseNet {
    pub fn zeros(h1: usize, h2: usize) -> Self {
        Self {
            head: DenseParams::zeros(WINDOW_LEN, h1, h2),
        }
    }

    pub fn init(cfg: &TrainConfig) -> Self {
        let mut r = rng::stream(cfg.rng_seed, 0);
        Self {
            head: DenseParams::init(&mut r, WINDOW_LEN, cfg.hidden1, cfg.hidden2),
        }
    }

    /// `[P(θ=0), P(θ=1)]`.
    pub fn predict_proba(&self, x: &[f64; WINDOW_LEN]) -> [f64; 2] {
        self.head.predict_proba(x)
    }

    /// Mean cross-entropy of a batch and its gradient.
    pub fn loss_and_grad(&self, xs: &[[f64; WINDOW_LEN]], ys: &[u8], weights: [f64; 2]) -> (f64, DenseParams) {
        let mut grads = self.head.zeros_like();
        let inv_b = 1.0 / xs.len() as f64;
        let mut loss = 0.0;
        for (x, &y) in xs.iter().zip(ys) {
            let cache = self.head.forward(x);
            let (l, d) = cross_entropy(cache.probs, y, weights[y as usize]);
            loss += l;
            self.head.backward(&cache, [d[0] * inv_b, d[1] * inv_b], &mut grads);
        }
        (loss * inv_b, grads)
    }

    pub fn loss(&self, xs: &[[f64; WINDOW_LEN]], ys: &[u8], weights: [f64; 2]) -> f64 {
        xs.iter()
            .zip(ys)
            .map(|(x, &y)| cross_entropy(self.predict_proba(x), y, weights[y as usize]).0)
            .sum::<f64>()
            / xs.len() as f64
    }
}

impl Network for DenseNet {
    type Params = DenseParams;
    type BatchStats = ();

    fn params(&self) -> &DenseParams {
        &self.head
    }

    fn params_mut(&mut self) -> &mut DenseParams {
        &mut self.head
    }

    fn batch_loss_grad(
        &self,
        xs: &[[f64; WINDOW_LEN]],
        ys: &[u8],
        weights: [f64; 2],
    ) -> Result<(f64, DenseParams, ())> {
        let (l, g) = self.loss_and_grad(xs, ys, weights);
        Ok((l, g, ()))
    }
}

/// Minibatch training on (already scaled) features.
pub fn train_dense(xs: &[[f64; WINDOW_LEN]], ys: &[u8], cfg: &TrainConfig) -> Result<(DenseNet, TrainReport)> {
    cfg.validate()?;
    let mut net = DenseNet::init(cfg);
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
