use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::WINDOW_LEN;
use crate::learners::config::TrainConfig;
use crate::learners::nn::class_weights;
use crate::learners::TrainReport;

/// `P(θ=1 | x) = 1 / (1 + exp(-(beta0 + beta1·x)))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub beta0: f64,
    pub beta1: [f64; WINDOW_LEN],
}

/// Largest double below 1; keeps probabilities inside the open interval.
const ONE_MINUS: f64 = 1.0 - f64::EPSILON / 2.0;

impl LogisticModel {
    pub fn zeros() -> Self {
        Self {
            beta0: 0.0,
            beta1: [0.0; WINDOW_LEN],
        }
    }

    pub fn logit(&self, x: &[f64; WINDOW_LEN]) -> f64 {
        self.beta0 + self.beta1.iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }

    pub fn predict_proba(&self, x: &[f64; WINDOW_LEN]) -> f64 {
        let p = 1.0 / (1.0 + (-self.logit(x)).exp());
        p.clamp(f64::MIN_POSITIVE, ONE_MINUS)
    }

    /// Mean (weighted) negative Bernoulli log-likelihood.
    pub fn loss(&self, xs: &[[f64; WINDOW_LEN]], ys: &[u8], weights: [f64; 2]) -> f64 {
        xs.iter()
            .zip(ys)
            .map(|(x, &y)| {
                let z = self.logit(x);
                // log(1 + e^z) - y z, stable for large |z|
                let softplus = if z > 0.0 {
                    z + (-z).exp().ln_1p()
                } else {
                    z.exp().ln_1p()
                };
                weights[y as usize] * (softplus - f64::from(y) * z)
            })
            .sum::<f64>()
            / xs.len() as f64
    }
}

/// Full-batch gradient descent on the mean negative log-likelihood (i.e.
/// ascent on the log-likelihood) starting from all-zero coefficients.
pub fn train_logistic(xs: &[[f64; WINDOW_LEN]], ys: &[u8], cfg: &TrainConfig) -> Result<(LogisticModel, TrainReport)> {
    cfg.validate()?;
    if xs.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let mut warnings = Vec::new();
    let ones = ys.iter().filter(|&&y| y == 1).count();
    if ones == 0 || ones == ys.len() {
        warnings.push(format!(
            "degenerate fit: training set contains only class {}",
            u8::from(ones > 0)
        ));
    }
    let weights = class_weights(ys, cfg.class_weights);
    let lr = cfg.logistic_learning_rate;
    let n = xs.len() as f64;
    let mut model = LogisticModel::zeros();
    let mut history = Vec::with_capacity(cfg.logistic_epochs + 1);
    history.push(model.loss(xs, ys, weights));
    for epoch in 0..cfg.logistic_epochs {
        let mut g0 = 0.0;
        let mut g = [0.0; WINDOW_LEN];
        for (x, &y) in xs.iter().zip(ys) {
            let p = 1.0 / (1.0 + (-model.logit(x)).exp());
            let r = weights[y as usize] * (p - f64::from(y));
            g0 += r;
            for j in 0..WINDOW_LEN {
                g[j] += r * x[j];
            }
        }
        model.beta0 -= lr * g0 / n;
        for j in 0..WINDOW_LEN {
            model.beta1[j] -= lr * g[j] / n;
        }
        let loss = model.loss(xs, ys, weights);
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch, loss });
        }
        history.push(loss);
    }
    Ok((
        model,
        TrainReport {
            loss_history: history,
            warnings,
        },
    ))
}
