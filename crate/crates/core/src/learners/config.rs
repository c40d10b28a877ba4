use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Sgd,
    Adam,
}

/// Hyperparameters for every learner. Unset JSON fields take the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Step size for the networks.
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub hidden1: usize,
    pub hidden2: usize,
    pub lstm_hidden: usize,
    pub optimizer: Optimizer,
    /// Full-batch gradient step for logistic regression.
    pub logistic_learning_rate: f64,
    pub logistic_epochs: usize,
    pub trees_count: usize,
    /// `None` grows trees until leaves are pure.
    pub max_depth: Option<usize>,
    pub features_per_split: usize,
    pub bootstrap: bool,
    pub rng_seed: u64,
    pub bn_epsilon: f64,
    pub bn_momentum: f64,
    /// Decision threshold on P(θ=1) for the three networks.
    pub class1_threshold: f64,
    /// Decision threshold on P(θ=1) for logistic regression and the forest.
    pub linear_threshold: f64,
    /// z-score features with training statistics; off feeds raw closes.
    pub standardize: bool,
    /// Inverse-frequency class weights in the loss / tree impurity.
    pub class_weights: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            epochs: 200,
            batch_size: 32,
            hidden1: 16,
            hidden2: 16,
            lstm_hidden: 16,
            optimizer: Optimizer::Adam,
            logistic_learning_rate: 0.1,
            logistic_epochs: 2000,
            trees_count: 200,
            max_depth: Some(8),
            features_per_split: 3,
            bootstrap: true,
            rng_seed: 0,
            bn_epsilon: 1e-5,
            bn_momentum: 0.1,
            class1_threshold: 0.3,
            linear_threshold: 0.5,
            standardize: true,
            class_weights: false,
        }
    }
}

impl TrainConfig {
    /// Returns every violated constraint, not just the first.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let mut positive = |name: &str, x: f64| {
            if !(x > 0.0 && x.is_finite()) {
                v.push(format!("{name} must be positive, got {x}"));
            }
        };
        positive("learning_rate", self.learning_rate);
        positive("logistic_learning_rate", self.logistic_learning_rate);
        positive("bn_epsilon", self.bn_epsilon);
        for (name, n) in [
            ("epochs", self.epochs),
            ("batch_size", self.batch_size),
            ("hidden1", self.hidden1),
            ("hidden2", self.hidden2),
            ("lstm_hidden", self.lstm_hidden),
            ("logistic_epochs", self.logistic_epochs),
            ("trees_count", self.trees_count),
        ] {
            if n == 0 {
                v.push(format!("{name} must be at least 1"));
            }
        }
        if self.max_depth == Some(0) {
            v.push("max_depth must be at least 1".into());
        }
        if !(1..=crate::labels::WINDOW_LEN).contains(&self.features_per_split) {
            v.push(format!(
                "features_per_split must be in 1..={}, got {}",
                crate::labels::WINDOW_LEN,
                self.features_per_split
            ));
        }
        if !(self.bn_momentum > 0.0 && self.bn_momentum <= 1.0) {
            v.push(format!("bn_momentum must be in (0, 1], got {}", self.bn_momentum));
        }
        for (name, t) in [
            ("class1_threshold", self.class1_threshold),
            ("linear_threshold", self.linear_threshold),
        ] {
            if !(t > 0.0 && t < 1.0) {
                v.push(format!("{name} must be in (0, 1), got {t}"));
            }
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::param("train_config", v.join("; ")))
        }
    }
}
