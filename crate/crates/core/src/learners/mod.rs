//! The five θ classifiers and their shared train / predict contract.

mod config;
mod dense;
mod forest;
pub mod gradcheck;
mod logistic;
mod lstm;
pub mod nn;
mod scaler;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::{WindowDataset, WINDOW_LEN};

pub use config::{Optimizer, TrainConfig};
pub use dense::{train_dense, DenseNet};
pub use forest::{train_forest, DecisionTree, ForestModel, Node};
pub use logistic::{train_logistic, LogisticModel};
pub use lstm::{batch_normalize, train_lstm, GateTrace, LstmNet, LstmParams};
pub use scaler::{FeatureScaler, STD_FLOOR};

/// Per-epoch training losses plus any non-fatal diagnostics.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub loss_history: Vec<f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Lr,
    Rf,
    Nn,
    Lstm,
    LstmBn,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [Self::Lr, Self::Rf, Self::Nn, Self::Lstm, Self::LstmBn];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Lr => "lr",
            Self::Rf => "rf",
            Self::Nn => "nn",
            Self::Lstm => "lstm",
            Self::LstmBn => "lstm-bn",
        }
    }

    /// Threshold on P(θ=1) used to turn probabilities into labels.
    pub fn threshold(self, cfg: &TrainConfig) -> f64 {
        match self {
            Self::Lr | Self::Rf => cfg.linear_threshold,
            _ => cfg.class1_threshold,
        }
    }

    fn uses_scaler(self, cfg: &TrainConfig) -> bool {
        cfg.standardize && self != Self::Rf
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| {
                Error::param(
                    "model",
                    format!("unknown model {s:?}; expected lr, rf, nn, lstm or lstm-bn"),
                )
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "architecture", content = "weights", rename_all = "kebab-case")]
pub enum ClassifierModel {
    Lr(LogisticModel),
    Rf(ForestModel),
    Nn(DenseNet),
    Lstm(LstmNet),
    LstmBn(LstmNet),
}

impl ClassifierModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            Self::Lr(_) => ModelKind::Lr,
            Self::Rf(_) => ModelKind::Rf,
            Self::Nn(_) => ModelKind::Nn,
            Self::Lstm(_) => ModelKind::Lstm,
            Self::LstmBn(_) => ModelKind::LstmBn,
        }
    }

    /// P(θ=1) for an already-scaled row.
    pub fn prob_theta1(&self, x: &[f64; WINDOW_LEN]) -> f64 {
        match self {
            Self::Lr(m) => m.predict_proba(x),
            Self::Rf(m) => m.predict_proba(x),
            Self::Nn(m) => m.predict_proba(x)[1],
            Self::Lstm(m) | Self::LstmBn(m) => m.predict_proba(x)[1],
        }
    }
}

/// A fitted classifier with everything needed to score raw rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub scaler: Option<FeatureScaler>,
    pub threshold: f64,
    pub model: ClassifierModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub prob_theta1: f64,
    pub label: u8,
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        self.model.kind()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn predict_row(&self, row: &[f64; WINDOW_LEN]) -> Prediction {
        let x = match &self.scaler {
            Some(s) => s.transform_row(row),
            None => *row,
        };
        let p = self.model.prob_theta1(&x);
        Prediction {
            prob_theta1: p,
            label: u8::from(p > self.threshold),
        }
    }
}

/// Scores raw rows (scaling is applied internally). Every row must hold
/// exactly seven closes.
pub fn predict_theta(model: &TrainedModel, rows: &[Vec<f64>]) -> Result<Vec<Prediction>> {
    rows.iter()
        .map(|r| {
            let row: &[f64; WINDOW_LEN] = r.as_slice().try_into().map_err(|_| Error::FeatureLength {
                expected: WINDOW_LEN,
                got: r.len(),
            })?;
            Ok(model.predict_row(row))
        })
        .collect()
}

pub fn predict_dataset(model: &TrainedModel, data: &WindowDataset) -> Vec<Prediction> {
    data.rows.iter().map(|r| model.predict_row(&r.features)).collect()
}

pub fn train_model(kind: ModelKind, train: &WindowDataset, cfg: &TrainConfig) -> Result<(TrainedModel, TrainReport)> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let raw = train.features();
    let ys = train.labels();
    let scaler = if kind.uses_scaler(cfg) {
        Some(FeatureScaler::fit(&raw)?)
    } else {
        None
    };
    let xs = match &scaler {
        Some(s) => s.transform(&raw),
        None => raw,
    };
    let (model, report) = match kind {
        ModelKind::Lr => train_logistic(&xs, &ys, cfg).map(|(m, r)| (ClassifierModel::Lr(m), r))?,
        ModelKind::Rf => train_forest(&xs, &ys, cfg).map(|(m, r)| (ClassifierModel::Rf(m), r))?,
        ModelKind::Nn => train_dense(&xs, &ys, cfg).map(|(m, r)| (ClassifierModel::Nn(m), r))?,
        ModelKind::Lstm => train_lstm(&xs, &ys, cfg, false).map(|(m, r)| (ClassifierModel::Lstm(m), r))?,
        ModelKind::LstmBn => train_lstm(&xs, &ys, cfg, true).map(|(m, r)| (ClassifierModel::LstmBn(m), r))?,
    };
    Ok((
        TrainedModel {
            scaler,
            threshold: kind.threshold(cfg),
            model,
        },
        report,
    ))
}
