use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::WINDOW_LEN;

pub const STD_FLOOR: f64 = 1e-8;

/// Per-feature z-score fitted on training rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub mean: [f64; WINDOW_LEN],
    pub std: [f64; WINDOW_LEN],
}

impl FeatureScaler {
    pub fn fit(rows: &[[f64; WINDOW_LEN]]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        let n = rows.len() as f64;
        let mut mean = [0.0; WINDOW_LEN];
        let mut std = [0.0; WINDOW_LEN];
        for j in 0..WINDOW_LEN {
            mean[j] = rows.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n;
            std[j] = var.sqrt().max(STD_FLOOR);
        }
        Ok(Self { mean, std })
    }

    pub fn transform_row(&self, row: &[f64; WINDOW_LEN]) -> [f64; WINDOW_LEN] {
        std::array::from_fn(|j| (row[j] - self.mean[j]) / self.std[j])
    }

    pub fn inverse_row(&self, row: &[f64; WINDOW_LEN]) -> [f64; WINDOW_LEN] {
        std::array::from_fn(|j| row[j] * self.std[j] + self.mean[j])
    }

    pub fn transform(&self, rows: &[[f64; WINDOW_LEN]]) -> Vec<[f64; WINDOW_LEN]> {
        rows.iter().map(|r| self.transform_row(r)).collect()
    }
}
