use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One trading day in years.
pub const DAY: f64 = 1.0 / 252.0;

/// Piecewise-constant, right-continuous θ(t): `values[i]` holds on
/// `[breakpoints[i], breakpoints[i + 1])` and the last value holds forever.
/// `breakpoints[0]` is always 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaSchedule {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl ThetaSchedule {
    pub fn constant(theta: f64) -> Result<Self> {
        Self::new(vec![0.0], vec![theta])
    }

    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.len() != values.len() {
            return Err(Error::LengthMismatch {
                left: breakpoints.len(),
                right: values.len(),
            });
        }
        if breakpoints.first() != Some(&0.0) {
            return Err(Error::param("schedule", "first breakpoint must be 0"));
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::param("schedule", "breakpoints must be strictly increasing"));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::param("schedule", format!("theta {v} outside [0, 1]")));
        }
        Ok(Self { breakpoints, values })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_constant(&self) -> bool {
        self.values.len() == 1
    }

    /// θ(t); times before 0 read the initial value.
    pub fn at(&self, t: f64) -> f64 {
        let i = self.breakpoints.partition_point(|&b| b <= t);
        self.values[i.saturating_sub(1)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum ScheduleMode {
    /// θ = 1 while a prediction's probability exceeds `threshold`, else 0.
    Hard { threshold: f64 },
    /// θ = the predicted probability itself.
    Soft,
}

/// Builds θ(t) from `(day index, P(θ=1))` pairs: each prediction holds for
/// `horizon_days` days starting at its index, later predictions win on
/// overlap, and uncovered days read 0.
pub fn schedule_from_predictions(
    predictions: &[(usize, f64)],
    mode: ScheduleMode,
    horizon_days: usize,
) -> Result<ThetaSchedule> {
    if predictions.is_empty() {
        return Err(Error::param("predictions", "no predictions to build a schedule from"));
    }
    if horizon_days == 0 {
        return Err(Error::param("horizon_days", "must be at least 1"));
    }
    if predictions.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::param("predictions", "day indices must be strictly increasing"));
    }
    let end = predictions.last().map(|p| p.0 + horizon_days).unwrap_or(0);
    let mut daily = vec![0.0; end];
    for &(day, p) in predictions {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::param("predictions", format!("probability {p} outside [0, 1]")));
        }
        let theta = match mode {
            ScheduleMode::Hard { threshold } => f64::from(u8::from(p > threshold)),
            ScheduleMode::Soft => p,
        };
        daily[day..day + horizon_days].fill(theta);
    }
    daily.push(0.0);
    let mut breakpoints = vec![0.0];
    let mut values = vec![daily[0]];
    for (d, &v) in daily.iter().enumerate().skip(1) {
        if v != *values.last().unwrap() {
            breakpoints.push(d as f64 * DAY);
            values.push(v);
        }
    }
    ThetaSchedule::new(breakpoints, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_hard_prediction_covers_exactly_the_horizon() {
        let s = schedule_from_predictions(&[(3, 1.0)], ScheduleMode::Hard { threshold: 0.5 }, 7).unwrap();
        assert_eq!(s.at(2.0 * DAY), 0.0);
        assert_eq!(s.at(3.0 * DAY), 1.0);
        assert_eq!(s.at(9.0 * DAY), 1.0);
        assert_eq!(s.at(10.0 * DAY), 0.0);
        assert_eq!(s.at(100.0), 0.0);
    }

    #[test]
    fn all_zero_probabilities_give_constant_zero() {
        let preds: Vec<(usize, f64)> = (0..20).map(|i| (i, 0.0)).collect();
        for mode in [ScheduleMode::Soft, ScheduleMode::Hard { threshold: 0.3 }] {
            let s = schedule_from_predictions(&preds, mode, 7).unwrap();
            assert!(s.is_constant());
            assert_eq!(s.at(0.0), 0.0);
        }
    }

    #[test]
    fn later_prediction_wins_overlap() {
        let s = schedule_from_predictions(&[(0, 0.2), (3, 0.9)], ScheduleMode::Soft, 7).unwrap();
        assert_eq!(s.at(1.0 * DAY), 0.2);
        assert_eq!(s.at(3.0 * DAY), 0.9);
        assert_eq!(s.at(6.5 * DAY), 0.9);
        assert_eq!(s.at(10.0 * DAY), 0.0);
    }

    #[test]
    fn right_continuous_at_breakpoints() {
        let s = ThetaSchedule::new(vec![0.0, 0.5], vec![0.1, 0.7]).unwrap();
        assert_eq!(s.at(0.5), 0.7);
        assert_eq!(s.at(0.5 - 1e-12), 0.1);
    }

    #[test]
    fn invalid_inputs() {
        assert!(schedule_from_predictions(&[], ScheduleMode::Soft, 7).is_err());
        assert!(schedule_from_predictions(&[(2, 0.1), (1, 0.1)], ScheduleMode::Soft, 7).is_err());
        assert!(ThetaSchedule::constant(1.5).is_err());
        assert!(ThetaSchedule::new(vec![0.0, 0.0], vec![0.1, 0.2]).is_err());
    }
}
