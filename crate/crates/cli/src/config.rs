use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use bns_core::labels::HORIZON;
use bns_core::learners::ModelKind;
use bns_core::levy_sim::{BnsParams, ScheduleMode, SimModel, DAY};
use bns_core::market_data::ColumnMap;
use bns_core::{IndexRange, TrainConfig};

/// Env var naming the default output directory.
pub const OUT_DIR_ENV: &str = "BNS_OUT_DIR";
pub const FALLBACK_OUT_DIR: &str = "bns-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleFormat {
    Csv,
    Bin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSettings {
    pub model: SimModel,
    pub paths: usize,
    pub steps: usize,
    /// Years.
    pub horizon: f64,
    pub format: EnsembleFormat,
    /// How classifier output becomes θ(t).
    pub schedule: ScheduleMode,
    /// Days each prediction holds θ.
    pub hold_days: usize,
}

impl Default for SimulationSettings {
    fn default() -> Self {
        Self {
            model: SimModel::Refined,
            paths: 1000,
            steps: 252,
            horizon: 1.0,
            format: EnsembleFormat::Bin,
            schedule: ScheduleMode::Soft,
            hold_days: HORIZON,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorrelationSettings {
    pub s: f64,
    pub t_grid: Vec<f64>,
    pub paths: usize,
    pub dt: f64,
    /// Constant θ for the refined profile.
    pub theta: f64,
}

impl Default for CorrelationSettings {
    fn default() -> Self {
        Self {
            s: 1.0,
            t_grid: vec![2.0, 3.0, 4.0, 5.0],
            paths: 2000,
            dt: DAY,
            theta: 0.5,
        }
    }
}

/// Everything a run needs. Output directory and thread count are not part
/// of it: they do not change any artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub data: Option<PathBuf>,
    pub columns: ColumnMap,
    pub k_percent: f64,
    pub train_range: String,
    pub test_range: String,
    pub model: ModelKind,
    pub seed: u64,
    pub train: TrainConfig,
    pub bns: BnsParams,
    pub simulation: SimulationSettings,
    pub correlation: CorrelationSettings,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            data: None,
            columns: ColumnMap::default(),
            k_percent: 2.0,
            train_range: "100:500".into(),
            test_range: "501:600".into(),
            model: ModelKind::Lr,
            seed: 0,
            train: TrainConfig::default(),
            bns: BnsParams::default(),
            simulation: SimulationSettings::default(),
            correlation: CorrelationSettings::default(),
        }
    }
}

/// Flag values that override the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub data: Option<PathBuf>,
    pub k: Option<f64>,
    pub train_range: Option<String>,
    pub test_range: Option<String>,
    pub model: Option<ModelKind>,
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub steps: Option<usize>,
    pub horizon: Option<f64>,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("config {}: {e}", path.display()))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = &o.data {
            self.data = Some(v.clone());
        }
        if let Some(v) = o.k {
            self.k_percent = v;
        }
        if let Some(v) = &o.train_range {
            self.train_range = v.clone();
        }
        if let Some(v) = &o.test_range {
            self.test_range = v.clone();
        }
        if let Some(v) = o.model {
            self.model = v;
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.paths {
            self.simulation.paths = v;
        }
        if let Some(v) = o.steps {
            self.simulation.steps = v;
        }
        if let Some(v) = o.horizon {
            self.simulation.horizon = v;
        }
        // one root seed drives training and simulation alike
        self.train.rng_seed = self.seed;
    }

    pub fn ranges(&self) -> Result<(IndexRange, IndexRange), String> {
        let train = self.train_range.parse::<IndexRange>().map_err(|e| e.to_string())?;
        let test = self.test_range.parse::<IndexRange>().map_err(|e| e.to_string())?;
        Ok((train, test))
    }

    /// Every problem with the configuration, not just the first.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.k_percent.is_finite() && self.k_percent > 0.0) {
            out.push(format!("k_percent must be > 0, got {}", self.k_percent));
        }
        match self.ranges() {
            Err(e) => out.push(e),
            Ok((train, test)) => {
                for (name, r) in [("train_range", train), ("test_range", test)] {
                    if r.is_empty() {
                        out.push(format!("{name} {r} is empty"));
                    }
                }
                if test.lo <= train.lo {
                    out.push(format!("test_range {test} must start after train_range {train}"));
                }
            }
        }
        out.extend(self.train.violations().into_iter().map(|v| format!("train: {v}")));
        out.extend(self.bns.violations().into_iter().map(|v| format!("bns: {v}")));
        if self.bns.violations().is_empty() {
            if let Err(e) = self.bns.validate_for(self.simulation.model) {
                out.push(format!("bns: {e}"));
            }
        }
        let sim = &self.simulation;
        if sim.paths == 0 {
            out.push("simulation.paths must be at least 1".into());
        }
        if sim.steps == 0 {
            out.push("simulation.steps must be at least 1".into());
        }
        if !(sim.horizon.is_finite() && sim.horizon > 0.0) {
            out.push(format!("simulation.horizon must be > 0, got {}", sim.horizon));
        }
        if sim.hold_days == 0 {
            out.push("simulation.hold_days must be at least 1".into());
        }
        if let ScheduleMode::Hard { threshold } = sim.schedule {
            if !(threshold > 0.0 && threshold < 1.0) {
                out.push(format!(
                    "simulation.schedule.threshold must lie in (0, 1), got {threshold}"
                ));
            }
        }
        let c = &self.correlation;
        if !(c.s > 0.0) {
            out.push(format!("correlation.s must be > 0, got {}", c.s));
        }
        if c.t_grid.is_empty() || c.t_grid[0] <= c.s || c.t_grid.windows(2).any(|w| w[1] <= w[0]) {
            out.push("correlation.t_grid must be non-empty, increasing and above s".into());
        }
        if !(c.dt > 0.0) {
            out.push(format!("correlation.dt must be > 0, got {}", c.dt));
        }
        if !(0.0..=1.0).contains(&c.theta) {
            out.push(format!("correlation.theta must lie in [0, 1], got {}", c.theta));
        }
        if (1..4).contains(&c.paths) {
            out.push("correlation.paths must be 0 (formula only) or at least 4".into());
        }
        out
    }

    pub fn require_data(&self) -> Result<&Path, String> {
        self.data
            .as_deref()
            .ok_or_else(|| "no input data: pass --data or set \"data\" in the config".to_string())
    }
}

pub fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(FALLBACK_OUT_DIR))
}
