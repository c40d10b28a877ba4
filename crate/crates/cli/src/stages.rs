//! Pipeline stages. Each writes its artifacts into the output directory and
//! records them for the manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use bns_core::dependence::{decay_profile, DecayRow, DecaySettings};
use bns_core::labels::{row_ranges, split_by_date, WINDOW_LEN};
use bns_core::learners::{predict_dataset, train_model, Prediction, TrainedModel};
use bns_core::levy_sim::{
    schedule_from_predictions, simulate_ensemble, EnsembleOptions, SimEnsemble, SimGrid, SimModel, ThetaSchedule,
};
use bns_core::market_data::{emit_plot_data, PlotKind};
use bns_core::metrics::{format_table, report};
use bns_core::numeric::{mean, sample_variance};
use bns_core::{build_dataset, detect_jumps, load_csv, summary_stats, PriceSeries, WindowDataset};

use crate::config::{EnsembleFormat, PipelineConfig};

#[derive(Debug)]
pub struct StageError {
    pub stage: &'static str,
    pub message: String,
}

pub type StageResult<T> = Result<T, StageError>;

fn fail<E: std::fmt::Display>(stage: &'static str) -> impl Fn(E) -> StageError {
    move |e| StageError {
        stage,
        message: e.to_string(),
    }
}

#[derive(Debug, Serialize)]
struct Artifact {
    file: String,
    sha256: String,
}

pub struct Run {
    pub cfg: PipelineConfig,
    pub out: PathBuf,
    pub threads: usize,
    artifacts: Vec<Artifact>,
    warnings: Vec<String>,
}

impl Run {
    pub fn new(cfg: PipelineConfig, out: PathBuf, threads: usize) -> Self {
        Self {
            cfg,
            out,
            threads,
            artifacts: Vec::new(),
            warnings: Vec::new(),
        }
    }

    fn write(&mut self, stage: &'static str, name: &str, bytes: &[u8]) -> StageResult<()> {
        fs::create_dir_all(&self.out).map_err(fail(stage))?;
        fs::write(self.out.join(name), bytes).map_err(|e| StageError {
            stage,
            message: format!("cannot write {name}: {e}"),
        })?;
        self.artifacts.push(Artifact {
            file: name.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, stage: &'static str, name: &str, value: &T) -> StageResult<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(fail(stage))?;
        text.push('\n');
        self.write(stage, name, text.as_bytes())
    }

    pub fn warn(&mut self, message: String) {
        eprintln!("warning: {message}");
        self.warnings.push(message);
    }

    /// Records the resolved config, its hash, the seed and every artifact.
    pub fn finish(&mut self, command: &str) -> StageResult<()> {
        let config = serde_json::to_string(&self.cfg).map_err(fail("manifest"))?;
        let manifest = json!({
            "command": command,
            "config_sha256": hex::encode(Sha256::digest(config.as_bytes())),
            "seed": self.cfg.seed,
            "config": self.cfg,
            "artifacts": self.artifacts,
            "warnings": self.warnings,
        });
        let mut text = serde_json::to_string_pretty(&manifest).map_err(fail("manifest"))?;
        text.push('\n');
        fs::create_dir_all(&self.out).map_err(fail("manifest"))?;
        fs::write(self.out.join("manifest.json"), text).map_err(fail("manifest"))
    }

    pub fn ingest(&mut self) -> StageResult<PriceSeries> {
        let path = self.cfg.require_data().map_err(fail("ingest"))?.to_path_buf();
        let series = load_csv(&path, &self.cfg.columns).map_err(fail("ingest"))?;
        let mut buf = Vec::new();
        series.write_csv(&mut buf).map_err(fail("ingest"))?;
        self.write("ingest", "prices.csv", &buf)?;
        Ok(series)
    }

    pub fn stats(&mut self, series: &PriceSeries, plot: Option<(PlotKind, usize)>) -> StageResult<serde_json::Value> {
        let stats = summary_stats(series).map_err(fail("stats"))?;
        let value = serde_json::to_value(stats).map_err(fail("stats"))?;
        self.write_json("stats", "stats.json", &value)?;
        if let Some((kind, bins)) = plot {
            let mut buf = Vec::new();
            emit_plot_data(series, kind, bins, &mut buf).map_err(fail("stats"))?;
            let name = format!(
                "plot-{}.csv",
                serde_json::to_value(kind)
                    .map_err(fail("stats"))?
                    .as_str()
                    .unwrap_or("data")
            );
            self.write("stats", &name, &buf)?;
        }
        Ok(value)
    }

    pub fn label(&mut self, series: &PriceSeries) -> StageResult<WindowDataset> {
        let jumps = detect_jumps(series, self.cfg.k_percent).map_err(fail("label"))?;
        let data = build_dataset(series, &jumps);
        if data.is_empty() {
            self.warn(format!(
                "series of {} records is too short for any labelled window (need at least {})",
                series.len(),
                2 * WINDOW_LEN
            ));
        }
        let mut buf = Vec::new();
        data.write_csv(&mut buf).map_err(fail("label"))?;
        self.write("label", "dataset.csv", &buf)?;
        let (n0, n1) = data.class_counts();
        self.write_json(
            "label",
            "labels.json",
            &json!({
                "k_percent": self.cfg.k_percent,
                "jumps": jumps.jump_indices.len(),
                "rows": data.len(),
                "theta0": n0,
                "theta1": n1,
            }),
        )?;
        Ok(data)
    }

    fn split(
        &self,
        stage: &'static str,
        series: &PriceSeries,
        data: &WindowDataset,
    ) -> StageResult<(WindowDataset, WindowDataset)> {
        let (train, test) = self.cfg.ranges().map_err(fail(stage))?;
        let (train, test) = row_ranges(train, test);
        split_by_date(data, series, train, test).map_err(fail(stage))
    }

    pub fn train(&mut self, series: &PriceSeries, data: &WindowDataset) -> StageResult<TrainedModel> {
        let (train, _) = self.split("train", series, data)?;
        let (model, report) = train_model(self.cfg.model, &train, &self.cfg.train).map_err(fail("train"))?;
        for w in &report.warnings {
            self.warn(w.clone());
        }
        let text = model.to_json().map_err(fail("train"))?;
        self.write("train", "model.json", format!("{text}\n").as_bytes())?;
        let (n0, n1) = train.class_counts();
        self.write_json(
            "train",
            "train_report.json",
            &json!({
                "model": self.cfg.model,
                "rows": train.len(),
                "theta0": n0,
                "theta1": n1,
                "loss_history": report.loss_history,
                "warnings": report.warnings,
            }),
        )?;
        Ok(model)
    }

    /// Scores the test block; returns `(start_index, prediction)` pairs.
    pub fn evaluate(
        &mut self,
        series: &PriceSeries,
        data: &WindowDataset,
        model: &TrainedModel,
    ) -> StageResult<Vec<(usize, Prediction)>> {
        let (_, test) = self.split("evaluate", series, data)?;
        if test.is_empty() {
            return Err(StageError {
                stage: "evaluate",
                message: "test range selects no labelled rows".into(),
            });
        }
        let preds = predict_dataset(model, &test);
        let truth = test.labels();
        let labels: Vec<u8> = preds.iter().map(|p| p.label).collect();
        let rep = report(&truth, &labels).map_err(fail("evaluate"))?;
        let name = model.kind().to_string();
        let table = format_table(&[(name.as_str(), &rep)]);
        self.write("evaluate", "report.txt", table.as_bytes())?;
        self.write_json(
            "evaluate",
            "evaluation.json",
            &json!({
                "model": model.kind(),
                "threshold": model.threshold,
                "train_range": self.cfg.train_range,
                "test_range": self.cfg.test_range,
                "support_theta0": rep.class0.support,
                "support_theta1": rep.class1.support,
                "report": rep,
            }),
        )?;
        let mut csv = String::from("start_index,date,prob_theta1,label,theta\n");
        for (row, p) in test.rows.iter().zip(&preds) {
            let date = series.records()[row.start_index].date;
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                row.start_index, date, p.prob_theta1, p.label, row.theta
            ));
        }
        self.write("evaluate", "predictions.csv", csv.as_bytes())?;
        Ok(test.rows.iter().map(|r| r.start_index).zip(preds).collect())
    }

    /// Simulates under θ(t) from `predictions` (first horizon day of the
    /// first test window is t = 0), or under constant `bns.theta`.
    pub fn simulate(&mut self, predictions: Option<&[(usize, Prediction)]>) -> StageResult<SimEnsemble> {
        let sim = self.cfg.simulation.clone();
        let schedule = match predictions {
            Some(preds) if !preds.is_empty() => {
                let base = preds[0].0;
                let days: Vec<(usize, f64)> = preds.iter().map(|(start, p)| (start - base, p.prob_theta1)).collect();
                schedule_from_predictions(&days, sim.schedule, sim.hold_days).map_err(fail("simulate"))?
            }
            _ => ThetaSchedule::constant(self.cfg.bns.theta).map_err(fail("simulate"))?,
        };
        self.write_json("simulate", "schedule.json", &schedule)?;
        let grid = SimGrid::new(sim.horizon, sim.steps).map_err(fail("simulate"))?;
        let opts = EnsembleOptions {
            threads: self.threads,
            ..EnsembleOptions::default()
        };
        let ens = simulate_ensemble(
            &self.cfg.bns,
            &schedule,
            sim.model,
            grid,
            sim.paths,
            self.cfg.seed,
            &opts,
        )
        .map_err(fail("simulate"))?;
        let mut buf = Vec::new();
        let name = match sim.format {
            EnsembleFormat::Bin => {
                ens.write_binary(&mut buf).map_err(fail("simulate"))?;
                "ensemble.bin"
            }
            EnsembleFormat::Csv => {
                ens.write_csv(&mut buf).map_err(fail("simulate"))?;
                "ensemble.csv"
            }
        };
        self.write("simulate", name, &buf)?;
        let last = ens.nodes.len() - 1;
        let x = ens.x_column(last);
        let v = ens.sigma_sq_column(last);
        self.write_json(
            "simulate",
            "simulation.json",
            &json!({
                "model": sim.model,
                "paths": sim.paths,
                "steps": sim.steps,
                "horizon": sim.horizon,
                "terminal_x_mean": mean(&x),
                "terminal_x_var": sample_variance(&x),
                "terminal_sigma_sq_mean": mean(&v),
            }),
        )?;
        Ok(ens)
    }

    pub fn correlate(&mut self) -> StageResult<()> {
        let c = self.cfg.correlation.clone();
        let settings = DecaySettings {
            dt: c.dt,
            n_paths: c.paths,
            seed: self.cfg.seed,
            threads: self.threads,
        };
        let mut rows: Vec<(SimModel, DecayRow)> = Vec::new();
        for (model, theta) in [(SimModel::Classical, 0.0), (SimModel::Refined, c.theta)] {
            let mut params = self.cfg.bns.clone();
            params.theta = theta;
            let profile = decay_profile(&params, model, c.s, &c.t_grid, &settings).map_err(fail("correlate"))?;
            rows.extend(profile.into_iter().map(|r| (model, r)));
        }
        let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut csv = String::from("model,s,t,formula_corr,mc_corr,mc_se\n");
        for (m, r) in &rows {
            csv.push_str(&format!(
                "{m},{},{},{},{},{}\n",
                c.s,
                r.t,
                r.formula_corr,
                cell(r.mc_corr),
                cell(r.mc_se)
            ));
        }
        self.write("correlate", "decay.csv", csv.as_bytes())?;
        let discrepancies: Vec<serde_json::Value> = rows
            .iter()
            .map(|(m, r)| {
                let z = match (r.mc_corr, r.mc_se) {
                    (Some(mc), Some(se)) => Some((r.formula_corr - mc).abs() / se),
                    _ => None,
                };
                json!({"model": m, "t": r.t, "formula_corr": r.formula_corr, "mc_corr": r.mc_corr, "z_score": z})
            })
            .collect();
        let worst = discrepancies
            .iter()
            .filter_map(|d| d["z_score"].as_f64())
            .fold(None, |acc: Option<f64>, z| Some(acc.map_or(z, |a| a.max(z))));
        self.write_json(
            "correlate",
            "correlation.json",
            &json!({
                "s": c.s,
                "paths": c.paths,
                "theta": c.theta,
                "max_z_score": worst,
                "rows": discrepancies,
            }),
        )
    }
}

pub fn load_model(path: &Path) -> StageResult<TrainedModel> {
    let text = fs::read_to_string(path).map_err(|e| StageError {
        stage: "evaluate",
        message: format!("cannot read model {}: {e}", path.display()),
    })?;
    TrainedModel::from_json(&text).map_err(fail("evaluate"))
}
