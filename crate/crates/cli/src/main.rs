mod config;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use bns_core::learners::ModelKind;
use bns_core::market_data::PlotKind;

use config::{default_out_dir, Overrides, PipelineConfig};
use stages::{load_model, Run, StageError};

#[derive(Parser, Debug)]
#[command(
    name = "bns",
    version,
    about = "Jump labelling, θ classification and BN-S simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory [default: $BNS_OUT_DIR or ./bns-out]
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Price CSV with Date and Close columns.
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    /// Drop threshold in percent.
    #[arg(long, global = true)]
    k: Option<f64>,
    /// Training date-index range, e.g. 100:500.
    #[arg(long, global = true)]
    train_range: Option<String>,
    /// Test date-index range, e.g. 501:600.
    #[arg(long, global = true)]
    test_range: Option<String>,
    #[arg(long, global = true, value_parser = parse_model)]
    model: Option<ModelKind>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Simulated paths.
    #[arg(long, global = true)]
    paths: Option<usize>,
    /// Simulation steps.
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// Simulation horizon in years.
    #[arg(long, global = true)]
    horizon: Option<f64>,
    /// Worker threads for simulation (0 = all cores). Does not affect results.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load and normalise the price CSV.
    Ingest,
    /// Summary statistics of daily changes.
    Stats {
        /// Also write plot-ready data: close, yearly-box, histogram-change or histogram-pct.
        #[arg(long, value_parser = parse_plot)]
        plot: Option<PlotKind>,
        #[arg(long, default_value_t = 50)]
        bins: usize,
    },
    /// Detect drops and build the labelled window dataset.
    Label,
    /// Fit the chosen classifier on the training range.
    Train,
    /// Score a trained model on the test range.
    Evaluate {
        /// Model JSON [default: <out>/model.json]
        #[arg(long)]
        model_file: Option<PathBuf>,
    },
    /// Simulate an ensemble under constant θ.
    Simulate,
    /// Correlation decay, formula against Monte Carlo.
    Correlate,
    /// ingest → label → train → evaluate → simulate → correlate.
    Pipeline,
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    s.parse().map_err(|e: bns_core::Error| e.to_string())
}

fn parse_plot(s: &str) -> Result<PlotKind, String> {
    s.parse().map_err(|e: bns_core::Error| e.to_string())
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Ingest => "ingest",
        Command::Stats { .. } => "stats",
        Command::Label => "label",
        Command::Train => "train",
        Command::Evaluate { .. } => "evaluate",
        Command::Simulate => "simulate",
        Command::Correlate => "correlate",
        Command::Pipeline => "pipeline",
    }
}

fn report_error(stage: &str, message: &str, violations: &[String]) {
    let body = json!({"error": {"stage": stage, "message": message, "violations": violations}});
    eprintln!("{body}");
}

fn resolve(cli: &Cli) -> Result<PipelineConfig, String> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    cfg.apply(&Overrides {
        data: cli.data.clone(),
        k: cli.k,
        train_range: cli.train_range.clone(),
        test_range: cli.test_range.clone(),
        model: cli.model,
        seed: cli.seed,
        paths: cli.paths,
        steps: cli.steps,
        horizon: cli.horizon,
    });
    Ok(cfg)
}

fn execute(run: &mut Run, command: &Command) -> Result<(), StageError> {
    match command {
        Command::Ingest => {
            run.ingest()?;
        }
        Command::Stats { plot, bins } => {
            let series = run.ingest()?;
            let stats = run.stats(&series, plot.map(|p| (p, *bins)))?;
            println!("{}", serde_json::to_string_pretty(&stats).unwrap_or_default());
        }
        Command::Label => {
            let series = run.ingest()?;
            run.label(&series)?;
        }
        Command::Train => {
            let series = run.ingest()?;
            let data = run.label(&series)?;
            run.train(&series, &data)?;
        }
        Command::Evaluate { model_file } => {
            let path = model_file.clone().unwrap_or_else(|| run.out.join("model.json"));
            let model = load_model(&path)?;
            let series = run.ingest()?;
            let data = run.label(&series)?;
            run.evaluate(&series, &data, &model)?;
        }
        Command::Simulate => {
            run.simulate(None)?;
        }
        Command::Correlate => run.correlate()?,
        Command::Pipeline => {
            let series = run.ingest()?;
            run.stats(&series, None)?;
            let data = run.label(&series)?;
            let model = run.train(&series, &data)?;
            let preds = run.evaluate(&series, &data, &model)?;
            run.simulate(Some(&preds))?;
            run.correlate()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match resolve(&cli) {
        Ok(c) => c,
        Err(e) => {
            report_error("config", &e, &[]);
            return ExitCode::from(2);
        }
    };
    let violations = cfg.violations();
    if !violations.is_empty() {
        report_error("config", "invalid configuration", &violations);
        return ExitCode::from(2);
    }
    let out = cli.out.clone().unwrap_or_else(default_out_dir);
    let name = command_name(&cli.command);
    let mut run = Run::new(cfg, out, cli.threads);
    match execute(&mut run, &cli.command).and_then(|_| run.finish(name)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report_error(e.stage, &e.message, &[]);
            ExitCode::FAILURE
        }
    }
}
