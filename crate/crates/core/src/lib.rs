//! Jump-aware Barndorff-Nielsen–Shephard volatility modelling: market-data
//! ingestion, jump-cluster labelling, θ classifiers, classification metrics,
//! Lévy-driven path simulation and the model's correlation structure.

pub mod dependence;
pub mod error;
pub mod labels;
pub mod learners;
pub mod levy_sim;
pub mod market_data;
pub mod metrics;
pub mod numeric;
pub mod rng;

pub use dependence::{corr_classical, corr_refined, mc_correlation, CorrEstimate, CorrInputs};
pub use error::{Error, Result};
pub use labels::{build_dataset, detect_jumps, IndexRange, JumpSet, WindowDataset, WindowRow};
pub use learners::{predict_theta, train_model, ModelKind, Prediction, TrainConfig, TrainedModel};
pub use levy_sim::{
    simulate_ensemble, simulate_path, BnsParams, SimEnsemble, SimGrid, SimModel, SimPath, SubordinatorSpec,
    ThetaSchedule,
};
pub use market_data::{load_csv, summary_stats, ColumnMap, PriceRecord, PriceSeries, SeriesStats};
pub use metrics::{confusion, report, ClassReport, ConfusionMatrix};
