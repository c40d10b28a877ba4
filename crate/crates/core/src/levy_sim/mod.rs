//! Classical, generalized and refined BN-S path simulation.
//!
//! Variance follows an OU process decayed exactly between steps and kicked
//! by subordinator increments sampled over subordinator time `λΔt`; the
//! log-return takes an Euler step plus leveraged jumps. All randomness comes
//! from per-path streams, so ensembles are reproducible under any thread count.

mod ensemble;
mod params;
mod path;
mod schedule;
mod subordinator;

pub use ensemble::{simulate_ensemble, EnsembleOptions, Recording, SimEnsemble, DEFAULT_MAX_BYTES, MAGIC};
pub use params::{BnsParams, SimModel};
pub use path::{expected_variance_path, simulate_path, NodeState, SimGrid, SimPath, Simulator, StreamLayout};
pub use schedule::{schedule_from_predictions, ScheduleMode, ThetaSchedule, DAY};
pub use subordinator::{IncrementSampler, SubordinatorSpec};
