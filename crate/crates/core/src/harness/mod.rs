//! Closed-loop simulation engine, scenario files, metrics and export.

mod config;
mod log;
mod metrics;
mod sim;
mod sweep;

pub use config::{ControllerConfig, ControllerKind, ScenarioConfig, SimConfig};
pub use log::{ExportError, Record, TrajectoryLog};
pub use metrics::{pe_metric, run_metrics, PlateauMetrics, RunMetrics, SteadySummary, STEADY_FRACTION};
pub use sim::{simulate, SimError, PE_WINDOW_PERIODS};
pub use sweep::{epsilon_sweep, fit_loglog, lemma_residual, ScalingFit, SweepReport, SweepRun};
