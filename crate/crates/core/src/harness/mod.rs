//! Experiment harness: configuration, the sweep runner, metrics,
//! statistics and plot emission.

pub mod config;
pub mod metrics;
pub mod plots;
pub mod stats;
pub mod sweep;

pub use config::{ExperimentConfig, ExperimentKind};
pub use metrics::{
    conc_rmse_movie, conc_rmse_network, decile_errors, outlet_ratio, strouhal_threshold,
    velocity_timeseries, DecileErrors, MetricsRecord, NetworkVelocity, StrouhalInputs,
    VelocitySource,
};
pub use plots::{emit_plots, read_metrics_csv, write_metrics_csv};
pub use stats::{paired_ttest_bonferroni, welch_ttest, TTestResult};
pub use sweep::{enumerate_cells, ground_truth, run_sweep, CellOutcome, SweepCell};
