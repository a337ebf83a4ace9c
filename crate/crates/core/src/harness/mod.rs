//! Scenario files, experiment pipelines and file output.

pub mod output;
pub mod run;
pub mod scenario;

pub use run::{
    decay_scenario, error_metrics, gain_sweep, observe_scenario, simulate_scenario, DecayOutcome,
    ErrorMetrics, ObserveOutcome, Summary, SweepOutcome, SweepRow,
};
pub use scenario::{bundled_names, Scenario};
