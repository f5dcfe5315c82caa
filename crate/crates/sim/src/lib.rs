//! Scenario simulator for the reactive power set-point adaptation of a
//! back-to-back drive: configuration, the multi-rate loop, metrics, the PQ
//! capability map and output files.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod convergence;
pub mod metrics;
pub mod output;
pub mod pqmap;
pub mod scenario;
pub mod sim;
pub mod verify;

pub use config::{load_config, OuterMode, SimConfig};
pub use metrics::MetricsReport;
pub use sim::{simulate, RunOutput, SimError, TraceRow};

use config::OuterMode as Mode;

/// Simulates the configured scenario and summarizes it. OFO runs also get the
/// convergence section (which performs an identification run).
pub fn run_scenario(cfg: &SimConfig) -> Result<(RunOutput, MetricsReport), SimError> {
    let out = simulate(cfg)?;
    let conv = (cfg.outer_mode == Mode::Ofo).then(|| convergence::convergence_report(cfg, &out.triggers));
    let m = metrics::compute_metrics(cfg, &out, conv);
    Ok((out, m))
}
