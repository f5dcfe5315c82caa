//! Summary statistics of a run.

use serde::Serialize;

use crate::config::SimConfig;
use crate::convergence::ConvergenceReport;
use crate::sim::{Counters, RunOutput};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub outer_mode: String,
    pub scenario: String,
    pub rows: usize,
    pub t_end: f64,
    pub max_m_raw_norm: f64,
    pub max_m_norm: f64,
    /// Time with the raw modulation command beyond the limit, s.
    pub time_modulation_saturated: f64,
    /// Time with the measured current above `i_g_max`, s.
    pub time_current_above_limit: f64,
    pub max_i_norm: f64,
    pub max_i_over_limit: f64,
    pub v_dc_min: f64,
    pub v_dc_max: f64,
    pub max_abs_w: f64,
    pub overspeed: bool,
    /// RMS of `Q_meas − Q_ref` over the run, var.
    pub q_tracking_rms: f64,
    pub trip_time: Option<f64>,
    pub stopped: bool,
    pub counters: Counters,
    pub convergence: Option<ConvergenceReport>,
}

pub fn compute_metrics(cfg: &SimConfig, out: &RunOutput, convergence: Option<ConvergenceReport>) -> MetricsReport {
    let tr = &out.trace;
    let t_c = cfg.timing.t_c;
    let lim = &cfg.limits;
    let fold_max = |f: &dyn Fn(&crate::sim::TraceRow) -> f64| tr.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
    let count = |f: &dyn Fn(&crate::sim::TraceRow) -> bool| tr.iter().filter(|r| f(r)).count() as f64 * t_c;
    let max_i = fold_max(&|r| r.i_norm);
    let q_rms = if tr.is_empty() {
        0.0
    } else {
        (tr.iter().map(|r| (r.q_meas - r.q_ref).powi(2)).sum::<f64>() / tr.len() as f64).sqrt()
    };
    MetricsReport {
        outer_mode: cfg.outer_mode.to_string(),
        scenario: format!("{:?}", cfg.scenario.kind),
        rows: tr.len(),
        t_end: tr.last().map_or(0.0, |r| r.t),
        max_m_raw_norm: fold_max(&|r| r.m_raw_norm),
        max_m_norm: fold_max(&|r| r.m_norm),
        time_modulation_saturated: count(&|r| r.m_raw_norm > r.m_limit),
        time_current_above_limit: count(&|r| r.i_norm > r.i_g_max),
        max_i_norm: max_i,
        max_i_over_limit: max_i / lim.i_g_max,
        v_dc_min: tr.iter().map(|r| r.v_dc).fold(f64::INFINITY, f64::min),
        v_dc_max: fold_max(&|r| r.v_dc),
        max_abs_w: fold_max(&|r| r.w.abs()),
        overspeed: out.overspeed,
        q_tracking_rms: q_rms,
        trip_time: out.trip_time,
        stopped: out.stopped,
        counters: out.counters,
        convergence,
    }
}
