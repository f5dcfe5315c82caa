//! Inner-loop identification and the convergence report of OFO runs.

use serde::Serialize;

use drive_core::oracle::{
    corollary1_asymptote, estimate_inner_loop_constants, theorem1_check, ConvergenceRecord, InnerLoopConstants,
    InnerLoopFit,
};

use crate::config::SimConfig;
use crate::sim::{inner_step_response, SimError, TriggerSample};

/// Ticks simulated before the identification step.
const ID_SETTLE_TICKS: u64 = 8;
/// Ticks recorded after the step.
const ID_RECORD_TICKS: u64 = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Identification {
    pub fit: InnerLoopFit,
    pub constants: InnerLoopConstants,
    /// `Q_star` step used, var.
    pub step: f64,
}

/// Estimates `C₁`, `C₂` from a small `Q_star` step at the scenario's initial
/// operating point; `C₃` comes from the OFO step size.
pub fn identify(cfg: &SimConfig) -> Result<Identification, IdentifyError> {
    let step = 0.02 * cfg.limits.p_g_max;
    let response = inner_step_response(cfg, step, ID_SETTLE_TICKS, ID_RECORD_TICKS)?;
    let fit = estimate_inner_loop_constants(&response)?;
    Ok(Identification { fit, constants: fit.with_step_scale(cfg.ofo.c3()), step })
}

#[derive(Debug, thiserror::Error)]
pub enum IdentifyError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Core(#[from] drive_core::Error),
}

/// Builds convergence records from consecutive trigger samples.
pub fn records(triggers: &[TriggerSample], epsilon: f64) -> Vec<ConvergenceRecord> {
    triggers
        .iter()
        .enumerate()
        .map(|(l, s)| ConvergenceRecord {
            k: s.k,
            psi: (s.q_star - s.q_opt).abs(),
            epsilon,
            delta_qopt: triggers.get(l + 1).map_or(0.0, |n| s.q_opt - n.q_opt),
            inner_residual: s.inner_residual,
            v_norm: s.v_norm,
        })
        .collect()
}

/// Geometric-mean per-trigger ratio `ψ(l+1)/ψ(l)` over the leading stretch
/// where `ψ` stays above `floor_rel` of its first value.
pub fn measured_contraction(records: &[ConvergenceRecord], floor_rel: f64) -> Option<f64> {
    let psi0 = records.first()?.psi;
    let n = records.iter().take_while(|r| r.psi > floor_rel * psi0 && r.psi > 0.0).count();
    if n < 2 {
        return None;
    }
    Some((records[n - 1].psi / psi0).powf(1.0 / (n - 1) as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    /// Disturbances were held between triggers; the inequality checks then
    /// carry PASS/FAIL meaning, otherwise they are telemetry.
    pub assumption3: bool,
    pub identification: Option<Identification>,
    pub identification_error: Option<String>,
    pub epsilon: f64,
    pub ticks_per_trigger: u64,
    pub triggers: usize,
    pub theorem1_pairs: usize,
    pub theorem1_satisfied: usize,
    pub theorem1_fraction: f64,
    pub theorem1_worst_margin: f64,
    pub theorem1_pass: Option<bool>,
    pub measured_contraction: Option<f64>,
    pub dq_opt_max: f64,
    pub corollary1_bound: Option<f64>,
    pub corollary1_error: Option<String>,
    /// Largest `ψ` over the second half of the triggers, var.
    pub tail_sup_psi: f64,
    pub corollary1_holds: Option<bool>,
}

pub fn convergence_report(cfg: &SimConfig, triggers: &[TriggerSample]) -> ConvergenceReport {
    let eps = cfg.ofo.epsilon();
    let m = cfg.ticks_per_trigger();
    let recs = records(triggers, eps);
    let (identification, identification_error) = match identify(cfg) {
        Ok(id) => (Some(id), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let dq_opt_max = recs.iter().map(|r| r.delta_qopt.abs()).fold(0.0, f64::max);
    let tail_sup_psi = recs[recs.len() / 2..].iter().map(|r| r.psi).fold(0.0, f64::max);
    let assumption3 = cfg.scenario.assumption3;
    let mut rep = ConvergenceReport {
        assumption3,
        identification,
        identification_error,
        epsilon: eps,
        ticks_per_trigger: m,
        triggers: recs.len(),
        theorem1_pairs: 0,
        theorem1_satisfied: 0,
        theorem1_fraction: f64::NAN,
        theorem1_worst_margin: f64::NAN,
        theorem1_pass: None,
        measured_contraction: measured_contraction(&recs, 1e-3),
        dq_opt_max,
        corollary1_bound: None,
        corollary1_error: None,
        tail_sup_psi,
        corollary1_holds: None,
    };
    if let Some(id) = identification {
        let t1 = theorem1_check(&recs, &id.constants, m);
        rep.theorem1_pairs = t1.pairs;
        rep.theorem1_satisfied = t1.satisfied;
        rep.theorem1_fraction = t1.fraction;
        rep.theorem1_worst_margin = t1.worst_margin;
        rep.theorem1_pass = assumption3.then_some(t1.pass);
        match corollary1_asymptote(&id.constants, eps, dq_opt_max, &cfg.limits, m) {
            Ok(b) => {
                rep.corollary1_bound = Some(b);
                rep.corollary1_holds = assumption3.then_some(tail_sup_psi <= b);
            }
            Err(e) => rep.corollary1_error = Some(e.to_string()),
        }
    }
    rep
}
