//! Independent optimizers for the reactive power problem and the empirical
//! checks of the contraction inequality and its asymptotic bound.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ofo::{cost, DisturbanceSample, FeasibleInterval};
use crate::params::Limits;

/// Quantities recorded at one OFO trigger instant `k = l·m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    /// Control tick index.
    pub k: u64,
    /// `|Q*(k) − Q̄*(k)|`.
    pub psi: f64,
    pub epsilon: f64,
    /// `Q̄*(k) − Q̄*(k + m)`.
    pub delta_qopt: f64,
    /// Inner-loop residual `‖i_g − i_g*‖` one control tick before the measurement.
    pub inner_residual: f64,
    /// `‖v_g(k)‖`.
    pub v_norm: f64,
}

/// Exponential-stability constants of the inner loop and the step-size scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InnerLoopConstants {
    pub c1: f64,
    /// Decay exponent per control tick.
    pub c2: f64,
    /// `µ = C₃‖v_g‖²`.
    pub c3: f64,
}

impl InnerLoopConstants {
    /// Checks `C₁ > 0`, `C₂ > 0` and `C₃ ∈ (0, 2/(1 + γv²_max))` with
    /// `γv²_max = C₄·v²_max/‖v‖²`, evaluated at the lowest grid voltage
    /// `v_min` of the run.
    pub fn validate(&self, c4: f64, v_max: f64, v_min: f64) -> Result<()> {
        if !(self.c1 > 0.0) || !(self.c2 > 0.0) {
            return Err(Error::InvalidArgument(format!("C1 = {}, C2 = {} must be > 0", self.c1, self.c2)));
        }
        let upper = 2.0 / (1.0 + c4 * v_max * v_max / (v_min * v_min));
        if !(self.c3 > 0.0 && self.c3 < upper) {
            return Err(Error::InvalidConfiguration(format!("C3 = {} outside (0, {upper})", self.c3)));
        }
        Ok(())
    }
}

/// Result of fitting `log e(k) ≈ a − C₂k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InnerLoopFit {
    /// Smallest `C₁` with `e(k) ≤ C₁e(0)e^{−C₂k}` for every fitted sample.
    pub c1: f64,
    /// `exp(a)/e(0)` of the least-squares line.
    pub c1_fit: f64,
    pub c2: f64,
    /// Root-mean-square residual of the log-linear fit.
    pub residual: f64,
    pub samples: usize,
}

impl InnerLoopFit {
    pub fn with_step_scale(&self, c3: f64) -> InnerLoopConstants {
        InnerLoopConstants { c1: self.c1, c2: self.c2, c3 }
    }
}

const MIN_FIT_SAMPLES: usize = 20;

/// Least-squares fit of the log of an inner-loop step response.
///
/// `C₂` is minus the slope. The line's own constant `exp(intercept)/e(0)` is
/// an average, not a bound, so `C₁` is raised to the envelope of the samples.
/// Samples below `1e-12·e(0)` are treated as numerical floor and ignored.
pub fn estimate_inner_loop_constants(step_response: &[f64]) -> Result<InnerLoopFit> {
    let e0 = step_response.first().copied().unwrap_or(0.0);
    if !(e0 > 0.0) {
        return Err(Error::InvalidArgument("step response must start above zero".into()));
    }
    let floor = 1e-12 * e0;
    let pts: Vec<(f64, f64)> = step_response
        .iter()
        .enumerate()
        .take_while(|(_, &e)| e > floor && e.is_finite())
        .map(|(k, &e)| (k as f64, e.ln()))
        .collect();
    if pts.len() < MIN_FIT_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_FIT_SAMPLES} samples above the numerical floor, got {}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx = pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    let sxy = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    if !(slope < 0.0) {
        return Err(Error::AssumptionViolated(format!(
            "inner loop is not exponentially stable at this operating point (fitted decay {slope} per tick)"
        )));
    }
    let residual = (pts.iter().map(|p| (p.1 - (intercept + slope * p.0)).powi(2)).sum::<f64>() / n).sqrt();
    let c1_fit = intercept.exp() / e0;
    let envelope = pts.iter().map(|p| (p.1 + slope * -p.0).exp() / e0).fold(c1_fit, f64::max);
    Ok(InnerLoopFit { c1: envelope, c1_fit, c2: -slope, residual, samples: pts.len() })
}

fn require_feasible(interval: &FeasibleInterval) -> Result<()> {
    if !interval.is_feasible() || !(interval.lo <= interval.hi) {
        return Err(Error::Infeasible(format!("admissible set is empty ({:?})", interval.status)));
    }
    Ok(())
}

/// Closed-form minimizer: the unconstrained vertex
/// `Q_u = γQ_ref/(γ + ‖v_g‖⁻²)` clamped into the admissible interval.
pub fn optimal_q_analytic(d: &DisturbanceSample, q_ref: f64, gamma: f64, interval: &FeasibleInterval) -> Result<f64> {
    require_feasible(interval)?;
    let inv_v2 = 1.0 / d.v_g.norm_squared();
    let q_u = gamma * q_ref / (gamma + inv_v2);
    Ok(q_u.clamp(interval.lo, interval.hi))
}

/// Grid search of the exact cost followed by a golden-section refinement
/// around the best grid point.
pub fn optimal_q_bruteforce(
    d: &DisturbanceSample,
    q_ref: f64,
    gamma: f64,
    interval: &FeasibleInterval,
    n_grid: usize,
) -> Result<f64> {
    require_feasible(interval)?;
    if n_grid < 3 {
        return Err(Error::InvalidArgument(format!("n_grid must be >= 3, got {n_grid}")));
    }
    let (lo, hi) = (interval.lo, interval.hi);
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::InvalidArgument("brute-force search needs a bounded interval".into()));
    }
    if hi == lo {
        return Ok(lo);
    }
    let f = |q: f64| cost(q, d, q_ref, gamma);
    let step = (hi - lo) / (n_grid - 1) as f64;
    let mut best = (0usize, f64::INFINITY);
    for k in 0..n_grid {
        let c = f(lo + step * k as f64)?;
        if c < best.1 {
            best = (k, c);
        }
    }
    let k = best.0;
    let mut a = lo + step * k.saturating_sub(1) as f64;
    let mut b = (lo + step * (k + 1) as f64).min(hi);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    for _ in 0..200 {
        if (b - a) <= 1e-13 * (hi - lo).max(1.0) {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2)?;
        }
    }
    let mid = 0.5 * (a + b);
    // the endpoints themselves may be optimal
    let mut cands = [(mid, f(mid)?), (lo, f(lo)?), (hi, f(hi)?)];
    cands.sort_by(|x, y| x.1.total_cmp(&y.1));
    Ok(cands[0].0)
}

/// `ψ = |Q* − Q̄*|`.
pub fn psi_metric(q_star: f64, q_opt: f64) -> f64 {
    (q_star - q_opt).abs()
}

/// One evaluated instance of the recursive bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub k: u64,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`; negative means violated.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Report {
    pub pairs: usize,
    pub satisfied: usize,
    pub fraction: f64,
    pub worst_margin: f64,
    pub pass: bool,
    pub checks: Vec<InequalityCheck>,
}

/// Absolute slack allowed when comparing the two sides, vars.
pub const THEOREM1_SLACK: f64 = 1e-9;

/// Evaluates `ψ((l+1)m) ≤ ε ψ(lm) + |ΔQ̄*(lm)| + C₁C₃‖v_g‖‖i_g − i_g*‖e^{−C₂}`
/// for each consecutive pair of trigger records.
pub fn theorem1_check(records: &[ConvergenceRecord], consts: &InnerLoopConstants, m: u64) -> Theorem1Report {
    let mut checks = Vec::with_capacity(records.len().saturating_sub(1));
    for w in records.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        debug_assert_eq!(b.k - a.k, m);
        let t2 = consts.c1 * consts.c3 * a.v_norm * a.inner_residual * (-consts.c2).exp();
        let rhs = a.epsilon.abs() * a.psi + a.delta_qopt.abs() + t2;
        checks.push(InequalityCheck { k: a.k, lhs: b.psi, rhs, margin: rhs - b.psi });
    }
    let satisfied = checks.iter().filter(|c| c.margin >= -THEOREM1_SLACK).count();
    let worst_margin = checks.iter().map(|c| c.margin).fold(f64::INFINITY, f64::min);
    let pairs = checks.len();
    Theorem1Report {
        pairs,
        satisfied,
        fraction: if pairs == 0 { 1.0 } else { satisfied as f64 / pairs as f64 },
        worst_margin,
        pass: satisfied == pairs,
        checks,
    }
}

/// Asymptotic bound on `ψ(lm)`:
/// `(|ΔQ̄*_max| + 2C₁C₃α_qP_max e^{−C₂}/(1 − C₁e^{−C₂m}))/(1 − ε_max)`.
pub fn corollary1_asymptote(
    consts: &InnerLoopConstants,
    eps_max: f64,
    dq_max: f64,
    lim: &Limits,
    m: u64,
) -> Result<f64> {
    if !(eps_max.abs() < 1.0) {
        return Err(Error::NoContraction { eps_max });
    }
    let sep = consts.c1 * (-consts.c2 * m as f64).exp();
    if !(sep < 1.0) {
        return Err(Error::InsufficientTimescaleSeparation { value: sep });
    }
    let transient = 2.0 * consts.c1 * consts.c3 * lim.alpha_q * lim.p_g_max * (-consts.c2).exp() / (1.0 - sep);
    Ok((dq_max.abs() + transient) / (1.0 - eps_max.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dq::DqVector;
    use crate::ofo::{Band, IntervalStatus};

    fn interval(lo: f64, hi: f64) -> FeasibleInterval {
        FeasibleInterval {
            lo,
            hi,
            current_feasible: true,
            modulation_feasible: true,
            current: Some(Band { lo, hi }),
            modulation: None,
            status: IntervalStatus::Feasible,
            q_mm: 0.0,
        }
    }

    #[test]
    fn analytic_limits() {
        let d = DisturbanceSample { p_star: 1e5, v_g: DqVector::new(100.0, 0.0) };
        let i = interval(-1e9, 1e9);
        let q = optimal_q_analytic(&d, 500.0, 1e6, &i).unwrap();
        assert!((q - 500.0).abs() < 1e-6);
        assert_eq!(optimal_q_analytic(&d, 500.0, 0.0, &i).unwrap(), 0.0);
        assert_eq!(optimal_q_analytic(&d, 500.0, 0.0, &interval(10.0, 20.0)).unwrap(), 10.0);
        let empty = FeasibleInterval { status: IntervalStatus::Disjoint, ..i };
        assert!(matches!(optimal_q_analytic(&d, 0.0, 0.0, &empty), Err(Error::Infeasible(_))));
        assert!(optimal_q_bruteforce(&d, 0.0, 0.0, &empty, 10).is_err());
    }

    #[test]
    fn bruteforce_near_flat() {
        let d = DisturbanceSample { p_star: 0.0, v_g: DqVector::new(1e6, 0.0) };
        let q = optimal_q_bruteforce(&d, 0.0, 0.0, &interval(-1.0, 1.0), 101).unwrap();
        assert!(q.abs() <= 2.0 / 100.0);
    }

    #[test]
    fn bruteforce_vertex_inside_and_outside() {
        let d = DisturbanceSample { p_star: 0.2, v_g: DqVector::new(0.6, 0.8) };
        let gamma = 1.5;
        let q_ref = 0.5;
        let vertex = gamma * q_ref / (gamma + 1.0 / d.v_g.norm_squared());
        let q = optimal_q_bruteforce(&d, q_ref, gamma, &interval(-1.0, 1.0), 101).unwrap();
        assert!((q - vertex).abs() < 1e-6, "{q} vs {vertex}");
        let q = optimal_q_bruteforce(&d, q_ref, gamma, &interval(vertex + 0.1, vertex + 0.5), 11).unwrap();
        assert_eq!(q, vertex + 0.1);
    }

    #[test]
    fn psi_examples() {
        assert_eq!(psi_metric(3.0, 3.0), 0.0);
        assert_eq!(psi_metric(3.0, 1.0), 2.0);
        assert_eq!(psi_metric(-1.5, 7.25), psi_metric(7.25, -1.5));
    }

    #[test]
    fn fit_exact_exponential() {
        let resp: Vec<f64> = (0..60).map(|k| 5.0 * 0.8f64.powi(k)).collect();
        let fit = estimate_inner_loop_constants(&resp).unwrap();
        assert!((fit.c1 * (-fit.c2).exp() - 0.8).abs() < 1e-10);
        assert!((fit.c1 - 5.0 / resp[0]).abs() < 1e-10);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn fit_envelope_bounds_every_sample() {
        let resp = [
            1.0, 0.27, 0.03, 0.13, 0.16, 0.15, 0.13, 0.11, 0.1, 0.08, 0.07, 0.055, 0.045, 0.037, 0.031, 0.025, 0.021,
            0.017, 0.014, 0.011, 0.009, 0.007,
        ];
        let fit = estimate_inner_loop_constants(&resp).unwrap();
        assert!(fit.c1_fit < fit.c1);
        for (k, e) in resp.iter().enumerate() {
            assert!(*e <= fit.c1 * resp[0] * (-fit.c2 * k as f64).exp() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn fit_rejects_flat_and_short() {
        assert!(matches!(estimate_inner_loop_constants(&[1.0; 50]), Err(Error::AssumptionViolated(_))));
        assert!(estimate_inner_loop_constants(&[1.0, 0.5, 0.25]).is_err());
        assert!(estimate_inner_loop_constants(&[]).is_err());
    }

    #[test]
    fn stationary_records_pass() {
        let consts = InnerLoopConstants { c1: 1.0, c2: 0.3, c3: 0.08 };
        let recs: Vec<ConvergenceRecord> = (0..10)
            .map(|l| ConvergenceRecord {
                k: 4 * l,
                psi: 0.0,
                epsilon: 0.92,
                delta_qopt: 0.0,
                inner_residual: 0.0,
                v_norm: 3150.0,
            })
            .collect();
        let rep = theorem1_check(&recs, &consts, 4);
        assert!(rep.pass && rep.pairs == 9 && rep.fraction == 1.0);
    }

    #[test]
    fn violation_detected() {
        let consts = InnerLoopConstants { c1: 1.0, c2: 0.3, c3: 0.08 };
        let mk = |k, psi| ConvergenceRecord { k, psi, epsilon: 0.5, delta_qopt: 0.0, inner_residual: 0.0, v_norm: 1.0 };
        let rep = theorem1_check(&[mk(0, 1.0), mk(4, 0.6)], &consts, 4);
        assert!(!rep.pass);
        assert!((rep.worst_margin - -0.1).abs() < 1e-12);
    }

    #[test]
    fn corollary_examples() {
        let lim = Limits::default();
        let zero = InnerLoopConstants { c1: 0.0, c2: 1.0, c3: 0.08 };
        assert_eq!(corollary1_asymptote(&zero, 0.9, 0.0, &lim, 4).unwrap(), 0.0);
        assert!((corollary1_asymptote(&zero, 0.5, 10.0, &lim, 4).unwrap() - 20.0).abs() < 1e-12);
        assert!(matches!(corollary1_asymptote(&zero, 1.0, 0.0, &lim, 4), Err(Error::NoContraction { .. })));
        let slow = InnerLoopConstants { c1: 2.0, c2: 0.01, c3: 0.08 };
        assert!(matches!(
            corollary1_asymptote(&slow, 0.9, 0.0, &lim, 4),
            Err(Error::InsufficientTimescaleSeparation { .. })
        ));
    }
}
