//! Online feedback optimization of the reactive power set-point: the
//! per-sample feasible interval, the composite gradient and the triggered
//! projected-gradient update.

use serde::{Deserialize, Serialize};

use crate::af::q_min_modulation;
use crate::control::power_to_current;
use crate::dq::{instantaneous_power, DqVector};
use crate::error::{Error, Result};
use crate::params::{Limits, PlantParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OfoConfig {
    pub k_mu: f64,
    pub k_gamma: f64,
    /// OFO sampling period, s.
    pub t_s: f64,
    /// Control period, s.
    pub t_c: f64,
}

impl Default for OfoConfig {
    fn default() -> Self {
        Self { k_mu: 80.0, k_gamma: 4.0, t_s: 1e-3, t_c: 250e-6 }
    }
}

impl OfoConfig {
    /// Number of control ticks per OFO trigger, `T_s/T_c`.
    pub fn ticks_per_trigger(&self) -> Result<u64> {
        let ratio = self.t_s / self.t_c;
        let m = ratio.round();
        if !(m >= 1.0) || (ratio - m).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::InvalidConfiguration(format!(
                "ofo.t_s = {} s must be a positive integer multiple of timing.t_c = {} s",
                self.t_s, self.t_c
            )));
        }
        Ok(m as u64)
    }

    /// `C₃ = k_µ·T_s`, so that `µ = C₃‖v_g‖²`.
    pub fn c3(&self) -> f64 {
        self.k_mu * self.t_s
    }

    /// `C₄ = k_γ·T_s`, so that `γ = C₄/‖v_g‖²`.
    pub fn c4(&self) -> f64 {
        self.k_gamma * self.t_s
    }

    /// Contraction factor `ε = 1 − µ(γ + ‖v_g‖⁻²) = 1 − C₃(1 + C₄)`,
    /// independent of the grid voltage for this step-size schedule.
    pub fn epsilon(&self) -> f64 {
        1.0 - self.c3() * (1.0 + self.c4())
    }

    /// Checks `µ ∈ (0, 2‖v‖²/(1 + γ‖v‖²))`, i.e. `0 < C₃(1 + C₄) < 2`.
    pub fn validate(&self) -> Result<()> {
        self.ticks_per_trigger()?;
        if !(self.k_gamma >= 0.0) {
            return Err(Error::InvalidConfiguration(format!("ofo.k_gamma must be >= 0, got {}", self.k_gamma)));
        }
        let lhs = self.c3() * (1.0 + self.c4());
        if !(self.c3() > 0.0) || !(lhs < 2.0) {
            return Err(Error::InvalidConfiguration(format!(
                "ofo: learning rate outside the contraction range: k_mu*T_s*(1 + k_gamma*T_s) = {lhs} must lie in (0, 2) (margin {})",
                2.0 - lhs
            )));
        }
        Ok(())
    }
}

/// Learning rate and cost weight at grid voltage `v_g`:
/// `µ = k_µT_s‖v_g‖²`, `γ = k_γT_s/‖v_g‖²`.
pub fn step_size(v_g: DqVector, cfg: &OfoConfig) -> Result<(f64, f64)> {
    cfg.validate()?;
    let v2 = v_g.norm_squared();
    if !(v2 > 0.0) {
        return Err(Error::GridLost { v_norm: 0.0, floor: 0.0 });
    }
    Ok((cfg.c3() * v2, cfg.c4() / v2))
}

/// Disturbance seen by the optimizer: `d = (P*, v_g)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceSample {
    pub p_star: f64,
    pub v_g: DqVector,
}

/// Steady-state current `h(Q, d)` (no limiter).
pub fn steady_state_current(q: f64, d: &DisturbanceSample) -> Result<DqVector> {
    power_to_current(d.p_star, q, d.v_g, 0.0)
}

/// Objective `½(‖h(Q, d)‖² + γ(Q − Q_ref)²)`.
pub fn cost(q: f64, d: &DisturbanceSample, q_ref: f64, gamma: f64) -> Result<f64> {
    let i = steady_state_current(q, d)?;
    Ok(0.5 * (i.norm_squared() + gamma * (q - q_ref) * (q - q_ref)))
}

/// A closed interval of reactive power, possibly unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    pub fn clamp(&self, q: f64) -> f64 {
        q.clamp(self.lo, self.hi)
    }

    pub fn contains(&self, q: f64) -> bool {
        q >= self.lo && q <= self.hi
    }
}

/// How the admissible set was resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntervalStatus {
    /// Both constraints hold on `[lo, hi]`.
    Feasible,
    /// Both constraints are individually satisfiable but their sets do not
    /// meet; the modulation endpoint nearest the current band is used.
    Disjoint,
    /// No reactive power satisfies the modulation constraint; `Q_mm` clamped
    /// into the current band is used (degraded mode).
    ModulationInfeasible,
    /// The active power alone exceeds the current circle; the modulation
    /// point of least current is used.
    CurrentInfeasible,
}

/// The admissible reactive power `C(k)` for one disturbance sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibleInterval {
    /// Resolved admissible set; a single point unless `status` is `Feasible`.
    pub lo: f64,
    pub hi: f64,
    pub current_feasible: bool,
    pub modulation_feasible: bool,
    /// `|Q| ≤ sqrt(‖v‖²i_max² − P²)`, when non-empty.
    pub current: Option<Band>,
    /// Sub-level set of the modulation quadratic, when non-empty.
    pub modulation: Option<Band>,
    pub status: IntervalStatus,
    /// Reactive power of least modulation at this sample.
    pub q_mm: f64,
}

impl FeasibleInterval {
    pub fn contains(&self, q: f64) -> bool {
        q >= self.lo && q <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// True when both constraints can be met simultaneously.
    pub fn is_feasible(&self) -> bool {
        self.status == IntervalStatus::Feasible
    }
}

/// Current band `P*² + Q² ≤ ‖v_g‖²·i_max²`.
pub fn current_band(p_star: f64, v_g: DqVector, i_g_max: f64) -> Option<Band> {
    let a2 = v_g.norm_squared() * i_g_max * i_g_max - p_star * p_star;
    if a2 < 0.0 {
        return None;
    }
    let a = a2.sqrt();
    Some(Band { lo: -a, hi: a })
}

/// Modulation band `‖m(Q)‖ ≤ m_lim` with `m` from the steady-state identity.
///
/// The quadratic `aQ² − 2XQ + c ≤ 0` has `a = ‖Z‖²/‖v‖² ≥ 0`, `X = ω₀L_g`.
pub fn modulation_band(p_star: f64, v_g: DqVector, p: &PlantParams, v_dc_ref: f64, m_lim: f64) -> Option<Band> {
    let v2 = v_g.norm_squared();
    let a = p.impedance_norm_squared() / v2;
    let x = p.reactance();
    let m_scale2 = m_lim * m_lim * v_dc_ref * v_dc_ref;
    let c = v2 - 2.0 * p.r_g * p_star + a * p_star * p_star - m_scale2;
    if a == 0.0 {
        // no impedance: m does not depend on Q
        return (c <= 0.0).then_some(Band { lo: f64::NEG_INFINITY, hi: f64::INFINITY });
    }
    let disc = x * x - a * c;
    if disc < 0.0 {
        return None;
    }
    let s = disc.sqrt();
    let hi = (x + s) / a;
    // product of roots is c/a
    let lo = if x + s > 0.0 { c / (x + s) } else { (x - s) / a };
    Some(Band { lo, hi })
}

/// Builds `C(k)` from the current-circle and modulation constraints.
pub fn constraint_interval(
    d: &DisturbanceSample,
    lim: &Limits,
    p: &PlantParams,
    v_dc_ref: f64,
    v_floor: f64,
) -> Result<FeasibleInterval> {
    let v = d.v_g.norm();
    if !(v > v_floor) || v == 0.0 {
        return Err(Error::GridLost { v_norm: v, floor: v_floor });
    }
    // without impedance the modulation does not depend on Q
    let q_mm = if p.impedance_norm_squared() > 0.0 { q_min_modulation(d.v_g, p)? } else { 0.0 };
    let current = current_band(d.p_star, d.v_g, lim.i_g_max);
    let modulation = modulation_band(d.p_star, d.v_g, p, v_dc_ref, lim.m_lim);
    let (lo, hi, status) = match (current, modulation) {
        (Some(c), Some(m)) => {
            let lo = c.lo.max(m.lo);
            let hi = c.hi.min(m.hi);
            if lo <= hi {
                (lo, hi, IntervalStatus::Feasible)
            } else {
                let q = if m.hi < c.lo { m.hi } else { m.lo };
                (q, q, IntervalStatus::Disjoint)
            }
        }
        (Some(c), None) => {
            let q = c.clamp(q_mm);
            (q, q, IntervalStatus::ModulationInfeasible)
        }
        (None, Some(m)) => {
            let q = m.clamp(0.0);
            (q, q, IntervalStatus::CurrentInfeasible)
        }
        (None, None) => (q_mm, q_mm, IntervalStatus::ModulationInfeasible),
    };
    Ok(FeasibleInterval {
        lo,
        hi,
        current_feasible: current.is_some(),
        modulation_feasible: modulation.is_some(),
        current,
        modulation,
        status,
        q_mm,
    })
}

/// Euclidean projection onto `C(k)` with the modulation-priority fallbacks.
pub fn project(q: f64, interval: &FeasibleInterval, q_mm: f64) -> f64 {
    match (interval.current, interval.modulation) {
        (Some(c), Some(m)) => {
            let lo = c.lo.max(m.lo);
            let hi = c.hi.min(m.hi);
            if lo <= hi {
                q.clamp(lo, hi)
            } else if m.hi < c.lo {
                m.hi
            } else {
                m.lo
            }
        }
        (Some(c), None) => c.clamp(q_mm),
        (None, Some(m)) => m.clamp(0.0),
        (None, None) => q_mm,
    }
}

/// `Φ = γ(Q* − Q_ref) + Hᵀi` with `H = ∂h/∂Q = −Jv_g/‖v_g‖²`, which reduces to
/// `γ(Q* − Q_ref) + Q_meas/‖v_g‖²`.
pub fn composite_gradient(q_star: f64, i_meas: DqVector, q_ref: f64, v_g: DqVector, gamma: f64) -> Result<f64> {
    let v2 = v_g.norm_squared();
    if !(v2 > 0.0) {
        return Err(Error::GridLost { v_norm: 0.0, floor: 0.0 });
    }
    let (_, q_meas) = instantaneous_power(v_g, i_meas);
    Ok(gamma * (q_star - q_ref) + q_meas / v2)
}

/// Sensitivity `H = ∂h/∂Q = −Jv_g/‖v_g‖²`.
pub fn sensitivity(v_g: DqVector) -> DqVector {
    -crate::dq::rotate90(v_g) * (1.0 / v_g.norm_squared())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OfoState {
    pub q_star: f64,
    pub tick_count: u64,
    pub last_interval: Option<FeasibleInterval>,
    /// Whether the most recent call performed an update.
    pub triggered: bool,
}

impl OfoState {
    /// Starts at the external reference projected into the first interval.
    pub fn new(q_ref: f64, interval: &FeasibleInterval) -> Self {
        Self {
            q_star: project(q_ref, interval, interval.q_mm),
            tick_count: 0,
            last_interval: Some(*interval),
            triggered: false,
        }
    }
}

/// Everything the OFO update needs besides its state.
#[derive(Debug, Clone, Copy)]
pub struct OfoContext<'a> {
    pub limits: &'a Limits,
    pub plant: &'a PlantParams,
    pub v_dc_ref: f64,
    pub v_floor: f64,
    pub cfg: &'a OfoConfig,
}

/// One control tick of the triggered projected-gradient update.
pub fn ofo_step(
    st: &OfoState,
    d: &DisturbanceSample,
    i_meas: DqVector,
    q_ref: f64,
    ctx: &OfoContext<'_>,
) -> Result<OfoState> {
    let m = ctx.cfg.ticks_per_trigger()?;
    let mut next = *st;
    next.tick_count = st.tick_count + 1;
    next.triggered = st.tick_count.is_multiple_of(m);
    if !next.triggered {
        return Ok(next);
    }
    let (mu, gamma) = step_size(d.v_g, ctx.cfg)?;
    let phi = composite_gradient(st.q_star, i_meas, q_ref, d.v_g, gamma)?;
    let interval = constraint_interval(d, ctx.limits, ctx.plant, ctx.v_dc_ref, ctx.v_floor)?;
    next.q_star = project(st.q_star - mu * phi, &interval, interval.q_mm);
    next.last_interval = Some(interval);
    Ok(next)
}
