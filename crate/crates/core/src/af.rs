//! Activation-function outer loop: a first-order lag on the external reactive
//! power reference, deflected by hinge activations of the current and
//! modulation limits.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::dq::DqVector;
use crate::error::{Error, Result};
use crate::params::PlantParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AfConfig {
    /// Tracking bandwidth of the reference lag, rad/s.
    pub omega_q: f64,
    /// Gain on the current activation, 1/(A·s).
    pub kappa1: f64,
    /// Gain on the modulation activation, 1/s.
    pub kappa2: f64,
    /// Current activation threshold, A. `None` means the configured current limit.
    pub thr1: Option<f64>,
    /// Modulation activation threshold on the raw command.
    pub thr2: f64,
    /// Steepness of the softplus hinge; `0` selects the hard hinge.
    pub sharpness: f64,
}

impl Default for AfConfig {
    fn default() -> Self {
        Self {
            omega_q: 2.0 * PI * 5.0,
            kappa1: 0.1,
            kappa2: 250.0,
            thr1: None,
            thr2: 0.97 * FRAC_1_SQRT_2,
            sharpness: 0.0,
        }
    }
}

/// Non-fatal findings of [`AfConfig::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum AfWarning {
    /// `kappa1` is not much smaller than `kappa2`; the modulation limit should
    /// take priority over the current limit.
    WeakModulationPriority { kappa1: f64, kappa2: f64 },
}

impl AfConfig {
    /// Checks the invariants and the Euler contraction condition
    /// `dt·(ω_q + κ₁Γ₁ + κ₂Γ₂) < 2` at the worst-case activations.
    pub fn validate(&self, dt: f64, gamma1_max: f64, gamma2_max: f64) -> Result<Vec<AfWarning>> {
        if !(self.omega_q > 0.0) {
            return Err(Error::InvalidConfiguration(format!("af.omega_q must be > 0, got {}", self.omega_q)));
        }
        if !(self.kappa1 >= 0.0) || !(self.kappa2 >= 0.0) {
            return Err(Error::InvalidConfiguration("af.kappa1 and af.kappa2 must be >= 0".into()));
        }
        if let Some(t) = self.thr1 {
            if !(t >= 0.0) {
                return Err(Error::InvalidConfiguration(format!("af.thr1 must be >= 0, got {t}")));
            }
        }
        if !(self.thr2 >= 0.0) || !(self.sharpness >= 0.0) {
            return Err(Error::InvalidConfiguration("af.thr2 and af.sharpness must be >= 0".into()));
        }
        let rate = dt * (self.omega_q + self.kappa1 * gamma1_max + self.kappa2 * gamma2_max);
        if rate >= 2.0 {
            return Err(Error::InvalidConfiguration(format!(
                "af: dt*(omega_q + kappa1*G1 + kappa2*G2) = {rate} >= 2 at worst-case activations"
            )));
        }
        let mut warnings = Vec::new();
        if self.kappa1 * 100.0 > self.kappa2 {
            warnings.push(AfWarning::WeakModulationPriority { kappa1: self.kappa1, kappa2: self.kappa2 });
        }
        Ok(warnings)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AfState {
    pub q_star: f64,
}

fn hinge(x: f64, thr: f64, sharpness: f64) -> f64 {
    if sharpness <= 0.0 || thr <= 0.0 {
        return (x - thr).max(0.0);
    }
    let beta = sharpness / thr;
    let z = beta * (x - thr);
    // numerically stable softplus
    (z.max(0.0) + (-z.abs()).exp().ln_1p()) / beta
}

/// Current activation on the unlimited reference magnitude.
pub fn gamma1(i_star_norm: f64, thr1: f64, sharpness: f64) -> f64 {
    hinge(i_star_norm, thr1, sharpness)
}

/// Modulation activation on the raw (pre-limiter) command magnitude.
pub fn gamma2(m_raw_norm: f64, thr2: f64, sharpness: f64) -> f64 {
    hinge(m_raw_norm, thr2, sharpness)
}

/// Reactive power minimizing the steady-state modulation amplitude,
/// `ω₀L_g·‖v_g‖²/‖Z_g‖²`.
pub fn q_min_modulation(v_g: DqVector, p: &PlantParams) -> Result<f64> {
    let z2 = p.impedance_norm_squared();
    if !(z2 > 0.0) {
        return Err(Error::InvalidArgument("filter impedance is zero".into()));
    }
    let v2 = v_g.norm_squared();
    if !(v2 > 0.0) {
        return Err(Error::GridLost { v_norm: 0.0, floor: 0.0 });
    }
    Ok(p.reactance() * v2 / z2)
}

/// Activation values fed to one controller update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AfInputs {
    pub q_ref: f64,
    pub i_star_norm: f64,
    pub m_raw_norm: f64,
    pub q_mm: f64,
}

/// Forward-Euler update
/// `Q' = Q + dt·[−ω_q(Q − Q_ref) − κ₁Γ₁Q − κ₂Γ₂(Q − Q_mm)]`.
pub fn af_step(st: AfState, inp: &AfInputs, dt: f64, cfg: &AfConfig, i_g_max: f64) -> AfState {
    let thr1 = cfg.thr1.unwrap_or(i_g_max);
    let g1 = gamma1(inp.i_star_norm, thr1, cfg.sharpness);
    let g2 = gamma2(inp.m_raw_norm, cfg.thr2, cfg.sharpness);
    let q = st.q_star;
    let dq = -cfg.omega_q * (q - inp.q_ref) - cfg.kappa1 * g1 * q - cfg.kappa2 * g2 * (q - inp.q_mm);
    AfState { q_star: q + dt * dq }
}
