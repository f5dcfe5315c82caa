//! Average-switch model of the back-to-back drive: rigid shaft, DC link and
//! grid filter, integrated with fixed-step forward Euler.

use serde::{Deserialize, Serialize};

use crate::dq::DqVector;
use crate::error::{Error, Result};
use crate::params::PlantParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantState {
    /// Shaft speed, rad/s.
    pub w: f64,
    /// DC-link voltage, V.
    pub v_dc: f64,
    /// Grid current towards the converter, A.
    pub i_g: DqVector,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantInputs {
    /// Air-gap torque, tracked perfectly by the motor-side converter.
    pub tau_m: f64,
    /// Grid-side modulation vector.
    pub m_g: DqVector,
    /// Load torque.
    pub tau_l: f64,
    /// Grid voltage.
    pub v_g: DqVector,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantDerivatives {
    pub dw: f64,
    pub dv_dc: f64,
    pub di_g: DqVector,
}

pub fn plant_derivatives(s: &PlantState, u: &PlantInputs, p: &PlantParams) -> Result<PlantDerivatives> {
    if !(s.v_dc > 0.0) {
        return Err(Error::Singularity { v_dc: s.v_dc });
    }
    let dw = (-p.damping * s.w + u.tau_m - u.tau_l) / p.inertia;
    let dv_dc = (-p.g_dc * s.v_dc - s.w / s.v_dc * u.tau_m + u.m_g.dot(s.i_g)) / p.c_dc;
    let di_g = (-p.apply_impedance(s.i_g) + u.v_g - u.m_g * s.v_dc) * (1.0 / p.l_g);
    Ok(PlantDerivatives { dw, dv_dc, di_g })
}

/// One forward-Euler step of length `dt`.
///
/// `step` is the index of this plant step; it is reported if the DC-link
/// voltage leaves the positive half-line.
pub fn plant_step(s: &PlantState, u: &PlantInputs, p: &PlantParams, dt: f64, step: u64) -> Result<PlantState> {
    let d = plant_derivatives(s, u, p)?;
    let next = PlantState { w: s.w + dt * d.dw, v_dc: s.v_dc + dt * d.dv_dc, i_g: s.i_g + d.di_g * dt };
    if !(next.v_dc > 0.0) || !next.w.is_finite() || !next.i_g.is_finite() {
        return Err(Error::SimulationDiverged { step, v_dc: next.v_dc });
    }
    Ok(next)
}

/// Active power drawn from the grid at steady state for the given set-points:
/// `D·w² + G_dc·v_dc² + w·τ_l`.
pub fn steady_state_active_power(w_ref: f64, v_dc_ref: f64, tau_l: f64, p: &PlantParams) -> f64 {
    p.damping * w_ref * w_ref + p.g_dc * v_dc_ref * v_dc_ref + w_ref * tau_l
}

/// Energy stored in shaft, DC link and filter inductance.
pub fn stored_energy(s: &PlantState, p: &PlantParams) -> f64 {
    0.5 * p.inertia * s.w * s.w + 0.5 * p.c_dc * s.v_dc * s.v_dc + 0.5 * p.l_g * s.i_g.norm_squared()
}
