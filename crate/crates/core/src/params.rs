//! Physical parameters, operating limits and the per-unit reference design
//! used for defaults.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::dq::DqVector;
use crate::error::{Error, Result};

/// Constants of the shaft, DC link and grid filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantParams {
    /// Shaft inertia, kg·m².
    pub inertia: f64,
    /// Viscous damping, N·m·s/rad.
    pub damping: f64,
    /// DC-link capacitance, F.
    pub c_dc: f64,
    /// DC-link parallel conductance, S.
    pub g_dc: f64,
    /// Grid filter inductance, H.
    pub l_g: f64,
    /// Grid filter resistance, Ω.
    pub r_g: f64,
    /// Grid electrical frequency, rad/s.
    pub omega0: f64,
}

impl PlantParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("inertia", self.inertia),
            ("c_dc", self.c_dc),
            ("l_g", self.l_g),
            ("r_g", self.r_g),
            ("omega0", self.omega0),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfiguration(format!("plant.{name} must be > 0, got {v}")));
            }
        }
        for (name, v) in [("damping", self.damping), ("g_dc", self.g_dc)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfiguration(format!("plant.{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Filter reactance `ω₀·L_g`.
    pub fn reactance(&self) -> f64 {
        self.omega0 * self.l_g
    }

    /// `‖Z_g‖² = R_g² + (ω₀L_g)²`; both singular values of `Z_g` are equal.
    pub fn impedance_norm_squared(&self) -> f64 {
        self.r_g * self.r_g + self.reactance() * self.reactance()
    }

    /// `Z_g x = R_g x + ω₀L_g J x`.
    pub fn apply_impedance(&self, x: DqVector) -> DqVector {
        DqVector::new(self.r_g * x.d - self.reactance() * x.q, self.r_g * x.q + self.reactance() * x.d)
    }

    /// Forward-Euler stability of the filter current: `dt·(R_g/L_g + ω₀) < 2`.
    pub fn check_euler_stability(&self, dt: f64) -> Result<()> {
        let rate = dt * (self.r_g / self.l_g + self.omega0);
        if rate < 2.0 {
            Ok(())
        } else {
            Err(Error::InvalidConfiguration(format!(
                "timing.dt_plant = {dt} s makes dt*(R_g/L_g + omega0) = {rate} >= 2 (forward Euler unstable)"
            )))
        }
    }
}

impl Default for PlantParams {
    fn default() -> Self {
        ReferenceDesign::default().plant_params()
    }
}

/// Operating limits of the drive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Limits {
    pub tau_max: f64,
    pub w_max: f64,
    pub p_g_max: f64,
    pub q_g_max: f64,
    pub i_g_max: f64,
    /// Applied modulation amplitude limit (dq magnitude).
    pub m_lim: f64,
    pub alpha_q: f64,
    pub alpha_v: f64,
    pub v_g_nom: f64,
}

impl Limits {
    /// Derives the power and current limits from the torque/speed rating and
    /// the de-rating factor.
    pub fn from_ratings(tau_max: f64, w_max: f64, alpha_q: f64, alpha_v: f64, v_g_nom: f64, m_lim: f64) -> Self {
        let p_g_max = tau_max * w_max;
        let q_g_max = p_g_max * (alpha_q * alpha_q - 1.0).max(0.0).sqrt();
        Self {
            tau_max,
            w_max,
            p_g_max,
            q_g_max,
            i_g_max: alpha_q * p_g_max / v_g_nom,
            m_lim,
            alpha_q,
            alpha_v,
            v_g_nom,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |k: &str, msg: String| Err(Error::InvalidConfiguration(format!("limits.{k}: {msg}")));
        for (k, v) in
            [("tau_max", self.tau_max), ("w_max", self.w_max), ("v_g_nom", self.v_g_nom), ("alpha_v", self.alpha_v)]
        {
            if !(v > 0.0 && v.is_finite()) {
                return bad(k, format!("must be > 0, got {v}"));
            }
        }
        if !(self.alpha_q >= 1.0) {
            return bad("alpha_q", format!("must be >= 1, got {}", self.alpha_q));
        }
        if !(self.m_lim > 0.0 && self.m_lim <= FRAC_1_SQRT_2 + 1e-12) {
            return bad("m_lim", format!("must lie in (0, 1/sqrt(2)], got {}", self.m_lim));
        }
        let rel = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0);
        if !rel(self.p_g_max, self.tau_max * self.w_max) {
            return bad("p_g_max", format!("must equal tau_max*w_max = {}", self.tau_max * self.w_max));
        }
        let s = self.p_g_max.hypot(self.q_g_max);
        if !rel(self.alpha_q * self.p_g_max, s) {
            return bad("q_g_max", format!("alpha_q*P_g_max must equal sqrt(P_g_max^2 + Q_g_max^2) = {s}"));
        }
        if !rel(self.i_g_max, self.alpha_q * self.p_g_max / self.v_g_nom) {
            return bad(
                "i_g_max",
                format!("must equal alpha_q*P_g_max/v_g_nom = {}", self.alpha_q * self.p_g_max / self.v_g_nom),
            );
        }
        Ok(())
    }

    pub fn v_g_max(&self) -> f64 {
        self.alpha_v * self.v_g_nom
    }
}

impl Default for Limits {
    fn default() -> Self {
        ReferenceDesign::default().limits()
    }
}

/// Ratings and per-unit values of the reference medium-voltage drive from
/// which the default [`PlantParams`] and [`Limits`] are computed.
///
/// Bases: `S_b` (VA), `V_b = v_g_nom` (dq magnitude), `I_b = S_b/V_b`,
/// `Z_b = V_b/I_b`; DC bases `V_dc,b = v_dc_ref`, `G_dc,b = S_b/V_dc,b²`;
/// mechanical bases `ω_b = w_rated`, `T_b = P_mech/ω_b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReferenceDesign {
    pub s_base: f64,
    pub v_g_nom: f64,
    pub v_dc_ref: f64,
    pub f_grid: f64,
    pub x_g_pu: f64,
    pub r_g_pu: f64,
    /// Stored DC energy over `S_b`, seconds.
    pub h_dc: f64,
    pub g_dc_pu: f64,
    pub p_mech: f64,
    pub w_rated: f64,
    /// Mechanical starting time `M·ω_b/T_b`, seconds.
    pub t_mech: f64,
    pub damping_pu: f64,
    pub tau_max: f64,
    pub w_max: f64,
    pub alpha_q: f64,
    pub alpha_v: f64,
    pub m_lim: f64,
}

impl Default for ReferenceDesign {
    fn default() -> Self {
        Self {
            s_base: 7.0e6,
            v_g_nom: 3150.0,
            v_dc_ref: 5000.0,
            f_grid: 50.0,
            x_g_pu: 0.16,
            r_g_pu: 0.005,
            h_dc: 0.0125,
            g_dc_pu: 0.001,
            p_mech: 6.0e6,
            w_rated: 125.66,
            t_mech: 1.0,
            damping_pu: 0.005,
            tau_max: 46691.0,
            w_max: 125.66,
            alpha_q: 1.2,
            alpha_v: 1.1,
            m_lim: 0.93 * FRAC_1_SQRT_2,
        }
    }
}

impl ReferenceDesign {
    pub fn z_base(&self) -> f64 {
        self.v_g_nom * self.v_g_nom / self.s_base
    }

    pub fn omega0(&self) -> f64 {
        2.0 * PI * self.f_grid
    }

    pub fn plant_params(&self) -> PlantParams {
        let omega0 = self.omega0();
        let z_b = self.z_base();
        let t_b = self.p_mech / self.w_rated;
        PlantParams {
            inertia: self.t_mech * t_b / self.w_rated,
            damping: self.damping_pu * t_b / self.w_rated,
            c_dc: 2.0 * self.h_dc * self.s_base / (self.v_dc_ref * self.v_dc_ref),
            g_dc: self.g_dc_pu * self.s_base / (self.v_dc_ref * self.v_dc_ref),
            l_g: self.x_g_pu * z_b / omega0,
            r_g: self.r_g_pu * z_b,
            omega0,
        }
    }

    pub fn limits(&self) -> Limits {
        Limits::from_ratings(self.tau_max, self.w_max, self.alpha_q, self.alpha_v, self.v_g_nom, self.m_lim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        PlantParams::default().validate().unwrap();
        Limits::default().validate().unwrap();
        PlantParams::default().check_euler_stability(25e-6).unwrap();
    }

    #[test]
    fn per_unit_conversions() {
        let d = ReferenceDesign::default();
        let p = d.plant_params();
        assert!((p.reactance() / d.z_base() - d.x_g_pu).abs() < 1e-12);
        assert!((p.r_g / d.z_base() - d.r_g_pu).abs() < 1e-12);
        // stored energy at the reference voltage over S_b
        assert!((0.5 * p.c_dc * d.v_dc_ref * d.v_dc_ref / d.s_base - d.h_dc).abs() < 1e-12);
        // steady loss at the reference voltage
        assert!((p.g_dc * d.v_dc_ref * d.v_dc_ref / d.s_base - d.g_dc_pu).abs() < 1e-12);
        let t_b = d.p_mech / d.w_rated;
        assert!((p.inertia * d.w_rated / t_b - d.t_mech).abs() < 1e-12);
    }

    #[test]
    fn limits_relations() {
        let l = Limits::default();
        assert!((l.p_g_max - l.tau_max * l.w_max).abs() < 1e-6);
        assert!((l.alpha_q * l.p_g_max - l.p_g_max.hypot(l.q_g_max)).abs() < 1e-3);
        assert!((l.i_g_max - l.alpha_q * l.p_g_max / l.v_g_nom).abs() < 1e-9);
        assert!((l.m_lim - 0.93 / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_values() {
        let p = PlantParams { l_g: 0.0, ..PlantParams::default() };
        assert!(p.validate().is_err());
        let l = Limits { m_lim: 0.8, ..Limits::default() };
        assert!(l.validate().is_err());
        let mut l = Limits::default();
        l.i_g_max *= 2.0;
        assert!(l.validate().is_err());
    }

    #[test]
    fn impedance_matches_matrix() {
        let p = PlantParams::default();
        let x = DqVector::new(1.3, -0.4);
        let z = p.apply_impedance(x);
        let xr = p.reactance();
        assert!((z.d - (p.r_g * 1.3 - xr * -0.4)).abs() < 1e-15);
        assert!((z.q - (xr * 1.3 + p.r_g * -0.4)).abs() < 1e-15);
        assert!((z.norm_squared() - p.impedance_norm_squared() * x.norm_squared()).abs() < 1e-12);
    }
}
