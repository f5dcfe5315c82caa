//! Cascaded anti-windup PI control: speed loop, DC-link loop, circular
//! current-reference limiter and dq current loop.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::dq::{rotate90, sat_circular, DqVector};
use crate::error::{Error, Result};
use crate::params::{Limits, PlantParams};

/// PI gains obtained from a bandwidth/damping specification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopGains {
    pub kp: f64,
    pub ki: f64,
    pub omega_bw: f64,
    pub zeta: f64,
}

/// `Kp = 2ζωX`, `Ki = ω²X` for the loop's plant constant `X`
/// (inertia, DC capacitance or filter inductance).
pub fn gains_from_bandwidth(omega_bw: f64, zeta: f64, plant_const: f64) -> Result<LoopGains> {
    for (name, v) in [("omega_bw", omega_bw), ("zeta", zeta), ("plant_const", plant_const)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidArgument(format!("{name} must be > 0, got {v}")));
        }
    }
    Ok(LoopGains { kp: 2.0 * zeta * omega_bw * plant_const, ki: omega_bw * omega_bw * plant_const, omega_bw, zeta })
}

/// Scalar PI with output clamp and conditional integration.
///
/// The integrator is held when the clamped output is saturated and the
/// current error would push it further into saturation.
#[allow(clippy::too_many_arguments)]
fn conditional_pi(error: f64, x: f64, dt: f64, kp: f64, ki: f64, scale: f64, ff: f64, limit: f64) -> (f64, f64) {
    let x_next = x + dt * error;
    let raw = (-kp * error - ki * x_next) * scale + ff;
    if raw.abs() <= limit {
        return (raw, x_next);
    }
    // integrating `error` moves the output by -ki*scale*dt*error
    let pushes_out = (-error * ki * scale).signum() == raw.signum() && error != 0.0;
    if pushes_out {
        let held = (-kp * error - ki * x) * scale + ff;
        (held.clamp(-limit, limit), x)
    } else {
        (raw.clamp(-limit, limit), x_next)
    }
}

/// Speed loop. Returns `(tau_m, x_m')`.
pub fn speed_pi_step(w: f64, w_ref: f64, x_m: f64, dt: f64, g: &LoopGains, tau_max: f64) -> (f64, f64) {
    conditional_pi(w - w_ref, x_m, dt, g.kp, g.ki, 1.0, 0.0, tau_max)
}

/// DC-link loop with motor power feed-forward `tau_m·w_ref`. Returns `(P_g*, x_dc')`.
#[allow(clippy::too_many_arguments)]
pub fn dc_pi_step(
    v_dc: f64,
    v_dc_ref: f64,
    x_dc: f64,
    tau_m: f64,
    w_ref: f64,
    dt: f64,
    g: &LoopGains,
    p_g_max: f64,
) -> (f64, f64) {
    conditional_pi(v_dc - v_dc_ref, x_dc, dt, g.kp, g.ki, v_dc_ref, tau_m * w_ref, p_g_max)
}

fn check_grid(v_g: DqVector, floor: f64) -> Result<f64> {
    let n2 = v_g.norm_squared();
    let n = n2.sqrt();
    if !(n > floor) || n == 0.0 {
        return Err(Error::GridLost { v_norm: n, floor });
    }
    Ok(n2)
}

/// Current that realizes `(P*, Q*)` at grid voltage `v_g`, before limiting.
///
/// This is the steady-state map `h(Q*, d)` with `d = (P*, v_g)`.
pub fn power_to_current(p_star: f64, q_star: f64, v_g: DqVector, v_floor: f64) -> Result<DqVector> {
    let n2 = check_grid(v_g, v_floor)?;
    Ok((v_g * p_star - rotate90(v_g) * q_star) * (1.0 / n2))
}

/// Circularly limited current reference.
pub fn current_reference(p_star: f64, q_star: f64, v_g: DqVector, i_g_max: f64, v_floor: f64) -> Result<DqVector> {
    let raw = power_to_current(p_star, q_star, v_g, v_floor)?;
    sat_circular(raw, i_g_max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurrentLoopOutput {
    /// Applied (circularly limited) modulation.
    pub m_g: DqVector,
    /// Modulation command before the circular limiter.
    pub m_g_raw: DqVector,
    pub x_g: DqVector,
}

/// Per-component bound on the current integrator: `Ki·|x|/v_dc_ref ≤ 1/√2`.
pub fn current_integrator_bound(ki: f64, v_dc_ref: f64) -> f64 {
    FRAC_1_SQRT_2 * v_dc_ref / ki
}

/// dq current loop with impedance and grid-voltage feed-forward.
#[allow(clippy::too_many_arguments)]
pub fn current_pi_step(
    i_g: DqVector,
    i_g_star: DqVector,
    x_g: DqVector,
    v_g: DqVector,
    dt: f64,
    g: &LoopGains,
    p: &PlantParams,
    v_dc_ref: f64,
    m_lim: f64,
) -> CurrentLoopOutput {
    let err = i_g - i_g_star;
    let bound = current_integrator_bound(g.ki, v_dc_ref);
    let x = x_g + err * dt;
    let x = DqVector::new(x.d.clamp(-bound, bound), x.q.clamp(-bound, bound));
    let m_raw = (v_g - p.apply_impedance(i_g_star) + err * g.kp + x * g.ki) * (1.0 / v_dc_ref);
    // m_lim is validated non-negative at configuration time
    let m = sat_circular(m_raw, m_lim.max(0.0)).unwrap_or(m_raw);
    CurrentLoopOutput { m_g: m, m_g_raw: m_raw, x_g: x }
}

/// Squared modulation amplitude at steady state for a commanded `(P, Q)`:
///
/// `‖m‖²·v_dc² = ‖v‖² − 2R_g·P − 2ω₀L_g·Q + ‖Z_g‖²/‖v‖²·(P² + Q²)`.
pub fn modulation_norm_squared(p_w: f64, q_var: f64, v_g: DqVector, p: &PlantParams, v_dc_ref: f64) -> Result<f64> {
    let n2 = check_grid(v_g, 0.0)?;
    let num = n2 - 2.0 * p.r_g * p_w - 2.0 * p.reactance() * q_var
        + p.impedance_norm_squared() / n2 * (p_w * p_w + q_var * q_var);
    Ok(num / (v_dc_ref * v_dc_ref))
}

/// Bandwidth/damping tuning of the three loops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tuning {
    pub omega_m: f64,
    pub zeta_m: f64,
    pub omega_dc: f64,
    pub zeta_dc: f64,
    pub omega_g: f64,
    pub zeta_g: f64,
}

impl Default for Tuning {
    fn default() -> Self {
        use std::f64::consts::PI;
        Self {
            omega_m: 2.0 * PI * 2.0,
            zeta_m: 1.0,
            omega_dc: 2.0 * PI * 20.0,
            zeta_dc: 1.0,
            omega_g: 2.0 * PI * 200.0,
            zeta_g: 1.0,
        }
    }
}

/// Measurements available to the controller at a control tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurements {
    pub w: f64,
    pub v_dc: f64,
    pub i_g: DqVector,
    pub v_g: DqVector,
}

/// Outputs of the speed and DC-link stages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerCommand {
    pub tau_m: f64,
    pub p_star: f64,
}

/// Outputs of the current-reference and current-loop stages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurrentCommand {
    /// Current reference before the circular limiter.
    pub i_star_raw: DqVector,
    pub i_star: DqVector,
    pub m_g: DqVector,
    pub m_g_raw: DqVector,
}

/// Gains, limits, set-points and integrator states of the cascade.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlStack {
    pub x_m: f64,
    pub x_dc: f64,
    pub x_g: DqVector,
    pub speed: LoopGains,
    pub dc: LoopGains,
    pub current: LoopGains,
    pub limits: Limits,
    pub plant: PlantParams,
    pub w_ref: f64,
    pub v_dc_ref: f64,
    /// Grid-voltage magnitude below which the reference is undefined.
    pub v_floor: f64,
}

impl ControlStack {
    pub fn new(plant: PlantParams, limits: Limits, tuning: &Tuning, v_dc_ref: f64) -> Result<Self> {
        Ok(Self {
            x_m: 0.0,
            x_dc: 0.0,
            x_g: DqVector::ZERO,
            speed: gains_from_bandwidth(tuning.omega_m, tuning.zeta_m, plant.inertia)?,
            dc: gains_from_bandwidth(tuning.omega_dc, tuning.zeta_dc, plant.c_dc)?,
            current: gains_from_bandwidth(tuning.omega_g, tuning.zeta_g, plant.l_g)?,
            limits,
            plant,
            w_ref: 0.0,
            v_dc_ref,
            v_floor: 0.01 * limits.v_g_nom,
        })
    }

    /// Speed loop followed by the DC-link loop.
    pub fn power_stage(&mut self, meas: &Measurements, dt: f64) -> PowerCommand {
        let (tau_m, x_m) = speed_pi_step(meas.w, self.w_ref, self.x_m, dt, &self.speed, self.limits.tau_max);
        self.x_m = x_m;
        let (p_star, x_dc) =
            dc_pi_step(meas.v_dc, self.v_dc_ref, self.x_dc, tau_m, self.w_ref, dt, &self.dc, self.limits.p_g_max);
        self.x_dc = x_dc;
        PowerCommand { tau_m, p_star }
    }

    /// Current reference and current loop for the given power set-points.
    pub fn current_stage(&mut self, meas: &Measurements, p_star: f64, q_star: f64, dt: f64) -> Result<CurrentCommand> {
        let i_star_raw = power_to_current(p_star, q_star, meas.v_g, self.v_floor)?;
        let i_star = sat_circular(i_star_raw, self.limits.i_g_max)?;
        let out = current_pi_step(
            meas.i_g,
            i_star,
            self.x_g,
            meas.v_g,
            dt,
            &self.current,
            &self.plant,
            self.v_dc_ref,
            self.limits.m_lim,
        );
        self.x_g = out.x_g;
        Ok(CurrentCommand { i_star_raw, i_star, m_g: out.m_g, m_g_raw: out.m_g_raw })
    }

    /// Integrator states consistent with a steady operating point: the speed
    /// integrator produces `tau_m`, the DC integrator is zero and the current
    /// integrator is zero (all feed-forward).
    pub fn preset_steady(&mut self, tau_m: f64) {
        self.x_m = -tau_m / self.speed.ki;
        self.x_dc = 0.0;
        self.x_g = DqVector::ZERO;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dq::instantaneous_power;

    fn unit_gains() -> LoopGains {
        gains_from_bandwidth(1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn gains_examples() {
        let g = unit_gains();
        assert_eq!((g.kp, g.ki), (2.0, 1.0));
        let g = gains_from_bandwidth(10.0, 0.5, 2.0).unwrap();
        assert_eq!((g.kp, g.ki), (20.0, 200.0));
        let a = gains_from_bandwidth(3.0, 0.7, 1.5).unwrap();
        let b = gains_from_bandwidth(3.0, 0.7, 3.0).unwrap();
        assert_eq!(b.kp, 2.0 * a.kp);
        assert_eq!(b.ki, 2.0 * a.ki);
        assert!(gains_from_bandwidth(0.0, 1.0, 1.0).is_err());
        assert!(gains_from_bandwidth(1.0, -1.0, 1.0).is_err());
        assert!(gains_from_bandwidth(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn speed_pi_examples() {
        let g = unit_gains();
        assert_eq!(speed_pi_step(5.0, 5.0, 0.0, 0.1, &g, 10.0), (0.0, 0.0));

        // reference discrete PI: x' = x + dt*e, u = -kp*e - ki*x'
        let (e, x0, dt) = (-1.0, 0.0, 0.1);
        let x_ref = x0 + dt * e;
        let u_ref = -g.kp * e - g.ki * x_ref;
        let (tau, x) = speed_pi_step(4.0, 5.0, x0, dt, &g, 10.0);
        assert!((x - -0.1).abs() < 1e-15 && (x - x_ref).abs() < 1e-15);
        assert!((tau - 2.1).abs() < 1e-12 && (tau - u_ref).abs() < 1e-15);

        let (tau, x) = speed_pi_step(0.0, 1e6, 0.3, 0.1, &g, 1.0);
        assert_eq!(tau.abs(), 1.0);
        assert_eq!(x, 0.3);
    }

    #[test]
    fn speed_pi_unwinds_out_of_saturation() {
        let g = unit_gains();
        // saturated high from the integrator, but error now pulls it back
        let (tau, x) = speed_pi_step(10.0, 0.0, -100.0, 0.1, &g, 1.0);
        assert_eq!(tau, 1.0);
        assert!((x - -99.0).abs() < 1e-12);
    }

    #[test]
    fn dc_pi_examples() {
        let g = unit_gains();
        let (p, x) = dc_pi_step(5000.0, 5000.0, 0.0, 1000.0, 100.0, 1e-3, &g, 5e6);
        assert_eq!((p, x), (1e5, 0.0));
        let (p, _) = dc_pi_step(5000.0, 5000.0, 0.0, 6e4, 100.0, 1e-3, &g, 5e6);
        assert_eq!(p, 5e6);
        let (p, _) = dc_pi_step(5000.0, 5000.0, 0.0, -1000.0, 100.0, 1e-3, &g, 5e6);
        assert_eq!(p, -1e5);
    }

    #[test]
    fn current_reference_examples() {
        let v = DqVector::new(100.0, 0.0);
        assert_eq!(current_reference(1000.0, 0.0, v, 1e3, 1.0).unwrap(), DqVector::new(10.0, 0.0));
        let i = current_reference(1000.0, 500.0, v, 1e3, 1.0).unwrap();
        assert_eq!(i, DqVector::new(10.0, -5.0));
        let (p, q) = instantaneous_power(v, i);
        assert!((p - 1000.0).abs() < 1e-12 && (q - 500.0).abs() < 1e-12);

        let raw = power_to_current(3e5, 4e5, v, 1.0).unwrap();
        let lim = raw.norm() / 2.0;
        let sat = current_reference(3e5, 4e5, v, lim, 1.0).unwrap();
        assert!((sat.norm() - lim).abs() < 1e-9);
        assert!((sat.d / sat.q - raw.d / raw.q).abs() < 1e-12);
    }

    #[test]
    fn grid_lost() {
        let v = DqVector::new(0.5, 0.0);
        assert!(matches!(current_reference(1.0, 0.0, v, 1.0, 31.5), Err(Error::GridLost { .. })));
        assert!(modulation_norm_squared(1.0, 1.0, DqVector::ZERO, &PlantParams::default(), 1.0).is_err());
    }

    #[test]
    fn current_pi_feed_forward() {
        let mut p = PlantParams { r_g: 0.0, ..PlantParams::default() };
        p.l_g = 1e-30;
        p.omega0 = 1e-30;
        let g = gains_from_bandwidth(100.0, 1.0, 1e-3).unwrap();
        let v = DqVector::new(300.0, -40.0);
        let i = DqVector::new(10.0, 2.0);
        let out = current_pi_step(i, i, DqVector::ZERO, v, 1e-4, &g, &p, 1000.0, 0.7);
        assert!((out.m_g_raw - v * 1e-3).norm() < 1e-12);
    }

    #[test]
    fn current_pi_impedance_feed_forward() {
        // choose i* with Z i* = (10, 5) for the default impedance
        let p = PlantParams::default();
        let (r, x) = (p.r_g, p.reactance());
        let det = r * r + x * x;
        let target = DqVector::new(10.0, 5.0);
        let i_star = DqVector::new((r * target.d + x * target.q) / det, (r * target.q - x * target.d) / det);
        assert!((p.apply_impedance(i_star) - target).norm() < 1e-9);
        let g = gains_from_bandwidth(1000.0, 1.0, p.l_g).unwrap();
        let out = current_pi_step(i_star, i_star, DqVector::ZERO, DqVector::new(100.0, 0.0), 1e-4, &g, &p, 1000.0, 0.7);
        assert!((out.m_g_raw.d - 0.09).abs() < 1e-12);
        assert!((out.m_g_raw.q - -0.005).abs() < 1e-12);
    }

    #[test]
    fn current_pi_circular_clamp() {
        let mut p = PlantParams { r_g: 0.0, ..PlantParams::default() };
        p.l_g = 1e-30;
        let g = gains_from_bandwidth(100.0, 1.0, 1e-3).unwrap();
        let v = DqVector::new(900.0, 0.0);
        let m_lim = 0.93 / 2f64.sqrt();
        let out = current_pi_step(DqVector::ZERO, DqVector::ZERO, DqVector::ZERO, v, 1e-4, &g, &p, 1000.0, m_lim);
        assert!((out.m_g_raw.norm() - 0.9).abs() < 1e-12);
        assert!((out.m_g.norm() - m_lim).abs() < 1e-15);
    }

    #[test]
    fn current_integrator_clamp() {
        let p = PlantParams::default();
        let g = gains_from_bandwidth(1000.0, 1.0, p.l_g).unwrap();
        let bound = current_integrator_bound(g.ki, 5000.0);
        let mut x = DqVector::ZERO;
        for _ in 0..100_000 {
            let out = current_pi_step(
                DqVector::new(1e5, -1e5),
                DqVector::ZERO,
                x,
                DqVector::new(3000.0, 0.0),
                2.5e-4,
                &g,
                &p,
                5000.0,
                0.65,
            );
            x = out.x_g;
            assert!(x.d.abs() <= bound && x.q.abs() <= bound);
            assert!(out.m_g.norm() <= 0.65 + 1e-15);
        }
        assert!((g.ki * x.d / 5000.0 - FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn modulation_zero_impedance() {
        let mut p = PlantParams { r_g: 0.0, ..PlantParams::default() };
        p.l_g = 0.0;
        let v = DqVector::new(300.0, 400.0);
        for (pw, q) in [(0.0, 0.0), (1e6, -3e5), (-2e5, 9e5)] {
            let m2 = modulation_norm_squared(pw, q, v, &p, 1000.0).unwrap();
            assert!((m2 - 0.25).abs() < 1e-15);
        }
    }
}
