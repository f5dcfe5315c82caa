//! Disturbance and set-point profiles for the test scenarios.

use serde::{Deserialize, Serialize};

use drive_core::{DqVector, Limits};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    VoltageDip,
    ReferenceStep,
    OverVoltage,
    /// Constant operating point; useful for identification and regression runs.
    Steady,
    Custom,
}

impl std::str::FromStr for ScenarioKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "voltage_dip" => Ok(Self::VoltageDip),
            "reference_step" => Ok(Self::ReferenceStep),
            "over_voltage" => Ok(Self::OverVoltage),
            "steady" => Ok(Self::Steady),
            "custom" => Ok(Self::Custom),
            other => Err(format!(
                "unknown scenario kind '{other}' (expected voltage_dip, reference_step, over_voltage, steady or custom)"
            )),
        }
    }
}

/// A piecewise-linear profile given as `(t, value)` breakpoints; held constant
/// outside the first and last breakpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile(pub Vec<(f64, f64)>);

impl Profile {
    pub fn constant(v: f64) -> Self {
        Profile(vec![(0.0, v)])
    }

    /// Right-continuous: at a repeated breakpoint time the last value applies.
    pub fn eval(&self, t: f64) -> f64 {
        let pts = &self.0;
        let Some(first) = pts.first() else { return 0.0 };
        if t < first.0 {
            return first.1;
        }
        let i = pts.partition_point(|p| p.0 <= t);
        if i == pts.len() {
            return pts[i - 1].1;
        }
        let ((t0, v0), (t1, v1)) = (pts[i - 1], pts[i]);
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    fn validate(&self, name: &str) -> Result<(), String> {
        if self.0.is_empty() {
            return Err(format!("scenario.custom.{name}: profile needs at least one breakpoint"));
        }
        for w in self.0.windows(2) {
            if w[1].0 < w[0].0 {
                return Err(format!("scenario.custom.{name}: breakpoint times must be non-decreasing"));
            }
        }
        if self.0.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
            return Err(format!("scenario.custom.{name}: breakpoints must be finite"));
        }
        Ok(())
    }
}

/// User profiles for the `custom` kind, in per-unit of the limits:
/// grid voltage over `v_g_nom`, load over `tau_max`, speed over `w_max`;
/// reactive power in vars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CustomProfiles {
    pub v_g_pu: Profile,
    pub tau_l_pu: Profile,
    pub q_ref: Profile,
    pub w_ref_pu: Profile,
}

impl Default for CustomProfiles {
    fn default() -> Self {
        Self {
            v_g_pu: Profile::constant(1.0),
            tau_l_pu: Profile::constant(0.0),
            q_ref: Profile::constant(0.0),
            w_ref_pu: Profile::constant(1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    /// Seconds.
    pub duration: f64,
    /// Speed reference over `w_max`.
    pub w_ref_pu: f64,
    /// Load torque over `tau_max`; `None` selects the kind's default.
    pub load_pu: Option<f64>,
    /// External reactive power reference, vars; `None` selects the kind's default.
    pub q_ref: Option<f64>,
    /// Event start time, s.
    pub event_start: f64,
    /// Relative depth of the voltage dip.
    pub dip_depth: f64,
    /// Linear ramp time into and out of the dip or over-voltage, s.
    pub ramp_time: f64,
    /// Time held at the dip bottom, s.
    pub dip_hold: f64,
    /// Reactive power reference during the step, vars.
    pub step_q: f64,
    /// Duration of the step, s.
    pub step_dwell: f64,
    /// Grid voltage factor during the over-voltage.
    pub ov_factor: f64,
    /// Duration of the over-voltage plateau, s.
    pub ov_duration: f64,
    /// Hold disturbances constant between OFO triggers.
    pub assumption3: bool,
    pub custom: Option<CustomProfiles>,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            kind: ScenarioKind::VoltageDip,
            duration: 10.0,
            w_ref_pu: 1.0,
            load_pu: None,
            q_ref: None,
            event_start: 2.0,
            dip_depth: 0.4,
            ramp_time: 0.1,
            dip_hold: 1.0,
            step_q: -3.0e6,
            step_dwell: 5.0,
            ov_factor: 1.12,
            ov_duration: 5.0,
            assumption3: false,
            custom: None,
        }
    }
}

impl ScenarioSpec {
    pub fn of_kind(kind: ScenarioKind) -> Self {
        Self { kind, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(format!("scenario.duration must be > 0, got {}", self.duration));
        }
        if !(self.dip_depth >= 0.0 && self.dip_depth < 1.0) {
            return Err(format!("scenario.dip_depth must lie in [0, 1), got {}", self.dip_depth));
        }
        for (k, v) in [
            ("ramp_time", self.ramp_time),
            ("dip_hold", self.dip_hold),
            ("step_dwell", self.step_dwell),
            ("ov_duration", self.ov_duration),
            ("event_start", self.event_start),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(format!("scenario.{k} must be >= 0, got {v}"));
            }
        }
        if !(self.ov_factor > 0.0) {
            return Err(format!("scenario.ov_factor must be > 0, got {}", self.ov_factor));
        }
        if self.kind == ScenarioKind::Custom {
            let c = self.custom.as_ref().ok_or("scenario.custom profiles are required for kind = custom")?;
            c.v_g_pu.validate("v_g_pu")?;
            c.tau_l_pu.validate("tau_l_pu")?;
            c.q_ref.validate("q_ref")?;
            c.w_ref_pu.validate("w_ref_pu")?;
        }
        Ok(())
    }
}

/// Instantaneous scenario inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioSample {
    pub v_g: DqVector,
    pub tau_l: f64,
    pub q_ref: f64,
    pub w_ref: f64,
}

/// Time functions built from a [`ScenarioSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    v_g_pu: Profile,
    tau_l: Profile,
    q_ref: Profile,
    w_ref: Profile,
    v_g_nom: f64,
}

/// Trapezoid from 1 to `level` and back, starting at `start`.
fn trapezoid(start: f64, ramp: f64, hold: f64, level: f64) -> Profile {
    Profile(vec![(start, 1.0), (start + ramp, level), (start + ramp + hold, level), (start + 2.0 * ramp + hold, 1.0)])
}

fn step(start: f64, dwell: f64, base: f64, level: f64) -> Profile {
    Profile(vec![(start, base), (start, level), (start + dwell, level), (start + dwell, base)])
}

pub fn build_scenario(spec: &ScenarioSpec, lim: &Limits) -> Scenario {
    let w_ref = spec.w_ref_pu * lim.w_max;
    let (v_g_pu, load, q_ref) = match spec.kind {
        ScenarioKind::VoltageDip => (
            trapezoid(spec.event_start, spec.ramp_time, spec.dip_hold, 1.0 - spec.dip_depth),
            Profile::constant(spec.load_pu.unwrap_or(0.9)),
            Profile::constant(spec.q_ref.unwrap_or(3.0e6)),
        ),
        ScenarioKind::ReferenceStep => {
            let base = spec.q_ref.unwrap_or(3.0e6);
            (
                Profile::constant(1.0),
                Profile::constant(spec.load_pu.unwrap_or(0.9)),
                step(spec.event_start, spec.step_dwell, base, spec.step_q),
            )
        }
        ScenarioKind::OverVoltage => (
            trapezoid(spec.event_start, spec.ramp_time, spec.ov_duration, spec.ov_factor),
            Profile::constant(spec.load_pu.unwrap_or(-0.8)),
            Profile::constant(spec.q_ref.unwrap_or(0.0)),
        ),
        ScenarioKind::Steady => (
            Profile::constant(1.0),
            Profile::constant(spec.load_pu.unwrap_or(0.9)),
            Profile::constant(spec.q_ref.unwrap_or(0.0)),
        ),
        ScenarioKind::Custom => {
            let c = spec.custom.clone().unwrap_or_default();
            let w = Profile(c.w_ref_pu.0.iter().map(|&(t, v)| (t, v * lim.w_max)).collect());
            let tau = Profile(c.tau_l_pu.0.iter().map(|&(t, v)| (t, v * lim.tau_max)).collect());
            return Scenario { v_g_pu: c.v_g_pu, tau_l: tau, q_ref: c.q_ref, w_ref: w, v_g_nom: lim.v_g_nom };
        }
    };
    let tau_l = Profile(load.0.iter().map(|&(t, v)| (t, v * lim.tau_max)).collect());
    Scenario { v_g_pu, tau_l, q_ref, w_ref: Profile::constant(w_ref), v_g_nom: lim.v_g_nom }
}

impl Scenario {
    /// Grid voltage is aligned with the d-axis (the frame is synchronized to
    /// the measured grid angle).
    pub fn sample(&self, t: f64) -> ScenarioSample {
        ScenarioSample {
            v_g: DqVector::new(self.v_g_pu.eval(t) * self.v_g_nom, 0.0),
            tau_l: self.tau_l.eval(t),
            q_ref: self.q_ref.eval(t),
            w_ref: self.w_ref.eval(t),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dip_bottom() {
        let lim = Limits::default();
        let s = build_scenario(&ScenarioSpec::of_kind(ScenarioKind::VoltageDip), &lim);
        let v = s.sample(2.6).v_g.norm();
        assert!((v - 0.6 * lim.v_g_nom).abs() < 1e-9);
        assert!((s.sample(1.0).v_g.norm() - lim.v_g_nom).abs() < 1e-9);
        // halfway down the ramp
        assert!((s.sample(2.05).v_g.norm() - 0.8 * lim.v_g_nom).abs() < 1e-6);
        assert!((s.sample(2.6).tau_l - 0.9 * lim.tau_max).abs() < 1e-9);
        assert_eq!(s.sample(2.6).q_ref, 3.0e6);
        assert_eq!(s.sample(0.0).w_ref, lim.w_max);
    }

    #[test]
    fn reference_step_levels() {
        let s = build_scenario(&ScenarioSpec::of_kind(ScenarioKind::ReferenceStep), &Limits::default());
        assert_eq!(s.sample(1.0).q_ref, 3.0e6);
        assert_eq!(s.sample(4.5).q_ref, -3.0e6);
        assert_eq!(s.sample(2.0).q_ref, -3.0e6);
        assert_eq!(s.sample(7.5).q_ref, 3.0e6);
    }

    #[test]
    fn over_voltage_plateau() {
        let lim = Limits::default();
        let s = build_scenario(&ScenarioSpec::of_kind(ScenarioKind::OverVoltage), &lim);
        assert!((s.sample(4.0).v_g.norm() - 1.12 * lim.v_g_nom).abs() < 1e-9);
        assert!((s.sample(4.0).tau_l + 0.8 * lim.tau_max).abs() < 1e-9);
        assert_eq!(s.sample(4.0).q_ref, 0.0);
        assert!((s.sample(9.0).v_g.norm() - lim.v_g_nom).abs() < 1e-9);
    }

    #[test]
    fn profile_interpolation() {
        let p = Profile(vec![(0.0, 0.0), (1.0, 10.0), (1.0, 20.0), (2.0, 20.0)]);
        assert_eq!(p.eval(-1.0), 0.0);
        assert_eq!(p.eval(0.5), 5.0);
        assert_eq!(p.eval(1.0), 20.0);
        assert_eq!(p.eval(3.0), 20.0);
    }

    #[test]
    fn unknown_kind() {
        assert!("brownout".parse::<ScenarioKind>().is_err());
        assert_eq!("over_voltage".parse::<ScenarioKind>().unwrap(), ScenarioKind::OverVoltage);
    }

    #[test]
    fn custom_requires_profiles() {
        let spec = ScenarioSpec::of_kind(ScenarioKind::Custom);
        assert!(spec.validate().is_err());
        let spec = ScenarioSpec { custom: Some(CustomProfiles::default()), ..spec };
        spec.validate().unwrap();
    }
}
