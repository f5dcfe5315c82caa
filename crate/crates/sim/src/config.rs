//! Simulation configuration: the TOML file schema, defaults and validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use drive_core::af::AfConfig;
use drive_core::control::Tuning;
use drive_core::ofo::OfoConfig;
use drive_core::{Limits, PlantParams, ReferenceDesign};

use crate::scenario::ScenarioSpec;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OuterMode {
    /// `Q_star = Q_ref`.
    #[default]
    None,
    Af,
    Ofo,
}

impl std::str::FromStr for OuterMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(Self::None),
            "af" => Ok(Self::Af),
            "ofo" => Ok(Self::Ofo),
            other => Err(format!("unknown outer mode '{other}' (expected none, af or ofo)")),
        }
    }
}

impl std::fmt::Display for OuterMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::None => "none",
            Self::Af => "af",
            Self::Ofo => "ofo",
        })
    }
}

/// What happens to the motor-side converter once the DC link leaves the trip band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TripAction {
    /// Record the trip only.
    Continue,
    /// Record the trip and block the motor-side converter (`tau_m = 0`) for the
    /// rest of the run; the grid side keeps regulating.
    #[default]
    BlockMotor,
    /// Record the trip and end the run.
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Timing {
    /// Plant integration step, s.
    pub dt_plant: f64,
    /// Control period, s.
    pub t_c: f64,
}

impl Default for Timing {
    fn default() -> Self {
        Self { dt_plant: 25e-6, t_c: 250e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Protection {
    /// Relative DC-link band around the reference; leaving it is a trip.
    pub trip_band: f64,
    pub on_trip: TripAction,
    /// Overspeed flag threshold over `w_max`.
    pub overspeed: f64,
}

impl Default for Protection {
    fn default() -> Self {
        Self { trip_band: 0.15, on_trip: TripAction::BlockMotor, overspeed: 1.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct Noise {
    /// Standard deviation of additive Gaussian noise on each measured current
    /// component, A. Drawn from the seeded generator.
    pub current_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub plot: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), plot: false }
    }
}

/// Field-wise overrides of the plant parameters derived from `[design]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PlantOverrides {
    pub inertia: Option<f64>,
    pub damping: Option<f64>,
    pub c_dc: Option<f64>,
    pub g_dc: Option<f64>,
    pub l_g: Option<f64>,
    pub r_g: Option<f64>,
    pub omega0: Option<f64>,
}

/// Rating overrides; the dependent limits (`p_g_max`, `q_g_max`, `i_g_max`)
/// are always derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct LimitOverrides {
    pub tau_max: Option<f64>,
    pub w_max: Option<f64>,
    pub alpha_q: Option<f64>,
    pub alpha_v: Option<f64>,
    pub v_g_nom: Option<f64>,
    pub m_lim: Option<f64>,
}

/// The file schema. Every table and key is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub outer_mode: OuterMode,
    pub seed: u64,
    /// DC-link reference, V; defaults to `design.v_dc_ref`.
    pub v_dc_ref: Option<f64>,
    pub design: ReferenceDesign,
    pub plant: PlantOverrides,
    pub limits: LimitOverrides,
    pub tuning: Tuning,
    pub af: AfConfig,
    pub ofo: OfoFile,
    pub timing: Timing,
    pub protection: Protection,
    pub noise: Noise,
    pub scenario: ScenarioSpec,
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OfoFile {
    pub k_mu: f64,
    pub k_gamma: f64,
    pub t_s: f64,
}

impl Default for OfoFile {
    fn default() -> Self {
        let d = OfoConfig::default();
        Self { k_mu: d.k_mu, k_gamma: d.k_gamma, t_s: d.t_s }
    }
}

/// Resolved and validated configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub plant: PlantParams,
    pub limits: Limits,
    pub v_dc_ref: f64,
    pub tuning: Tuning,
    pub outer_mode: OuterMode,
    pub af: AfConfig,
    pub ofo: OfoConfig,
    pub timing: Timing,
    pub protection: Protection,
    pub noise: Noise,
    pub scenario: ScenarioSpec,
    pub output: OutputSpec,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        ConfigFile::default().resolve().expect("default configuration is valid")
    }
}

fn positive_integer_ratio(num: f64, den: f64) -> Option<u64> {
    let r = num / den;
    let n = r.round();
    (n >= 1.0 && (r - n).abs() <= 1e-9 * r.max(1.0)).then_some(n as u64)
}

impl ConfigFile {
    pub fn resolve(&self) -> Result<SimConfig, ConfigError> {
        let inv = |s: String| ConfigError::Invalid(s);
        let base = self.design.plant_params();
        let o = &self.plant;
        let plant = PlantParams {
            inertia: o.inertia.unwrap_or(base.inertia),
            damping: o.damping.unwrap_or(base.damping),
            c_dc: o.c_dc.unwrap_or(base.c_dc),
            g_dc: o.g_dc.unwrap_or(base.g_dc),
            l_g: o.l_g.unwrap_or(base.l_g),
            r_g: o.r_g.unwrap_or(base.r_g),
            omega0: o.omega0.unwrap_or(base.omega0),
        };
        let d = &self.design;
        let l = &self.limits;
        let limits = Limits::from_ratings(
            l.tau_max.unwrap_or(d.tau_max),
            l.w_max.unwrap_or(d.w_max),
            l.alpha_q.unwrap_or(d.alpha_q),
            l.alpha_v.unwrap_or(d.alpha_v),
            l.v_g_nom.unwrap_or(d.v_g_nom),
            l.m_lim.unwrap_or(d.m_lim),
        );
        let v_dc_ref = self.v_dc_ref.unwrap_or(d.v_dc_ref);
        let ofo = OfoConfig { k_mu: self.ofo.k_mu, k_gamma: self.ofo.k_gamma, t_s: self.ofo.t_s, t_c: self.timing.t_c };
        let cfg = SimConfig {
            plant,
            limits,
            v_dc_ref,
            tuning: self.tuning,
            outer_mode: self.outer_mode,
            af: self.af,
            ofo,
            timing: self.timing,
            protection: self.protection,
            noise: self.noise,
            scenario: self.scenario.clone(),
            output: self.output.clone(),
            seed: self.seed,
        };
        cfg.validate().map_err(inv)?;
        Ok(cfg)
    }
}

impl SimConfig {
    /// Plant steps per control tick.
    pub fn plant_steps_per_tick(&self) -> u64 {
        positive_integer_ratio(self.timing.t_c, self.timing.dt_plant).expect("validated")
    }

    /// Control ticks per OFO trigger.
    pub fn ticks_per_trigger(&self) -> u64 {
        positive_integer_ratio(self.ofo.t_s, self.timing.t_c).expect("validated")
    }

    /// Number of control ticks after t = 0.
    pub fn n_ticks(&self) -> u64 {
        (self.scenario.duration / self.timing.t_c).round() as u64
    }

    pub fn validate(&self) -> Result<(), String> {
        let t = &self.timing;
        if !(t.dt_plant > 0.0 && t.dt_plant.is_finite()) {
            return Err(format!("timing.dt_plant must be > 0, got {}", t.dt_plant));
        }
        if !(t.t_c > 0.0 && t.t_c.is_finite()) {
            return Err(format!("timing.t_c must be > 0, got {}", t.t_c));
        }
        if positive_integer_ratio(t.t_c, t.dt_plant).is_none() {
            return Err(format!(
                "timing.t_c = {} must be a positive integer multiple of timing.dt_plant = {}",
                t.t_c, t.dt_plant
            ));
        }
        if !(self.ofo.t_s > 0.0) || positive_integer_ratio(self.ofo.t_s, t.t_c).is_none() {
            return Err(format!(
                "ofo.t_s = {} must be a positive integer multiple of timing.t_c = {}",
                self.ofo.t_s, t.t_c
            ));
        }
        self.plant.validate().map_err(|e| format!("plant: {e}"))?;
        self.plant.check_euler_stability(t.dt_plant).map_err(|e| format!("timing.dt_plant: {e}"))?;
        self.limits.validate().map_err(|e| e.to_string())?;
        if !(self.v_dc_ref > 0.0 && self.v_dc_ref.is_finite()) {
            return Err(format!("v_dc_ref must be > 0, got {}", self.v_dc_ref));
        }
        for (k, w, z) in [
            ("omega_m", self.tuning.omega_m, self.tuning.zeta_m),
            ("omega_dc", self.tuning.omega_dc, self.tuning.zeta_dc),
            ("omega_g", self.tuning.omega_g, self.tuning.zeta_g),
        ] {
            if !(w > 0.0 && z > 0.0) {
                return Err(format!("tuning.{k} and its damping ratio must be > 0"));
            }
        }
        self.ofo.validate().map_err(|e| format!("ofo.k_mu/ofo.k_gamma: {e}"))?;
        let g1_max = 2.0 * self.limits.alpha_q * self.limits.p_g_max / self.limits.v_g_nom;
        self.af.validate(t.t_c, g1_max, 1.0).map_err(|e| format!("af: {e}"))?;
        let p = &self.protection;
        if !(p.trip_band > 0.0 && p.trip_band < 1.0) {
            return Err(format!("protection.trip_band must lie in (0, 1), got {}", p.trip_band));
        }
        if !(p.overspeed >= 1.0) {
            return Err(format!("protection.overspeed must be >= 1, got {}", p.overspeed));
        }
        if !(self.noise.current_std >= 0.0) {
            return Err(format!("noise.current_std must be >= 0, got {}", self.noise.current_std));
        }
        self.scenario.validate()
    }
}

pub fn parse_config(text: &str, path: &Path) -> Result<SimConfig, ConfigError> {
    let file: ConfigFile =
        toml::from_str(text).map_err(|e| ConfigError::Parse { path: path.to_owned(), message: e.to_string() })?;
    file.resolve()
}

pub fn load_config(path: &Path) -> Result<SimConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_owned(), source })?;
    parse_config(&text, path)
}

const SCHEMA_NOTES: &[(&str, &str)] = &[
    ("", "Top level. outer_mode: none | af | ofo. seed: generator seed for measurement noise.\n# v_dc_ref: DC-link reference in V (defaults to design.v_dc_ref)."),
    ("design", "Reference drive in SI and per-unit; plant parameters and limits are derived from it."),
    ("plant", "Optional SI overrides: inertia kg m^2, damping N m s, c_dc F, g_dc S, l_g H, r_g ohm, omega0 rad/s."),
    ("limits", "Optional rating overrides: tau_max N m, w_max rad/s, alpha_q, alpha_v, v_g_nom V, m_lim (<= 1/sqrt 2).\n# p_g_max, q_g_max and i_g_max are derived."),
    ("tuning", "Closed-loop bandwidths (rad/s) and damping ratios of the speed, DC-link and current loops."),
    ("af", "Activation-function loop. thr1 defaults to limits i_g_max; sharpness = 0 is the hard hinge."),
    ("ofo", "Feedback optimization: mu = k_mu t_s |v|^2, gamma = k_gamma t_s / |v|^2.\n# Requires 0 < k_mu t_s (1 + k_gamma t_s) < 2 and t_s a multiple of timing.t_c."),
    ("timing", "dt_plant and t_c in s; t_c must be a multiple of dt_plant."),
    ("protection", "trip_band: relative DC-link band; on_trip: continue | block_motor | stop; overspeed over w_max."),
    ("noise", "current_std: Gaussian noise on measured current components, A."),
    ("scenario", "kind: voltage_dip | reference_step | over_voltage | steady | custom. Times in s, q values in var.\n# load_pu over tau_max and q_ref default per kind. custom needs [scenario.custom] profiles\n# v_g_pu, tau_l_pu, q_ref, w_ref_pu given as lists of [t, value] pairs."),
    ("output", "dir: output directory; plot: also write an SVG figure."),
];

/// Annotated TOML document listing every key with its default.
pub fn schema() -> String {
    let file = ConfigFile::default();
    let value = toml::Value::try_from(&file).expect("defaults serialize");
    let table = value.as_table().expect("table");
    let mut out = String::from("# drive-sim configuration reference. All keys are optional.\n");
    let mut top = toml::map::Map::new();
    for (k, v) in table {
        if !v.is_table() {
            top.insert(k.clone(), v.clone());
        }
    }
    out.push_str(&format!("\n# {}\n", SCHEMA_NOTES[0].1));
    out.push_str(&toml::to_string(&top).expect("serialize"));
    for (section, note) in &SCHEMA_NOTES[1..] {
        out.push_str(&format!("\n# {note}\n[{section}]\n"));
        match table.get(*section) {
            Some(toml::Value::Table(t)) if !t.is_empty() => out.push_str(&toml::to_string(t).expect("serialize")),
            _ => out.push_str("# (no keys set by default)\n"),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = SimConfig::default();
        assert_eq!(c.plant_steps_per_tick(), 10);
        assert_eq!(c.ticks_per_trigger(), 4);
        assert_eq!(c.n_ticks(), 40_000);
    }

    #[test]
    fn integer_ratio() {
        assert_eq!(positive_integer_ratio(250e-6, 25e-6), Some(10));
        assert_eq!(positive_integer_ratio(1e-3, 250e-6), Some(4));
        assert_eq!(positive_integer_ratio(1.1e-3, 250e-6), None);
        assert_eq!(positive_integer_ratio(1e-4, 250e-6), None);
    }
}
