//! The multi-rate simulation loop.
//!
//! Time is an integer tick count: control tick `n` happens at `n·T_c`, plant
//! step `j` at `j·dt_plant`, and OFO triggers at ticks that are multiples of
//! `m = T_s/T_c`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;
use thiserror::Error;

use drive_core::af::{af_step, q_min_modulation, AfInputs, AfState};
use drive_core::control::{current_reference, dc_pi_step, power_to_current, ControlStack, Measurements};
use drive_core::dq::{instantaneous_power, DqVector};
use drive_core::ofo::{constraint_interval, ofo_step, project, step_size, DisturbanceSample, OfoContext, OfoState};
use drive_core::oracle::optimal_q_analytic;
use drive_core::plant::{plant_step, PlantInputs, PlantState};

use crate::config::{OuterMode, SimConfig, TripAction};
use crate::scenario::{build_scenario, Scenario, ScenarioSample};

/// One row per control tick. Quantities are sampled at the start of the tick
/// together with the commands computed from them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub tick: u64,
    pub t: f64,
    pub w: f64,
    pub w_ref: f64,
    pub v_dc: f64,
    pub tau_m: f64,
    pub tau_l: f64,
    pub v_g_norm: f64,
    pub m_norm: f64,
    pub m_raw_norm: f64,
    pub m_limit: f64,
    pub i_norm: f64,
    pub i_star_norm: f64,
    pub i_star_raw_norm: f64,
    pub i_g_max: f64,
    pub p_star: f64,
    pub p_meas: f64,
    pub q_meas: f64,
    pub q_ref: f64,
    pub q_star: f64,
    /// Unlimited current reference within the current limit.
    pub current_feasible: bool,
    /// Raw modulation command within the modulation limit.
    pub modulation_feasible: bool,
    pub ofo_trigger: bool,
    pub tripped: bool,
}

/// Column names with units, in [`TraceRow`] field order.
pub const TRACE_HEADER: [&str; 24] = [
    "tick",
    "t [s]",
    "w [rad/s]",
    "w_ref [rad/s]",
    "v_dc [V]",
    "tau_m [N m]",
    "tau_l [N m]",
    "v_g_norm [V]",
    "m_norm [-]",
    "m_raw_norm [-]",
    "m_limit [-]",
    "i_norm [A]",
    "i_star_norm [A]",
    "i_star_raw_norm [A]",
    "i_g_max [A]",
    "p_star [W]",
    "p_meas [W]",
    "q_meas [var]",
    "q_ref [var]",
    "q_star [var]",
    "current_feasible [bool]",
    "modulation_feasible [bool]",
    "ofo_trigger [bool]",
    "tripped [bool]",
];

/// How often each outer-loop path ran.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Counters {
    pub af_calls: u64,
    pub ofo_calls: u64,
    pub ofo_triggers: u64,
}

/// Raw data at one OFO trigger, used by the convergence analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TriggerSample {
    pub k: u64,
    /// Iterate the update started from.
    pub q_star: f64,
    /// Minimizer for this trigger's disturbance.
    pub q_opt: f64,
    pub v_norm: f64,
    /// `‖i_g − i_g*‖` one control tick before the trigger.
    pub inner_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunOutput {
    pub trace: Vec<TraceRow>,
    pub counters: Counters,
    pub triggers: Vec<TriggerSample>,
    /// Time of the first DC-link trip, s.
    pub trip_time: Option<f64>,
    pub overspeed: bool,
    /// The run ended early on a trip with `on_trip = stop`.
    pub stopped: bool,
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("simulation diverged at tick {tick}: {source}")]
    Diverged { tick: u64, source: drive_core::Error, partial: Box<RunOutput> },
    #[error(transparent)]
    Core(#[from] drive_core::Error),
}

/// Replaces the outer loop with a fixed `Q_star` schedule; used for
/// identification runs.
pub type QOverride<'a> = &'a dyn Fn(u64) -> Option<f64>;

/// DC-link voltage, relative to its reference, below which a run is
/// declared diverged.
pub const V_DC_FLOOR: f64 = 0.1;

/// Initial plant state, integrator presets and first `Q_star`.
struct Initial {
    state: PlantState,
    ctrl: ControlStack,
    q_star: f64,
    m_raw_norm: f64,
}

fn initial_condition(cfg: &SimConfig, s0: &ScenarioSample) -> Result<Initial, drive_core::Error> {
    let p = &cfg.plant;
    let lim = &cfg.limits;
    let mut ctrl = ControlStack::new(*p, *lim, &cfg.tuning, cfg.v_dc_ref)?;
    ctrl.w_ref = s0.w_ref;
    let tau = (s0.tau_l + p.damping * s0.w_ref).clamp(-lim.tau_max, lim.tau_max);
    let base = tau * s0.w_ref + p.g_dc * cfg.v_dc_ref * cfg.v_dc_ref;
    let mut q_star = s0.q_ref;
    let mut p_star = base;
    for _ in 0..3 {
        if cfg.outer_mode == OuterMode::Ofo {
            let d = DisturbanceSample { p_star, v_g: s0.v_g };
            let iv = constraint_interval(&d, lim, p, cfg.v_dc_ref, ctrl.v_floor)?;
            q_star = project(s0.q_ref, &iv, iv.q_mm);
        }
        let i = current_reference(p_star, q_star, s0.v_g, lim.i_g_max, ctrl.v_floor)?;
        p_star = (base + p.r_g * i.norm_squared()).clamp(-lim.p_g_max, lim.p_g_max);
    }
    let i_g = current_reference(p_star, q_star, s0.v_g, lim.i_g_max, ctrl.v_floor)?;
    ctrl.preset_steady(tau);
    ctrl.x_dc = -(p_star - tau * s0.w_ref) / (ctrl.dc.ki * cfg.v_dc_ref);
    let m_raw = (s0.v_g - p.apply_impedance(i_g)) * (1.0 / cfg.v_dc_ref);
    Ok(Initial { state: PlantState { w: s0.w_ref, v_dc: cfg.v_dc_ref, i_g }, ctrl, q_star, m_raw_norm: m_raw.norm() })
}

/// Runs the configured scenario.
pub fn simulate(cfg: &SimConfig) -> Result<RunOutput, SimError> {
    simulate_with(cfg, None)
}

/// Runs the configured scenario, optionally overriding `Q_star`.
pub fn simulate_with(cfg: &SimConfig, q_override: Option<QOverride<'_>>) -> Result<RunOutput, SimError> {
    let mut trace = Vec::with_capacity(cfg.n_ticks() as usize + 1);
    match run_loop(cfg, q_override, &mut |r| trace.push(*r)) {
        Ok(mut out) => {
            out.trace = trace;
            Ok(out)
        }
        Err(SimError::Diverged { tick, source, mut partial }) => {
            partial.trace = trace;
            Err(SimError::Diverged { tick, source, partial })
        }
        Err(e) => Err(e),
    }
}

/// Runs the configured scenario handing each trace row to `sink` instead of
/// storing it; the returned output has an empty trace.
pub fn simulate_streaming(cfg: &SimConfig, sink: &mut dyn FnMut(&TraceRow)) -> Result<RunOutput, SimError> {
    run_loop(cfg, None, sink)
}

fn run_loop(
    cfg: &SimConfig,
    q_override: Option<QOverride<'_>>,
    sink: &mut dyn FnMut(&TraceRow),
) -> Result<RunOutput, SimError> {
    let scen = build_scenario(&cfg.scenario, &cfg.limits);
    let mut sim = Simulation::new(cfg, &scen)?;
    let n_ticks = cfg.n_ticks();
    for n in 0..=n_ticks {
        match sim.tick(n, n == n_ticks, q_override) {
            Ok(row) => sink(&row),
            Err(source) => return Err(SimError::Diverged { tick: n, source, partial: Box::new(sim.out) }),
        }
        if sim.out.stopped {
            break;
        }
    }
    Ok(sim.out)
}

struct Simulation<'a> {
    cfg: &'a SimConfig,
    scen: &'a Scenario,
    state: PlantState,
    ctrl: ControlStack,
    af: AfState,
    ofo: Option<OfoState>,
    last_m_raw_norm: f64,
    last_residual: f64,
    motor_blocked: bool,
    rng: ChaCha8Rng,
    noise: Option<Normal<f64>>,
    steps_per_tick: u64,
    ticks_per_trigger: u64,
    out: RunOutput,
}

impl<'a> Simulation<'a> {
    fn new(cfg: &'a SimConfig, scen: &'a Scenario) -> Result<Self, SimError> {
        let s0 = scen.sample(0.0);
        let init = initial_condition(cfg, &s0)?;
        let ofo = (cfg.outer_mode == OuterMode::Ofo).then_some(OfoState {
            q_star: init.q_star,
            tick_count: 0,
            last_interval: None,
            triggered: false,
        });
        let noise = (cfg.noise.current_std > 0.0)
            .then(|| Normal::new(0.0, cfg.noise.current_std).expect("validated standard deviation"));
        Ok(Self {
            cfg,
            scen,
            state: init.state,
            ctrl: init.ctrl,
            af: AfState { q_star: init.q_star },
            ofo,
            last_m_raw_norm: init.m_raw_norm,
            last_residual: 0.0,
            motor_blocked: false,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            noise,
            steps_per_tick: cfg.plant_steps_per_tick(),
            ticks_per_trigger: cfg.ticks_per_trigger(),
            out: RunOutput::default(),
        })
    }

    /// Scenario time for control tick `n`, or for the enclosing trigger
    /// boundary under sample-and-hold.
    fn disturbance_time(&self, plant_step: u64) -> f64 {
        let dt = self.cfg.timing.dt_plant;
        if self.cfg.scenario.assumption3 {
            let per_trigger = self.steps_per_tick * self.ticks_per_trigger;
            (plant_step / per_trigger * per_trigger) as f64 * dt
        } else {
            plant_step as f64 * dt
        }
    }

    fn measured_current(&mut self) -> DqVector {
        let i = self.state.i_g;
        match self.noise {
            Some(n) => DqVector::new(i.d + n.sample(&mut self.rng), i.q + n.sample(&mut self.rng)),
            None => i,
        }
    }

    /// Runs control tick `n` and the plant steps that follow it; returns the
    /// trace row of the tick.
    fn tick(&mut self, n: u64, last: bool, q_override: Option<QOverride<'_>>) -> Result<TraceRow, drive_core::Error> {
        let cfg = self.cfg;
        let lim = &cfg.limits;
        let t_c = cfg.timing.t_c;
        let j0 = n * self.steps_per_tick;
        let s = self.scen.sample(self.disturbance_time(j0));
        self.ctrl.w_ref = s.w_ref;
        let i_meas = self.measured_current();
        let meas = Measurements { w: self.state.w, v_dc: self.state.v_dc, i_g: i_meas, v_g: s.v_g };

        // speed and DC-link loops
        let (tau_m, p_star) = if self.motor_blocked {
            let (p, x) =
                dc_pi_step(meas.v_dc, cfg.v_dc_ref, self.ctrl.x_dc, 0.0, s.w_ref, t_c, &self.ctrl.dc, lim.p_g_max);
            self.ctrl.x_dc = x;
            (0.0, p)
        } else {
            let c = self.ctrl.power_stage(&meas, t_c);
            (c.tau_m, c.p_star)
        };

        // outer loop
        let mut trigger = false;
        let q_star = if let Some(q) = q_override.and_then(|f| f(n)) {
            q
        } else {
            match cfg.outer_mode {
                OuterMode::None => s.q_ref,
                OuterMode::Af => {
                    self.out.counters.af_calls += 1;
                    let i_star = power_to_current(p_star, self.af.q_star, s.v_g, self.ctrl.v_floor)?;
                    let inp = AfInputs {
                        q_ref: s.q_ref,
                        i_star_norm: i_star.norm(),
                        m_raw_norm: self.last_m_raw_norm,
                        q_mm: q_min_modulation(s.v_g, &cfg.plant)?,
                    };
                    self.af = af_step(self.af, &inp, t_c, &cfg.af, lim.i_g_max);
                    self.af.q_star
                }
                OuterMode::Ofo => {
                    self.out.counters.ofo_calls += 1;
                    let st = self.ofo.expect("ofo state in ofo mode");
                    let d = DisturbanceSample { p_star, v_g: s.v_g };
                    let ctx = OfoContext {
                        limits: lim,
                        plant: &cfg.plant,
                        v_dc_ref: cfg.v_dc_ref,
                        v_floor: self.ctrl.v_floor,
                        cfg: &cfg.ofo,
                    };
                    let next = ofo_step(&st, &d, i_meas, s.q_ref, &ctx)?;
                    if next.triggered {
                        trigger = true;
                        self.out.counters.ofo_triggers += 1;
                        let iv = next.last_interval.expect("interval after trigger");
                        let (_, gamma) = step_size(s.v_g, &cfg.ofo)?;
                        let q_opt = optimal_q_analytic(&d, s.q_ref, gamma, &iv).unwrap_or(iv.lo);
                        self.out.triggers.push(TriggerSample {
                            k: n,
                            q_star: st.q_star,
                            q_opt,
                            v_norm: s.v_g.norm(),
                            inner_residual: if n == 0 { f64::NAN } else { self.last_residual },
                        });
                    }
                    self.ofo = Some(next);
                    next.q_star
                }
            }
        };

        // current reference and current loop
        let cc = self.ctrl.current_stage(&meas, p_star, q_star, t_c)?;
        self.last_m_raw_norm = cc.m_g_raw.norm();
        let residual = (self.state.i_g - cc.i_star).norm();
        if n == 0 {
            if let Some(first) = self.out.triggers.first_mut() {
                first.inner_residual = residual;
            }
        }
        self.last_residual = residual;

        // protection
        let band = cfg.protection.trip_band * cfg.v_dc_ref;
        if (self.state.v_dc - cfg.v_dc_ref).abs() > band && self.out.trip_time.is_none() {
            self.out.trip_time = Some(n as f64 * t_c);
            match cfg.protection.on_trip {
                TripAction::Continue => {}
                TripAction::BlockMotor => self.motor_blocked = true,
                TripAction::Stop => self.out.stopped = true,
            }
        }
        if self.state.w.abs() > cfg.protection.overspeed * lim.w_max {
            self.out.overspeed = true;
        }

        let (p_meas, q_meas) = instantaneous_power(s.v_g, self.state.i_g);
        let row = TraceRow {
            tick: n,
            t: n as f64 * t_c,
            w: self.state.w,
            w_ref: s.w_ref,
            v_dc: self.state.v_dc,
            tau_m,
            tau_l: s.tau_l,
            v_g_norm: s.v_g.norm(),
            m_norm: cc.m_g.norm(),
            m_raw_norm: cc.m_g_raw.norm(),
            m_limit: lim.m_lim,
            i_norm: self.state.i_g.norm(),
            i_star_norm: cc.i_star.norm(),
            i_star_raw_norm: cc.i_star_raw.norm(),
            i_g_max: lim.i_g_max,
            p_star,
            p_meas,
            q_meas,
            q_ref: s.q_ref,
            q_star,
            current_feasible: cc.i_star_raw.norm() <= lim.i_g_max,
            modulation_feasible: cc.m_g_raw.norm() <= lim.m_lim,
            ofo_trigger: trigger,
            tripped: self.out.trip_time.is_some(),
        };
        if last || self.out.stopped {
            return Ok(row);
        }

        // plant, with the commands held over the tick
        for j in j0..j0 + self.steps_per_tick {
            let d = self.scen.sample(self.disturbance_time(j));
            let u = PlantInputs { tau_m, m_g: cc.m_g, tau_l: d.tau_l, v_g: d.v_g };
            self.state = plant_step(&self.state, &u, &cfg.plant, cfg.timing.dt_plant, j)?;
            if self.state.v_dc < V_DC_FLOOR * cfg.v_dc_ref {
                return Err(drive_core::Error::SimulationDiverged { step: j, v_dc: self.state.v_dc });
            }
        }
        Ok(row)
    }
}

/// Runs `n_ticks` control ticks at the scenario's initial operating point
/// with all disturbances frozen, stepping `Q_star` by `dq` at tick
/// `step_tick`, and returns `‖i_g − i_g*‖` for every tick from the step on.
pub fn inner_step_response(cfg: &SimConfig, dq: f64, step_tick: u64, n_ticks: u64) -> Result<Vec<f64>, SimError> {
    let mut c = cfg.clone();
    c.outer_mode = OuterMode::None;
    c.noise.current_std = 0.0;
    c.scenario.kind = crate::scenario::ScenarioKind::Custom;
    let base = build_scenario(&cfg.scenario, &cfg.limits).sample(0.0);
    let lim = cfg.limits;
    c.scenario.custom = Some(crate::scenario::CustomProfiles {
        v_g_pu: crate::scenario::Profile::constant(base.v_g.norm() / lim.v_g_nom),
        tau_l_pu: crate::scenario::Profile::constant(base.tau_l / lim.tau_max),
        q_ref: crate::scenario::Profile::constant(base.q_ref),
        w_ref_pu: crate::scenario::Profile::constant(base.w_ref / lim.w_max),
    });
    c.scenario.duration = (step_tick + n_ticks) as f64 * c.timing.t_c;
    let scen = build_scenario(&c.scenario, &c.limits);
    let q0 = {
        let mut probe = c.clone();
        probe.outer_mode = cfg.outer_mode;
        initial_condition(&probe, &scen.sample(0.0))?.q_star
    };
    let schedule = move |n: u64| Some(if n < step_tick { q0 } else { q0 + dq });
    let mut sim = Simulation::new(&c, &scen)?;
    let mut response = Vec::with_capacity(n_ticks as usize);
    for n in 0..step_tick + n_ticks {
        if let Err(source) = sim.tick(n, false, Some(&schedule)) {
            return Err(SimError::Diverged { tick: n, source, partial: Box::new(sim.out) });
        }
        if n >= step_tick {
            response.push(sim.last_residual);
        }
    }
    Ok(response)
}
