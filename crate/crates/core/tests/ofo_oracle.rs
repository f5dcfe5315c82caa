mod common;

use std::time::Instant;

use common::{feasible_instances, random_v, rel, rng};
use drive_core::ofo::{
    composite_gradient, cost, ofo_step, sensitivity, steady_state_current, step_size, DisturbanceSample, OfoConfig,
    OfoContext, OfoState,
};
use drive_core::oracle::{optimal_q_analytic, optimal_q_bruteforce};
use drive_core::Limits;
use rand::Rng;

#[test]
fn composite_gradient_matches_finite_differences() {
    let lim = Limits::default();
    let cfg = OfoConfig::default();
    let mut r = rng(21);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let v_g = random_v(&mut r, &lim);
        let d = DisturbanceSample { p_star: r.gen_range(-1.0..1.0) * lim.p_g_max, v_g };
        let q = r.gen_range(-1.5..1.5) * lim.q_g_max;
        let q_ref = r.gen_range(-1.5..1.5) * lim.q_g_max;
        let (_, gamma) = step_size(v_g, &cfg).unwrap();
        let i = steady_state_current(q, &d).unwrap();
        let g = composite_gradient(q, i, q_ref, v_g, gamma).unwrap();
        let h = 10.0;
        let fd = (cost(q + h, &d, q_ref, gamma).unwrap() - cost(q - h, &d, q_ref, gamma).unwrap()) / (2.0 * h);
        // scale by the size of the two terms so a vanishing gradient does not
        // turn rounding into a large relative error
        let scale = (gamma * (q - q_ref)).abs() + q.abs() / v_g.norm_squared();
        worst = worst.max((g - fd).abs() / scale);
    }
    assert!(worst < 1e-8, "worst relative error {worst:e}");
}

#[test]
fn steady_map_is_lipschitz_with_inverse_voltage() {
    let lim = Limits::default();
    let mut r = rng(22);
    for _ in 0..1000 {
        let v_g = random_v(&mut r, &lim);
        let d = DisturbanceSample { p_star: r.gen_range(-1.0..1.0) * lim.p_g_max, v_g };
        let (q1, q2) = (r.gen_range(-3e6..3e6), r.gen_range(-3e6..3e6));
        let di = steady_state_current(q1, &d).unwrap() - steady_state_current(q2, &d).unwrap();
        assert!(rel(di.norm(), (q1 - q2).abs() / v_g.norm()) < 1e-9);
        assert!(rel(sensitivity(v_g).norm(), 1.0 / v_g.norm()) < 1e-12);
    }
}

#[test]
fn analytic_optimum_matches_bruteforce() {
    let cfg = OfoConfig::default();
    for inst in feasible_instances(23, 1000) {
        let (_, gamma) = step_size(inst.d.v_g, &cfg).unwrap();
        let a = optimal_q_analytic(&inst.d, inst.q_ref, gamma, &inst.interval).unwrap();
        let b = optimal_q_bruteforce(&inst.d, inst.q_ref, gamma, &inst.interval, 2001).unwrap();
        let tol = 1e-4 * inst.interval.width();
        assert!((a - b).abs() <= tol, "analytic {a} brute force {b} width {}", inst.interval.width());
    }
}

/// Iterates `ofo_step` with the plant replaced by its steady-state map.
fn fixed_point(inst: &common::Instance, cfg: &OfoConfig, lim: &Limits, ticks: usize) -> f64 {
    let ctx = OfoContext { limits: lim, plant: &inst.plant, v_dc_ref: 5000.0, v_floor: 0.0, cfg };
    let mut st = OfoState::new(inst.q_ref, &inst.interval);
    for _ in 0..ticks {
        let i = steady_state_current(st.q_star, &inst.d).unwrap();
        st = ofo_step(&st, &inst.d, i, inst.q_ref, &ctx).unwrap();
    }
    st.q_star
}

#[test]
fn projected_gradient_fixed_point_matches_analytic_optimum() {
    let start = Instant::now();
    let lim = Limits::default();
    let cfg = OfoConfig::default();
    let instances = feasible_instances(24, 1000);
    for inst in &instances {
        let (_, gamma) = step_size(inst.d.v_g, &cfg).unwrap();
        let q_opt = optimal_q_analytic(&inst.d, inst.q_ref, gamma, &inst.interval).unwrap();
        let q = fixed_point(inst, &cfg, &lim, 4 * 400);
        let tol = 1e-6 * lim.i_g_max * inst.d.v_g.norm();
        assert!((q - q_opt).abs() <= tol, "fixed point {q} optimum {q_opt}");
    }
    assert!(start.elapsed().as_secs_f64() < 10.0, "took {:?}", start.elapsed());
}

#[test]
fn unconstrained_error_contracts_by_epsilon() {
    let lim = Limits { i_g_max: 1e9, m_lim: std::f64::consts::FRAC_1_SQRT_2, ..Limits::default() };
    let cfg = OfoConfig::default();
    let eps = cfg.epsilon();
    assert!((eps - 0.919_68).abs() < 1e-5);
    let plant = drive_core::PlantParams::default();
    let d = DisturbanceSample { p_star: 1e6, v_g: drive_core::DqVector::new(3150.0, 0.0) };
    let interval = drive_core::ofo::constraint_interval(&d, &lim, &plant, 5000.0, 0.0).unwrap();
    let (_, gamma) = step_size(d.v_g, &cfg).unwrap();
    let q_ref = 2e5;
    let q_opt = optimal_q_analytic(&d, q_ref, gamma, &interval).unwrap();
    assert!(interval.lo < q_opt && q_opt < interval.hi);
    let ctx = OfoContext { limits: &lim, plant: &plant, v_dc_ref: 5000.0, v_floor: 0.0, cfg: &cfg };
    let mut st = OfoState::new(q_ref, &interval);
    let mut prev = (st.q_star - q_opt).abs();
    for _ in 0..20 {
        for _ in 0..4 {
            let i = steady_state_current(st.q_star, &d).unwrap();
            st = ofo_step(&st, &d, i, q_ref, &ctx).unwrap();
        }
        let psi = (st.q_star - q_opt).abs();
        assert!(rel(psi / prev, eps) < 1e-6, "ratio {}", psi / prev);
        prev = psi;
    }
}
