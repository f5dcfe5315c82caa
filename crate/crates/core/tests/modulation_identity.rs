mod common;

use common::{random_plant, random_v, rel, rng};
use drive_core::af::q_min_modulation;
use drive_core::control::{current_pi_step, current_reference, gains_from_bandwidth, modulation_norm_squared};
use drive_core::ofo::modulation_band;
use drive_core::Limits;
use rand::Rng;

const V_DC: f64 = 5000.0;

#[test]
fn closed_form_matches_constructed_modulation() {
    let lim = Limits::default();
    let mut r = rng(11);
    let g = gains_from_bandwidth(2000.0, 0.7, 1e-3).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let p = random_plant(&mut r);
        let v = random_v(&mut r, &lim);
        let pw = r.gen_range(-1.2..1.2) * lim.p_g_max;
        let q = r.gen_range(-1.5..1.5) * lim.q_g_max;
        let i = current_reference(pw, q, v, f64::INFINITY, 0.0).unwrap();
        // zero error and zero integrator leave only the feed-forward terms
        let out = current_pi_step(i, i, drive_core::DqVector::ZERO, v, 1e-4, &g, &p, V_DC, 10.0);
        let constructed = out.m_g_raw.norm_squared();
        let closed = modulation_norm_squared(pw, q, v, &p, V_DC).unwrap();
        worst = worst.max(rel(constructed, closed));
    }
    assert!(worst < 1e-10, "worst relative error {worst:e}");
}

#[test]
fn least_modulation_point_is_stationary() {
    let lim = Limits::default();
    let mut r = rng(12);
    for _ in 0..1000 {
        let p = random_plant(&mut r);
        let v = random_v(&mut r, &lim);
        let pw = r.gen_range(-1.0..1.0) * lim.p_g_max;
        let q_mm = q_min_modulation(v, &p).unwrap();
        let h = 1.0;
        let f = |q: f64| modulation_norm_squared(pw, q, v, &p, V_DC).unwrap();
        let fd = (f(q_mm + h) - f(q_mm - h)) / (2.0 * h);
        assert!(fd.abs() < 1e-9, "derivative {fd:e} at Q_mm = {q_mm}");
    }
}

#[test]
fn band_endpoints_sit_on_the_limit() {
    let lim = Limits::default();
    let mut r = rng(13);
    let mut checked = 0;
    for _ in 0..1000 {
        let p = random_plant(&mut r);
        let v = random_v(&mut r, &lim);
        let pw = r.gen_range(-1.0..1.0) * lim.p_g_max;
        let Some(b) = modulation_band(pw, v, &p, V_DC, lim.m_lim) else { continue };
        for q in [b.lo, b.hi] {
            let m2 = modulation_norm_squared(pw, q, v, &p, V_DC).unwrap();
            assert!(rel(m2, lim.m_lim * lim.m_lim) < 1e-9, "{m2} at {q}");
        }
        checked += 1;
    }
    assert!(checked > 500);
}
