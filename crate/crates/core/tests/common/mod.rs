#![allow(dead_code)]

use drive_core::ofo::{constraint_interval, DisturbanceSample, FeasibleInterval};
use drive_core::{DqVector, Limits, PlantParams};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

pub fn random_v(r: &mut ChaCha8Rng, lim: &Limits) -> DqVector {
    let mag = r.gen_range(0.5..1.15) * lim.v_g_nom;
    let ang: f64 = r.gen_range(-3.0..3.0);
    DqVector::new(mag * ang.cos(), mag * ang.sin())
}

/// Plant with the impedance scaled by a random factor.
pub fn random_plant(r: &mut ChaCha8Rng) -> PlantParams {
    let base = PlantParams::default();
    PlantParams { l_g: base.l_g * r.gen_range(0.3..2.0), r_g: base.r_g * r.gen_range(0.3..3.0), ..base }
}

/// A feasible optimization instance at the default limits.
pub struct Instance {
    pub d: DisturbanceSample,
    pub plant: PlantParams,
    pub q_ref: f64,
    pub interval: FeasibleInterval,
}

pub fn feasible_instances(seed: u64, n: usize) -> Vec<Instance> {
    let lim = Limits::default();
    let mut r = rng(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let plant = random_plant(&mut r);
        let v_g = random_v(&mut r, &lim);
        let p_star = r.gen_range(-0.9..0.9) * lim.p_g_max;
        let d = DisturbanceSample { p_star, v_g };
        let Ok(interval) = constraint_interval(&d, &lim, &plant, 5000.0, 0.0) else { continue };
        if !interval.is_feasible() || interval.width() <= 0.0 {
            continue;
        }
        let q_ref = r.gen_range(-1.5..1.5) * lim.q_g_max;
        out.push(Instance { d, plant, q_ref, interval });
    }
    out
}
