//! Reactive power capability band versus active power.

use serde::Serialize;

use drive_core::ofo::{constraint_interval, DisturbanceSample, IntervalStatus};
use drive_core::{DqVector, Limits, PlantParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PqPoint {
    pub p: f64,
    /// Admissible band; `None` where both constraints cannot hold together.
    pub q_lo: Option<f64>,
    pub q_hi: Option<f64>,
    pub current_lo: Option<f64>,
    pub current_hi: Option<f64>,
    pub modulation_lo: Option<f64>,
    pub modulation_hi: Option<f64>,
    pub status: IntervalStatus,
}

/// Sweeps `P` uniformly over `[−P_max, P_max]` with `n_p ≥ 2` points.
pub fn pq_capability_map(
    lim: &Limits,
    p: &PlantParams,
    v_dc_ref: f64,
    v_g: DqVector,
    n_p: usize,
) -> Result<Vec<PqPoint>, drive_core::Error> {
    if n_p < 2 {
        return Err(drive_core::Error::InvalidArgument(format!("need at least 2 points, got {n_p}")));
    }
    let floor = 0.01 * lim.v_g_nom.min(v_g.norm());
    (0..n_p)
        .map(|k| {
            let pw = -lim.p_g_max + 2.0 * lim.p_g_max * k as f64 / (n_p - 1) as f64;
            let iv = constraint_interval(&DisturbanceSample { p_star: pw, v_g }, lim, p, v_dc_ref, floor)?;
            let ok = iv.is_feasible();
            Ok(PqPoint {
                p: pw,
                q_lo: ok.then_some(iv.lo),
                q_hi: ok.then_some(iv.hi),
                current_lo: iv.current.map(|b| b.lo),
                current_hi: iv.current.map(|b| b.hi),
                modulation_lo: iv.modulation.map(|b| b.lo),
                modulation_hi: iv.modulation.map(|b| b.hi),
                status: iv.status,
            })
        })
        .collect()
}

/// `(max over P of −Q_lo, max over P of Q_hi)` of the feasible points: the
/// widest capacitive and inductive reach.
pub fn band_extent(map: &[PqPoint]) -> (f64, f64) {
    let lo = map.iter().filter_map(|p| p.q_lo).map(|q| -q).fold(f64::NEG_INFINITY, f64::max);
    let hi = map.iter().filter_map(|p| p.q_hi).fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_current_circle_at_zero_power() {
        let lim = Limits::default();
        let p = PlantParams { l_g: 0.0, r_g: 0.0, ..PlantParams::default() };
        let v = DqVector::new(lim.v_g_nom, 0.0);
        let map = pq_capability_map(&lim, &p, 1e9, v, 3).unwrap();
        let mid = map[1];
        assert_eq!(mid.p, 0.0);
        let r = lim.v_g_nom * lim.i_g_max;
        assert!((mid.q_lo.unwrap() + r).abs() < 1e-9 * r);
        assert!((mid.q_hi.unwrap() - r).abs() < 1e-9 * r);
    }

    #[test]
    fn current_band_symmetric_in_p() {
        let lim = Limits::default();
        let v = DqVector::new(lim.v_g_nom, 0.0);
        let map = pq_capability_map(&lim, &PlantParams::default(), 5000.0, v, 41).unwrap();
        for k in 0..map.len() {
            let a = map[k];
            let b = map[map.len() - 1 - k];
            assert!((a.p + b.p).abs() < 1e-6);
            let (x, y) = (a.current_hi.unwrap(), b.current_hi.unwrap());
            assert!((x - y).abs() <= 1e-12 * x.abs());
        }
    }

    #[test]
    fn too_few_points() {
        let lim = Limits::default();
        let v = DqVector::new(lim.v_g_nom, 0.0);
        assert!(pq_capability_map(&lim, &PlantParams::default(), 5000.0, v, 1).is_err());
    }
}
