//! Deterministic PI tuning on the analytical loop.
//!
//! Gains are searched on a fixed log grid in normalized units (loop gain per
//! unit of the plant's DC gain), so the same grid serves any `K_I`. A point
//! is feasible when the loop keeps 6 dB of gain margin, 45° of phase margin
//! and a stable closed loop; the feasible point with the widest −3 dB
//! tracking bandwidth wins, ties going to the first in grid order.

use serde::Serialize;

use crate::analysis::{bandwidth_3db, stability_margins, Bandwidth, Margins};
use crate::error::{Error, Result};
use crate::params::{ActuationLineParams, LoadImpedance};
use crate::tf::{log_grid, Channel, Polynomial, RationalTf};

/// Normalized proportional grid: 31 points over `[1e-2, 1e1]`.
pub const KP_GRID: (f64, f64, usize) = (1e-2, 1e1, 31);
/// Normalized integral grid: 41 points over `[1e-1, 1e3]` (1/s).
pub const KI_GRID: (f64, f64, usize) = (1e-1, 1e3, 41);

const MIN_GAIN_MARGIN_DB: f64 = 6.0;
const MIN_PHASE_MARGIN_DEG: f64 = 45.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PiTuning {
    pub channel: Channel,
    /// A/N
    pub kp: f64,
    /// A/(N·s)
    pub ki: f64,
    pub kp_normalized: f64,
    pub ki_normalized: f64,
    pub bandwidth: Bandwidth,
    pub margins: Margins,
    /// Largest feasible proportional gain on the grid, A/N.
    pub max_feasible_kp: f64,
    pub feasible_points: usize,
}

/// `(kp + ki/s)·H` for gains in A/N and A/(N·s).
pub fn loop_transfer(h: &RationalTf, kp: f64, ki: f64) -> Result<RationalTf> {
    let pi_num = Polynomial::new(vec![ki, kp]);
    RationalTf::new(&pi_num * h.num(), &Polynomial::new(vec![0.0, 1.0]) * h.den())
}

pub fn tune_pi(p: &ActuationLineParams, z: &LoadImpedance, channel: Channel) -> Result<PiTuning> {
    let h = channel.transfer(p, z)?;
    tune_pi_on(&h, channel)
}

/// Grid search on an arbitrary plant `H` with nonzero finite DC gain.
pub(crate) fn tune_pi_on(h: &RationalTf, channel: Channel) -> Result<PiTuning> {
    if let Some(pole) = h.poles()?.into_iter().find(|r| r.re >= 0.0) {
        return Err(Error::UnstableOpenLoop(pole.re));
    }
    let dc = h.dc_gain();
    if !(dc.is_finite() && dc != 0.0) {
        return Err(Error::Validation { name: "H", msg: format!("loop plant needs a finite nonzero DC gain, got {dc}") });
    }
    let kp_grid = log_grid(KP_GRID.0, KP_GRID.1, KP_GRID.2);
    let ki_grid = log_grid(KI_GRID.0, KI_GRID.1, KI_GRID.2);

    let mut best: Option<(f64, f64, f64, Bandwidth, Margins)> = None;
    let mut max_kp_n = f64::NEG_INFINITY;
    let mut feasible = 0;
    for &kp_n in &kp_grid {
        for &ki_n in &ki_grid {
            let l = loop_transfer(h, kp_n / dc, ki_n / dc)?;
            let margins = stability_margins(&l)?;
            if !margins.satisfies(MIN_GAIN_MARGIN_DB, MIN_PHASE_MARGIN_DEG) {
                continue;
            }
            if !l.closed_loop_characteristic(1.0).roots()?.iter().all(|r| r.re < 0.0) {
                continue;
            }
            let bw = bandwidth_3db(&l.unity_feedback()?)?;
            let score = match bw {
                Bandwidth::Hz(f) | Bandwidth::AtLeast(f) => f,
            };
            feasible += 1;
            max_kp_n = max_kp_n.max(kp_n);
            if best.as_ref().is_none_or(|b| score > b.0) {
                best = Some((score, kp_n, ki_n, bw, margins));
            }
        }
    }
    let (_, kp_n, ki_n, bandwidth, margins) = best.ok_or(Error::EmptyFeasibleSet)?;
    Ok(PiTuning {
        channel,
        kp: kp_n / dc,
        ki: ki_n / dc,
        kp_normalized: kp_n,
        ki_normalized: ki_n,
        bandwidth,
        margins,
        max_feasible_kp: max_kp_n / dc,
        feasible_points: feasible,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_order_plant_is_tunable() {
        let h = RationalTf::first_order_lag(0.01);
        let t = tune_pi_on(&h, Channel::Force).unwrap();
        assert!(t.feasible_points > 0);
        assert!(t.margins.satisfies(6.0, 45.0));
        let l = loop_transfer(&h, t.kp, t.ki).unwrap();
        assert!(stability_margins(&l).unwrap().satisfies(6.0, 45.0));
        // a first-order loop never loses phase past −180°: the largest grid gain is admissible
        assert_eq!(t.max_feasible_kp, 10.0);
    }

    #[test]
    fn gains_scale_with_plant_dc_gain() {
        let h = RationalTf::first_order_lag(0.01);
        let a = tune_pi_on(&h, Channel::Force).unwrap();
        let b = tune_pi_on(&h.scale(4.0), Channel::Force).unwrap();
        assert_eq!(a.kp_normalized, b.kp_normalized);
        assert_eq!(a.ki_normalized, b.ki_normalized);
        assert!((a.kp / b.kp - 4.0).abs() < 1e-12);
    }

    #[test]
    fn unstable_plant_rejected() {
        let h = RationalTf::new(Polynomial::one(), Polynomial::new(vec![-1.0, 1.0])).unwrap();
        assert!(matches!(tune_pi_on(&h, Channel::Force), Err(Error::UnstableOpenLoop(_))));
    }

    #[test]
    fn loop_transfer_shape() {
        let h = RationalTf::first_order_lag(0.5);
        let l = loop_transfer(&h, 2.0, 3.0).unwrap();
        // (2s + 3)/(s(0.5s + 1)) at s = 1: 5/1.5
        let v = l.eval(num_complex::Complex64::new(1.0, 0.0)).unwrap();
        assert!((v.re - 5.0 / 1.5).abs() < 1e-12);
    }
}
