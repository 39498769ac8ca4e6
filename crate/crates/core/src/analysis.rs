//! Frequency-domain analysis on [`RationalTf`]: Bode tables, −3 dB bandwidth,
//! classical stability margins, root locus and the largest stabilizing
//! proportional gain.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::tf::{log_grid, RationalTf};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BodeRow {
    pub freq_hz: f64,
    /// Magnitude in dB relative to the DC gain.
    pub mag_db: f64,
    /// Unwrapped phase, degrees.
    pub phase_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BodeTable {
    pub rows: Vec<BodeRow>,
}

/// Bode data on `n` log-spaced points in `[f_lo, f_hi]`.
///
/// Magnitudes are relative to `|G(0)|`; when the DC gain is zero or infinite the
/// absolute magnitude is reported instead. The phase starts in (−180°, 180°] at
/// `f_lo` and is unwrapped upward.
pub fn bode(g: &RationalTf, f_lo: f64, f_hi: f64, n: usize) -> Result<BodeTable> {
    if !(f_lo > 0.0 && f_hi > f_lo) || n < 2 {
        return Err(Error::Validation { name: "bode", msg: format!("need 0 < f_lo < f_hi and n >= 2 (got {f_lo}, {f_hi}, {n})") });
    }
    let dc = g.dc_gain().abs();
    let reference = if dc.is_finite() && dc > 0.0 { dc } else { 1.0 };
    let freqs = log_grid(f_lo, f_hi, n);
    let mut rows = Vec::with_capacity(n);
    let mut prev: Option<f64> = None;
    for f in freqs {
        let h = g.eval_jw(f)?;
        let phase = unwrap_next(prev, h.arg().to_degrees());
        prev = Some(phase);
        rows.push(BodeRow { freq_hz: f, mag_db: 20.0 * (h.norm() / reference).log10(), phase_deg: phase });
    }
    Ok(BodeTable { rows })
}

/// Shifts `raw` by whole turns so it lies within 180° of `prev`.
fn unwrap_next(prev: Option<f64>, raw: f64) -> f64 {
    match prev {
        None => {
            if raw <= -180.0 {
                raw + 360.0
            } else {
                raw
            }
        }
        Some(p) => raw + 360.0 * ((p - raw) / 360.0).round(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Bandwidth {
    Hz(f64),
    /// No −3 dB crossing up to the given frequency.
    AtLeast(f64),
}

impl Bandwidth {
    pub fn hz(&self) -> Option<f64> {
        match self {
            Bandwidth::Hz(f) => Some(*f),
            Bandwidth::AtLeast(_) => None,
        }
    }
}

impl std::fmt::Display for Bandwidth {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Bandwidth::Hz(v) => write!(f, "{v:.4} Hz"),
            Bandwidth::AtLeast(v) => write!(f, ">= {v} Hz"),
        }
    }
}

pub const BANDWIDTH_SWEEP_LO: f64 = 0.01;
pub const BANDWIDTH_SWEEP_HI: f64 = 1000.0;
pub const BANDWIDTH_SWEEP_POINTS: usize = 2000;
pub const BANDWIDTH_TOLERANCE_HZ: f64 = 1e-4;

/// Lowest frequency where `|G|` first drops below `|G(0)|/√2`.
///
/// A coarse log sweep brackets the first crossing, bisection refines it.
/// Resonant peaks above the DC level do not end the search.
pub fn bandwidth_3db(g: &RationalTf) -> Result<Bandwidth> {
    let dc = g.dc_gain().abs();
    if !(dc.is_finite() && dc > 0.0) {
        return Err(Error::Validation { name: "bandwidth", msg: format!("DC gain must be finite and nonzero, got {dc}") });
    }
    let level = dc * FRAC_1_SQRT_2;
    let below = |f: f64| -> Result<bool> { Ok(g.eval_jw(f)?.norm() < level) };

    let grid = log_grid(BANDWIDTH_SWEEP_LO, BANDWIDTH_SWEEP_HI, BANDWIDTH_SWEEP_POINTS);
    let mut lo = 0.0;
    let mut hi = None;
    for &f in &grid {
        if below(f)? {
            hi = Some(f);
            break;
        }
        lo = f;
    }
    let Some(mut hi) = hi else {
        return Ok(Bandwidth::AtLeast(BANDWIDTH_SWEEP_HI));
    };
    while hi - lo > BANDWIDTH_TOLERANCE_HZ {
        let mid = 0.5 * (lo + hi);
        if below(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Bandwidth::Hz(0.5 * (lo + hi)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocusPoint {
    pub gain: f64,
    pub poles: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootLocusTrace {
    pub points: Vec<LocusPoint>,
    /// Set when the trace stopped early.
    pub error: Option<String>,
}

impl RootLocusTrace {
    pub fn max_real_part(&self) -> f64 {
        self.points
            .iter()
            .flat_map(|p| p.poles.iter().map(|z| z.0))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Closed-loop poles of unity feedback around `k·G` for each gain, with poles
/// ordered by continuity along the trace.
pub fn root_locus(g: &RationalTf, gains: &[f64]) -> Result<RootLocusTrace> {
    if gains.iter().any(|&k| !(k > 0.0)) || gains.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Validation { name: "gains", msg: "gains must be positive and strictly increasing".into() });
    }
    let mut points: Vec<LocusPoint> = Vec::with_capacity(gains.len());
    let mut prev: Option<Vec<Complex64>> = None;
    for &k in gains {
        let roots = match g.closed_loop_characteristic(k).roots() {
            Ok(r) => r,
            Err(e) => return Ok(RootLocusTrace { points, error: Some(format!("gain {k}: {e}")) }),
        };
        let ordered = match &prev {
            Some(p) if p.len() == roots.len() => match_nearest(p, roots),
            _ => roots,
        };
        points.push(LocusPoint { gain: k, poles: ordered.iter().map(|z| (z.re, z.im)).collect() });
        prev = Some(ordered);
    }
    Ok(RootLocusTrace { points, error: None })
}

/// Greedy nearest-neighbour assignment of `next` onto the slots of `prev`.
fn match_nearest(prev: &[Complex64], next: Vec<Complex64>) -> Vec<Complex64> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(prev.len() * next.len());
    for (i, a) in prev.iter().enumerate() {
        for (j, b) in next.iter().enumerate() {
            pairs.push(((a - b).norm(), i, j));
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut out = vec![None; prev.len()];
    let mut taken = vec![false; next.len()];
    for (_, i, j) in pairs {
        if out[i].is_none() && !taken[j] {
            out[i] = Some(next[j]);
            taken[j] = true;
        }
    }
    out.into_iter().map(|z| z.expect("square assignment")).collect()
}

/// 200 log-spaced gains over `[1e-3·k*, 10·k*]`, or `[1e-3, 1e3]` when no
/// finite limit exists.
pub fn default_locus_gains(limit: StableGain) -> Vec<f64> {
    match limit {
        StableGain::Bounded(k) => log_grid(1e-3 * k, 10.0 * k, 200),
        StableGain::Unbounded => log_grid(1e-3, 1e3, 200),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum StableGain {
    Bounded(f64),
    Unbounded,
}

impl StableGain {
    pub fn value(&self) -> Option<f64> {
        match self {
            StableGain::Bounded(k) => Some(*k),
            StableGain::Unbounded => None,
        }
    }
}

impl std::fmt::Display for StableGain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StableGain::Bounded(k) => write!(f, "{k:.6}"),
            StableGain::Unbounded => write!(f, "unbounded"),
        }
    }
}

pub const GAIN_SEARCH_LO: f64 = 1e-6;
pub const GAIN_SEARCH_HI: f64 = 1e6;
const GAIN_REL_TOL: f64 = 1e-7;

/// True when every root of `den + k·num` lies strictly in the left half-plane.
pub fn closed_loop_stable(g: &RationalTf, k: f64) -> Result<bool> {
    Ok(g.closed_loop_characteristic(k).roots()?.iter().all(|r| r.re < 0.0))
}

/// Supremum of the proportional gains that keep unity feedback around `k·G`
/// stable, searched over `[1e-6, 1e6]`.
pub fn max_stable_gain(g: &RationalTf) -> Result<StableGain> {
    if !g.is_proper() {
        return Err(Error::Validation { name: "G", msg: "transfer function must be proper".into() });
    }
    if let Some(p) = g.poles()?.into_iter().find(|p| p.re >= 0.0) {
        return Err(Error::UnstableOpenLoop(p.re));
    }
    // sweep 10 points per decade for the first unstable gain, then bisect
    let sweep = log_grid(GAIN_SEARCH_LO, GAIN_SEARCH_HI, 121);
    let mut lo = 0.0;
    let mut hi = None;
    for &k in &sweep {
        if closed_loop_stable(g, k)? {
            lo = k;
        } else {
            hi = Some(k);
            break;
        }
    }
    let Some(mut hi) = hi else {
        return Ok(StableGain::Unbounded);
    };
    while hi - lo > GAIN_REL_TOL * hi {
        let mid = if lo > 0.0 { (lo * hi).sqrt() } else { 0.5 * hi };
        if closed_loop_stable(g, mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(StableGain::Bounded(lo))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Margins {
    /// `None` when the phase never crosses −180°.
    pub gain_margin_db: Option<f64>,
    pub phase_crossover_hz: Option<f64>,
    /// `None` when `|L|` never crosses 1.
    pub phase_margin_deg: Option<f64>,
    pub gain_crossover_hz: Option<f64>,
}

impl Margins {
    /// Infinite margins count as satisfying any bound.
    pub fn satisfies(&self, min_gain_db: f64, min_phase_deg: f64) -> bool {
        self.gain_margin_db.is_none_or(|g| g >= min_gain_db) && self.phase_margin_deg.is_none_or(|p| p >= min_phase_deg)
    }
}

pub const MARGIN_SWEEP_LO: f64 = 1e-3;
pub const MARGIN_SWEEP_HI: f64 = 1e4;
pub const MARGIN_POINTS_PER_DECADE: usize = 400;

/// Classical gain and phase margins of the loop transfer `L`, taking the most
/// restrictive crossing when there are several.
pub fn stability_margins(l: &RationalTf) -> Result<Margins> {
    let decades = (MARGIN_SWEEP_HI / MARGIN_SWEEP_LO).log10();
    let n = (decades * MARGIN_POINTS_PER_DECADE as f64).round() as usize + 1;
    let grid = log_grid(MARGIN_SWEEP_LO, MARGIN_SWEEP_HI, n);
    let mut samples: Vec<(f64, f64, f64)> = Vec::with_capacity(n); // (f, |L|, unwrapped phase)
    let mut prev = None;
    for f in grid {
        let Ok(h) = l.eval_jw(f) else { continue };
        let ph = unwrap_next(prev, h.arg().to_degrees());
        prev = Some(ph);
        samples.push((f, h.norm(), ph));
    }

    let mut margins = Margins { gain_margin_db: None, phase_crossover_hz: None, phase_margin_deg: None, gain_crossover_hz: None };
    for w in samples.windows(2) {
        let (f0, m0, p0) = w[0];
        let (f1, m1, p1) = w[1];
        // phase crossing of -180 + 360·j
        let j0 = ((p0 + 180.0) / 360.0).floor();
        let j1 = ((p1 + 180.0) / 360.0).floor();
        if j0 != j1 {
            let target = 360.0 * j0.max(j1) - 180.0;
            let fc = refine(f0, f1, |f| Ok(phase_near(l, f, p0)? - target))?;
            let gm = -20.0 * l.eval_jw(fc)?.norm().log10();
            if margins.gain_margin_db.is_none_or(|g| gm < g) {
                margins.gain_margin_db = Some(gm);
                margins.phase_crossover_hz = Some(fc);
            }
        }
        if (m0 - 1.0) * (m1 - 1.0) <= 0.0 && m0 != m1 {
            let fc = refine(f0, f1, |f| Ok(l.eval_jw(f)?.norm().ln()))?;
            let ph = phase_near(l, fc, p0)?;
            let pm = wrap180(180.0 + ph);
            if margins.phase_margin_deg.is_none_or(|p| pm < p) {
                margins.phase_margin_deg = Some(pm);
                margins.gain_crossover_hz = Some(fc);
            }
        }
    }
    Ok(margins)
}

fn phase_near(l: &RationalTf, f: f64, reference: f64) -> Result<f64> {
    Ok(unwrap_next(Some(reference), l.eval_jw(f)?.arg().to_degrees()))
}

fn wrap180(x: f64) -> f64 {
    let y = x - 360.0 * ((x + 180.0) / 360.0).floor();
    if y == -180.0 { 180.0 } else { y }
}

/// Bisection (in log frequency) for a sign change of `h` inside `[a, b]`.
fn refine(mut a: f64, mut b: f64, h: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let mut ha = h(a)?;
    for _ in 0..60 {
        let m = (a * b).sqrt();
        let hm = h(m)?;
        if (hm <= 0.0) == (ha <= 0.0) {
            a = m;
            ha = hm;
        } else {
            b = m;
        }
        if b / a - 1.0 < 1e-12 {
            break;
        }
    }
    Ok((a * b).sqrt())
}
