use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use super::run::SimResult;
use crate::error::{Error, Result};

/// Frequency splitting the oscillation index into low and high bands, Hz.
pub const OSCILLATION_SPLIT_HZ: f64 = 15.0;
/// Length of the post-step window used for the oscillation index, s.
pub const OSCILLATION_WINDOW: f64 = 0.5;
/// Smallest reference jump accepted as a step, relative to the reference range.
const STEP_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub rise_time_10_90: f64,
    pub rms_tracking_error: f64,
    /// Peak excursion past the final level, as a fraction of the step.
    pub overshoot: f64,
    pub oscillation_index: f64,
}

/// Reference step located inside a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Step {
    /// Index of the first sample at the new level.
    pub index: usize,
    pub time: f64,
    pub from: f64,
    pub to: f64,
}

/// Largest single-sample jump of the reference inside `[t0, t1]`.
pub fn detect_step(r: &SimResult, window: (f64, f64)) -> Result<Step> {
    let idx = window_indices(r, window)?;
    let refs: Vec<f64> = idx.clone().map(|i| r.samples[i].reference).collect();
    let lo = refs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = refs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut best: Option<(usize, f64)> = None;
    for i in idx.start.max(1)..idx.end {
        let jump = (r.samples[i].reference - r.samples[i - 1].reference).abs();
        if best.is_none_or(|(_, b)| jump > b) {
            best = Some((i, jump));
        }
    }
    match best {
        Some((i, jump)) if jump > 0.0 && jump >= STEP_FRACTION * (hi - lo) => Ok(Step {
            index: i,
            time: r.samples[i].t,
            from: r.samples[i - 1].reference,
            to: r.samples[i].reference,
        }),
        _ => Err(Error::Metrics("no step found in the window".into())),
    }
}

/// Rise time, tracking error, overshoot and oscillation index of the output
/// force over `window = (t0, t1)`.
pub fn measure_metrics(r: &SimResult, window: (f64, f64)) -> Result<Metrics> {
    let idx = window_indices(r, window)?;
    let step = detect_step(r, window)?;
    let s = &r.samples;
    let sign = (step.to - step.from).signum();
    let amp = (step.to - step.from).abs();
    // work in "rising" coordinates
    let y = |i: usize| sign * (s[i].force - step.from);

    let crossing = |level: f64| -> Option<f64> {
        (step.index..idx.end).find(|&i| y(i) >= level).map(|i| {
            if i == step.index || y(i - 1) >= level {
                s[i].t
            } else {
                let (a, b) = (y(i - 1), y(i));
                s[i - 1].t + (level - a) / (b - a) * (s[i].t - s[i - 1].t)
            }
        })
    };
    let t10 = crossing(0.1 * amp).ok_or_else(|| Error::Metrics("output never reaches 10% of the step".into()))?;
    let t90 = crossing(0.9 * amp).ok_or_else(|| Error::Metrics("output never reaches 90% of the step".into()))?;

    // the plateau lasts while the reference holds its new level
    let plateau_end = (step.index..idx.end).find(|&i| s[i].reference != step.to).unwrap_or(idx.end);
    let peak = (step.index..plateau_end).map(y).fold(f64::NEG_INFINITY, f64::max);
    let overshoot = ((peak - amp) / amp).max(0.0);

    let rms = rms_error(r, window)?;
    let osc_end = (step.time + OSCILLATION_WINDOW).min(window.1);
    let force: Vec<f64> =
        s[step.index..idx.end].iter().take_while(|x| x.t <= osc_end).map(|x| x.force).collect();
    let oscillation_index = oscillation_index(&force, r.sample_rate())?;

    Ok(Metrics { rise_time_10_90: (t90 - t10).max(0.0), rms_tracking_error: rms, overshoot, oscillation_index })
}

/// RMS of `force − reference` over the window.
pub fn rms_error(r: &SimResult, window: (f64, f64)) -> Result<f64> {
    let idx = window_indices(r, window)?;
    let n = idx.len() as f64;
    let ss: f64 = r.samples[idx].iter().map(|s| (s.force - s.reference).powi(2)).sum();
    Ok((ss / n).sqrt())
}

/// Largest `|force − level|` over the window.
pub fn peak_deviation(r: &SimResult, level: f64, window: (f64, f64)) -> Result<f64> {
    let idx = window_indices(r, window)?;
    Ok(r.samples[idx].iter().map(|s| (s.force - level).abs()).fold(0.0, f64::max))
}

/// Share of spectral energy above [`OSCILLATION_SPLIT_HZ`].
///
/// The straight line joining the first and last samples is subtracted first,
/// so the step's own transition ramp does not leak into the high band as a
/// periodic-extension discontinuity.
pub fn oscillation_index(y: &[f64], fs: f64) -> Result<f64> {
    let n = y.len();
    if n < 4 {
        return Err(Error::Metrics(format!("oscillation window too short ({n} samples)")));
    }
    let (a, b) = (y[0], y[n - 1]);
    let mut buf: Vec<Complex<f64>> = y
        .iter()
        .enumerate()
        .map(|(i, v)| Complex::new(v - (a + (b - a) * i as f64 / (n - 1) as f64), 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let (mut high, mut total) = (0.0, 0.0);
    for (k, c) in buf.iter().enumerate().take(n / 2 + 1) {
        let f = k as f64 * fs / n as f64;
        let e = c.norm_sqr();
        total += e;
        if f > OSCILLATION_SPLIT_HZ {
            high += e;
        }
    }
    Ok(if total > 0.0 { high / total } else { 0.0 })
}

fn window_indices(r: &SimResult, (t0, t1): (f64, f64)) -> Result<std::ops::Range<usize>> {
    if !(t1 >= t0) {
        return Err(Error::Metrics(format!("window [{t0}, {t1}] is empty")));
    }
    let start = r.samples.partition_point(|s| s.t < t0);
    let end = r.samples.partition_point(|s| s.t <= t1);
    if end <= start {
        return Err(Error::Metrics(format!("window [{t0}, {t1}] holds no samples")));
    }
    Ok(start..end)
}
