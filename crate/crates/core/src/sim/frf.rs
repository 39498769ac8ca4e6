//! Frequency-response estimation from a chirp-current simulation.
//!
//! The clutch current follows the chirp continuously (no sample-and-hold, which
//! would add a half-period delay the analytical model does not have), the plant
//! is integrated without clamps, and the transfer is the H1 estimate
//! `S_xy / S_xx` from Welch-averaged Hann-windowed segments.

use num_complex::Complex64;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::plant::{step_plant, PlantState};
use super::signal::SignalSpec;
use crate::error::{Error, Result};
use crate::params::{ActuationLineParams, LoadImpedance};
use crate::tf::{Channel, FrequencyResponse};

/// Welch segment length, s (0.125 Hz resolution).
pub const FRF_SEGMENT_SECONDS: f64 = 8.0;
/// Fewest segments accepted for an estimate.
const MIN_SEGMENTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrfOptions {
    pub sample_rate: f64,
    pub substeps: usize,
    pub segment_seconds: f64,
}

impl Default for FrfOptions {
    fn default() -> Self {
        Self { sample_rate: 1500.0, substeps: 10, segment_seconds: FRF_SEGMENT_SECONDS }
    }
}

/// Sampled current, pressure and force of a chirp run.
#[derive(Debug, Clone, PartialEq)]
pub struct ChirpResponse {
    pub sample_rate: f64,
    pub current: Vec<f64>,
    pub pressure: Vec<f64>,
    pub force: Vec<f64>,
}

impl ChirpResponse {
    pub fn output(&self, c: Channel) -> &[f64] {
        match c {
            Channel::Force => &self.force,
            Channel::Pressure => &self.pressure,
        }
    }
}

/// The default chirp: 2.25 ± 1.25 A swept 0.1 → 100 Hz over 120 s.
pub fn default_frf_chirp() -> SignalSpec {
    SignalSpec::LogChirp { f0: 0.1, f1: 100.0, duration: 120.0, amplitude: 1.25, center: 2.25 }
}

/// Open-loop, clamp-free response of the line to a chirp current (in A).
pub fn simulate_chirp_response(
    p: &ActuationLineParams,
    z: &LoadImpedance,
    chirp: &SignalSpec,
    opts: &FrfOptions,
) -> Result<ChirpResponse> {
    p.validate()?;
    z.validate()?;
    chirp.validate()?;
    let SignalSpec::LogChirp { duration, center, .. } = *chirp else {
        return Err(Error::Estimation(format!("FRF excitation must be a log chirp, got {}", chirp.label())));
    };
    let dt = 1.0 / opts.sample_rate;
    let h = dt / opts.substeps as f64;
    let n = (duration * opts.sample_rate).round() as usize;
    // begin at the operating point of the chirp's mean current
    let mut state = PlantState::equilibrium(p.k_i * center, p, z).unwrap_or_default();
    let current_at = |t: f64| chirp.value(t);
    let mut out = ChirpResponse {
        sample_rate: opts.sample_rate,
        current: Vec::with_capacity(n + 1),
        pressure: Vec::with_capacity(n + 1),
        force: Vec::with_capacity(n + 1),
    };
    for k in 0..=n {
        let t = k as f64 * dt;
        if !state.is_finite() {
            return Err(Error::Divergence { time: t });
        }
        out.current.push(current_at(t));
        out.pressure.push(state.pressure(p));
        out.force.push(state.output_force(p));
        if k < n {
            for j in 0..opts.substeps {
                state = step_plant(&state, t + j as f64 * h, h, current_at, |_| 0.0, p, z, false);
            }
        }
    }
    Ok(out)
}

/// Estimated current-to-`channel` response on the band `[2·f0, f1/2]`.
pub fn estimate_frf(
    p: &ActuationLineParams,
    z: &LoadImpedance,
    chirp: &SignalSpec,
    channel: Channel,
) -> Result<FrequencyResponse> {
    estimate_frf_with(p, z, chirp, channel, &FrfOptions::default())
}

pub fn estimate_frf_with(
    p: &ActuationLineParams,
    z: &LoadImpedance,
    chirp: &SignalSpec,
    channel: Channel,
    opts: &FrfOptions,
) -> Result<FrequencyResponse> {
    let SignalSpec::LogChirp { f0, f1, duration, .. } = *chirp else {
        return Err(Error::Estimation(format!("FRF excitation must be a log chirp, got {}", chirp.label())));
    };
    check_duration(duration, opts.segment_seconds)?;
    let resp = simulate_chirp_response(p, z, chirp, opts)?;
    let seg = (opts.segment_seconds * opts.sample_rate).round() as usize;
    estimate_transfer(&resp.current, resp.output(channel), opts.sample_rate, seg, (2.0 * f0, f1 / 2.0))
}

fn check_duration(duration: f64, segment_seconds: f64) -> Result<()> {
    // 50% overlap: k segments need (k + 1)/2 segment lengths
    let needed = segment_seconds * (MIN_SEGMENTS as f64 + 1.0) / 2.0;
    if duration < needed {
        return Err(Error::Estimation(format!(
            "chirp of {duration} s is too short for {segment_seconds} s segments (need at least {needed} s)"
        )));
    }
    Ok(())
}

/// H1 transfer estimate `S_xy/S_xx` between two equally sampled records.
///
/// Hann-windowed segments of `seg_len` samples with 50% overlap, each with its
/// mean removed; bins outside `band` (Hz, inclusive) are dropped.
pub fn estimate_transfer(
    input: &[f64],
    output: &[f64],
    fs: f64,
    seg_len: usize,
    band: (f64, f64),
) -> Result<FrequencyResponse> {
    if input.len() != output.len() {
        return Err(Error::Estimation("input and output lengths differ".into()));
    }
    if seg_len < 8 {
        return Err(Error::Estimation(format!("segment of {seg_len} samples is too short")));
    }
    let hop = seg_len / 2;
    let segments = if input.len() >= seg_len { (input.len() - seg_len) / hop + 1 } else { 0 };
    if segments < MIN_SEGMENTS {
        return Err(Error::Estimation(format!(
            "{segments} segments of {seg_len} samples available, need at least {MIN_SEGMENTS}"
        )));
    }
    let window: Vec<f64> = (0..seg_len)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / seg_len as f64).cos())
        .collect();
    let fft = FftPlanner::new().plan_fft_forward(seg_len);
    let bins = seg_len / 2 + 1;
    let mut sxx = vec![0.0; bins];
    let mut sxy = vec![Complex64::new(0.0, 0.0); bins];

    let spectrum = |x: &[f64]| -> Vec<Complex<f64>> {
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let mut buf: Vec<Complex<f64>> = x.iter().zip(&window).map(|(v, w)| Complex::new((v - mean) * w, 0.0)).collect();
        fft.process(&mut buf);
        buf
    };
    for s in 0..segments {
        let r = s * hop..s * hop + seg_len;
        let x = spectrum(&input[r.clone()]);
        let y = spectrum(&output[r]);
        for k in 0..bins {
            sxx[k] += x[k].norm_sqr();
            let c = x[k].conj() * y[k];
            sxy[k] += Complex64::new(c.re, c.im);
        }
    }

    let mut freqs = Vec::new();
    let mut values = Vec::new();
    for k in 1..bins {
        let f = k as f64 * fs / seg_len as f64;
        if f < band.0 || f > band.1 || sxx[k] <= 0.0 {
            continue;
        }
        freqs.push(f);
        values.push(sxy[k] / sxx[k]);
    }
    if freqs.is_empty() {
        return Err(Error::Estimation(format!("no frequency bins inside [{}, {}] Hz", band.0, band.1)));
    }
    Ok(FrequencyResponse::new(freqs, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::plant::rk4_step;

    /// Chirp through `1/(τs + 1)` sampled at `fs`, integrated finely.
    fn first_order_record(tau: f64, duration: f64) -> (Vec<f64>, Vec<f64>) {
        let chirp = SignalSpec::LogChirp { f0: 0.1, f1: 100.0, duration, amplitude: 1.0, center: 0.0 };
        let fs = 1500.0;
        let sub = 10;
        let h = 1.0 / fs / sub as f64;
        let n = (duration * fs) as usize;
        let (mut u, mut y) = (Vec::new(), Vec::new());
        let mut state = [0.0];
        for k in 0..=n {
            let t = k as f64 / fs;
            u.push(chirp.value(t));
            y.push(state[0]);
            for j in 0..sub {
                state = rk4_step(state, t + j as f64 * h, h, |tt, s| [(chirp.value(tt) - s[0]) / tau]);
            }
        }
        (u, y)
    }

    #[test]
    fn recovers_first_order_filter() {
        let tau = 0.01;
        let (u, y) = first_order_record(tau, 120.0);
        let est = estimate_transfer(&u, &y, 1500.0, 12000, (0.5, 50.0)).unwrap();
        for (f, h) in est.iter() {
            let exact = Complex64::new(1.0, 2.0 * std::f64::consts::PI * f * tau).inv();
            let mag = (h.norm() / exact.norm() - 1.0).abs();
            let ph = (h.arg() - exact.arg()).to_degrees().abs();
            assert!(mag < 0.02 && ph < 2.0, "f={f}: mag err {mag}, phase err {ph}");
        }
    }

    #[test]
    fn short_records_are_rejected() {
        let x = vec![0.0; 100];
        assert!(matches!(estimate_transfer(&x, &x, 1500.0, 50, (1.0, 10.0)), Err(Error::Estimation(_))));
        assert!(estimate_transfer(&x, &x[..99], 1500.0, 10, (1.0, 10.0)).is_err());
        let p = ActuationLineParams::default();
        let short = SignalSpec::LogChirp { f0: 0.1, f1: 100.0, duration: 10.0, amplitude: 1.25, center: 2.25 };
        assert!(matches!(
            estimate_frf(&p, &LoadImpedance::Blocked, &short, Channel::Force),
            Err(Error::Estimation(_))
        ));
        let step = SignalSpec::Step { t0: 0.0, from: 0.0, to: 1.0 };
        assert!(estimate_frf(&p, &LoadImpedance::Blocked, &step, Channel::Force).is_err());
    }

    #[test]
    fn chirp_run_starts_at_operating_point() {
        let p = ActuationLineParams::default();
        let chirp = SignalSpec::LogChirp { f0: 1.0, f1: 10.0, duration: 0.01, amplitude: 1.25, center: 2.25 };
        let r = simulate_chirp_response(&p, &LoadImpedance::bench(), &chirp, &FrfOptions::default()).unwrap();
        assert_eq!(r.force.len(), 16);
        assert!((r.force[0] - p.k_i * 2.25).abs() < 1e-9);
        assert_eq!(r.current[0], 2.25);
    }
}
