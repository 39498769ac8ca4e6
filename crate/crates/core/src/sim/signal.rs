use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Reference (or excitation) signals.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SignalSpec {
    Step { t0: f64, from: f64, to: f64 },
    /// `center + amplitude·sin φ(t)` with an exponential frequency sweep from
    /// `f0` at `t = 0` to `f1` at `t = duration`.
    LogChirp { f0: f64, f1: f64, duration: f64, amplitude: f64, center: f64 },
    /// Step at `t0`, held until `chirp_start`, then a log chirp around `center`
    /// starting at its crest (`center + amplitude·cos φ`) so the reference
    /// stays continuous when `to = center + amplitude`.
    Mixed {
        t0: f64,
        from: f64,
        to: f64,
        chirp_start: f64,
        f0: f64,
        f1: f64,
        chirp_duration: f64,
        amplitude: f64,
        center: f64,
    },
    /// Constant reference while a force disturbance acts on the load.
    ConstantWithDisturbance { level: f64, disturbance: Disturbance },
}

impl SignalSpec {
    /// Step from 50 N to 250 N, then a 100 N chirp from 0.1 Hz to 6 Hz.
    pub fn mixed_default() -> Self {
        SignalSpec::Mixed {
            t0: 0.5,
            from: 50.0,
            to: 250.0,
            chirp_start: 1.0,
            f0: 0.1,
            f1: 6.0,
            chirp_duration: 20.0,
            amplitude: 100.0,
            center: 150.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SignalSpec::Step { t0, from, to } => {
                if !(t0 >= 0.0 && from.is_finite() && to.is_finite()) {
                    return Err(Error::Signal("step needs t0 >= 0 and finite levels".into()));
                }
            }
            SignalSpec::LogChirp { f0, f1, duration, .. } => check_chirp(f0, f1, duration)?,
            SignalSpec::Mixed { t0, chirp_start, f0, f1, chirp_duration, .. } => {
                check_chirp(f0, f1, chirp_duration)?;
                if !(t0 >= 0.0 && chirp_start >= t0) {
                    return Err(Error::Signal("mixed signal needs 0 <= t0 <= chirp_start".into()));
                }
            }
            SignalSpec::ConstantWithDisturbance { level, .. } => {
                if !level.is_finite() {
                    return Err(Error::Signal("level must be finite".into()));
                }
            }
        }
        Ok(())
    }

    /// Natural run length: end of the sweep, or a few seconds past the step.
    pub fn natural_duration(&self) -> f64 {
        match *self {
            SignalSpec::Step { t0, .. } => t0 + 2.0,
            SignalSpec::LogChirp { duration, .. } => duration,
            SignalSpec::Mixed { chirp_start, chirp_duration, .. } => chirp_start + chirp_duration,
            SignalSpec::ConstantWithDisturbance { .. } => 12.0,
        }
    }

    pub fn disturbance(&self) -> Option<&Disturbance> {
        match self {
            SignalSpec::ConstantWithDisturbance { disturbance, .. } => Some(disturbance),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SignalSpec::Step { .. } => "step",
            SignalSpec::LogChirp { .. } => "chirp",
            SignalSpec::Mixed { .. } => "mixed",
            SignalSpec::ConstantWithDisturbance { .. } => "drill",
        }
    }

    /// Reference value at `t` (clamped to `t ≥ 0`).
    pub fn value(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        match *self {
            SignalSpec::Step { t0, from, to } => {
                if t < t0 {
                    from
                } else {
                    to
                }
            }
            SignalSpec::LogChirp { f0, f1, duration, amplitude, center } => {
                center + amplitude * chirp_phase(f0, f1, duration, t).sin()
            }
            SignalSpec::Mixed { t0, from, to, chirp_start, f0, f1, chirp_duration, amplitude, center } => {
                if t < t0 {
                    from
                } else if t < chirp_start {
                    to
                } else {
                    center + amplitude * chirp_phase(f0, f1, chirp_duration, t - chirp_start).cos()
                }
            }
            SignalSpec::ConstantWithDisturbance { level, .. } => level,
        }
    }
}

/// Free-function form of [`SignalSpec::value`].
pub fn generate_signal(sig: &SignalSpec, t: f64) -> f64 {
    sig.value(t)
}

fn check_chirp(f0: f64, f1: f64, duration: f64) -> Result<()> {
    if !(f0 > 0.0) {
        return Err(Error::Signal(format!("log chirp needs f0 > 0, got {f0}")));
    }
    if !(f1 > f0) {
        return Err(Error::Signal(format!("log chirp needs f1 > f0, got {f1} <= {f0}")));
    }
    if !(duration > 0.0) {
        return Err(Error::Signal(format!("chirp duration must be > 0, got {duration}")));
    }
    Ok(())
}

/// `φ(t) = 2π·f0·T/ln(f1/f0)·((f1/f0)^(t/T) − 1)`; instantaneous frequency
/// `f0·(f1/f0)^(t/T)`.
pub fn chirp_phase(f0: f64, f1: f64, duration: f64, t: f64) -> f64 {
    let ratio = f1 / f0;
    2.0 * PI * f0 * duration / ratio.ln() * (ratio.powf(t / duration) - 1.0)
}

/// Seeded multisine force: `Σ a·sin(2π f_k t + φ_k)` with uniformly drawn phases.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Disturbance {
    pub seed: u64,
    pub freqs_hz: Vec<f64>,
    pub amplitude: f64,
    pub phases: Vec<f64>,
}

impl Disturbance {
    /// `components` equal-amplitude tones at `k·f_max/components`, k = 1..=components.
    pub fn multisine(seed: u64, components: usize, f_max: f64, amplitude: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let freqs_hz = (1..=components).map(|k| k as f64 * f_max / components as f64).collect();
        let phases = (0..components).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
        Self { seed, freqs_hz, amplitude, phases }
    }

    pub fn none() -> Self {
        Self { seed: 0, freqs_hz: Vec::new(), amplitude: 0.0, phases: Vec::new() }
    }

    pub fn scaled(&self, amplitude: f64) -> Self {
        Self { amplitude, ..self.clone() }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.amplitude
            * self
                .freqs_hz
                .iter()
                .zip(&self.phases)
                .map(|(f, ph)| (2.0 * PI * f * t + ph).sin())
                .sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_levels() {
        let s = SignalSpec::Step { t0: 1.0, from: 50.0, to: 250.0 };
        assert_eq!(s.value(0.5), 50.0);
        assert_eq!(s.value(1.5), 250.0);
        assert_eq!(generate_signal(&s, 1.0), 250.0);
    }

    #[test]
    fn chirp_starts_at_center() {
        let s = SignalSpec::LogChirp { f0: 0.1, f1: 100.0, duration: 10.0, amplitude: 1.25, center: 2.25 };
        assert_eq!(s.value(0.0), 2.25);
    }

    #[test]
    fn chirp_instantaneous_frequency_by_finite_difference() {
        let (f0, f1, t_end) = (0.1, 6.0, 20.0);
        let h = 1e-6;
        let at = |t: f64| (chirp_phase(f0, f1, t_end, t + h) - chirp_phase(f0, f1, t_end, t - h)) / (2.0 * h);
        assert!((at(t_end) / (2.0 * PI * f1) - 1.0).abs() < 1e-3);
        let start = (chirp_phase(f0, f1, t_end, h) - chirp_phase(f0, f1, t_end, 0.0)) / h;
        assert!((start / (2.0 * PI * f0) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn chirp_validation() {
        let bad = SignalSpec::LogChirp { f0: 0.0, f1: 6.0, duration: 1.0, amplitude: 1.0, center: 0.0 };
        assert!(bad.validate().is_err());
        let bad = SignalSpec::LogChirp { f0: 6.0, f1: 6.0, duration: 1.0, amplitude: 1.0, center: 0.0 };
        assert!(bad.validate().is_err());
        let bad = SignalSpec::LogChirp { f0: 1.0, f1: 6.0, duration: 0.0, amplitude: 1.0, center: 0.0 };
        assert!(bad.validate().is_err());
        SignalSpec::mixed_default().validate().unwrap();
    }

    #[test]
    fn mixed_reference_is_continuous_into_the_chirp() {
        let s = SignalSpec::mixed_default();
        assert_eq!(s.value(0.2), 50.0);
        assert_eq!(s.value(0.7), 250.0);
        assert!((s.value(1.0) - 250.0).abs() < 1e-12);
        assert!((s.value(1.0 + 1e-4) - 250.0).abs() < 1e-3);
        for k in 0..2000 {
            let v = s.value(1.0 + k as f64 * 0.01);
            assert!((50.0 - 1e-9..=250.0 + 1e-9).contains(&v));
        }
    }

    #[test]
    fn multisine_is_seeded() {
        let a = Disturbance::multisine(7, 32, 10.0, 1.0);
        let b = Disturbance::multisine(7, 32, 10.0, 1.0);
        let c = Disturbance::multisine(8, 32, 10.0, 1.0);
        assert_eq!(a, b);
        assert_ne!(a.phases, c.phases);
        assert_eq!(a.freqs_hz.len(), 32);
        assert_eq!(*a.freqs_hz.last().unwrap(), 10.0);
        assert_eq!(a.scaled(2.0).value(0.3), 2.0 * a.value(0.3));
        assert_eq!(Disturbance::none().value(1.0), 0.0);
    }
}
