use serde::Serialize;

use super::controller::{ControlLaw, ControllerConfig, Measurement};
use super::plant::{step_plant, PlantState};
use super::signal::SignalSpec;
use crate::error::{Error, Result};
use crate::params::{ActuationLineParams, LoadImpedance};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimOptions {
    /// RK4 steps per controller period.
    pub substeps: usize,
    /// One-way clutch clamp on `F_MR`. Disabling it (together with
    /// [`ControllerConfig::unclamped`]) leaves a linear plant.
    pub clutch_clamp: bool,
    /// Start from the static equilibrium matching the reference at `t = 0`
    /// (PI integrators preloaded) instead of the rest state.
    pub start_at_equilibrium: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { substeps: 10, clutch_clamp: true, start_at_equilibrium: true }
    }
}

impl SimOptions {
    pub fn linear() -> Self {
        Self { clutch_clamp: false, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub reference: f64,
    /// Current command held over the following period, A.
    pub current: f64,
    pub f_mr: f64,
    /// `k1·(x1 − x2)`
    pub pressure: f64,
    /// `k2·(x2 − x3)`
    pub force: f64,
    pub disturbance: f64,
    pub state: PlantState,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimMetadata {
    /// FNV-1a over the parameter and load bit patterns.
    pub params_hash: String,
    pub controller: String,
    pub signal: String,
    pub integrator_step: f64,
    pub sample_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub samples: Vec<Sample>,
    pub metadata: SimMetadata,
}

impl SimResult {
    /// Wraps hand-made samples (metrics tests, replayed data).
    pub fn from_samples(samples: Vec<Sample>, sample_rate: f64) -> Self {
        let metadata = SimMetadata {
            params_hash: String::new(),
            controller: "external".into(),
            signal: "external".into(),
            integrator_step: 0.0,
            sample_rate,
        };
        Self { samples, metadata }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_rate(&self) -> f64 {
        self.metadata.sample_rate
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn forces(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.force).collect()
    }

    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }
}

/// Hash identifying a parameter set in run metadata.
pub fn params_hash(p: &ActuationLineParams, z: &LoadImpedance) -> String {
    let mut vals = vec![p.m1, p.b1, p.k1, p.m2, p.b2, p.k2, p.tau, p.k_i, p.a_master, p.a_slave, p.i_min, p.i_max];
    if let LoadImpedance::Compliant { m3, b3, k3 } = *z {
        vals.extend([m3, b3, k3]);
    }
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in vals {
        for byte in v.to_bits().to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    format!("{h:016x}")
}

/// Steady current that holds the line at the reference `r`.
fn steady_current(ctrl: &ControllerConfig, p: &ActuationLineParams, r: f64) -> f64 {
    let i = match ctrl.law {
        ControlLaw::OpenLoop { g1 } => g1 * r,
        ControlLaw::ForcePi { .. } => r / p.k_i,
        ControlLaw::PressurePi { g2, .. } => g2 * r / p.k_i,
    };
    i.clamp(ctrl.i_min, ctrl.i_max)
}

/// Runs `ctrl` against the line for `duration` seconds.
///
/// The controller runs at its sample rate and holds its current over each
/// period; the plant advances with `opts.substeps` RK4 steps per period. The
/// result holds `round(duration·fs) + 1` samples starting at `t = 0`.
pub fn run_simulation(
    p: &ActuationLineParams,
    z: &LoadImpedance,
    ctrl: &ControllerConfig,
    sig: &SignalSpec,
    duration: f64,
    opts: &SimOptions,
) -> Result<SimResult> {
    p.validate()?;
    z.validate()?;
    ctrl.validate()?;
    sig.validate()?;
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::Validation { name: "duration", msg: format!("must be > 0, got {duration}") });
    }
    if opts.substeps == 0 {
        return Err(Error::Validation { name: "substeps", msg: "must be >= 1".into() });
    }
    let fs = ctrl.sample_rate;
    let dt = 1.0 / fs;
    let h = dt / opts.substeps as f64;
    let n = (duration * fs).round() as usize;

    let mut controller = ctrl.instantiate();
    let mut state = PlantState::default();
    if opts.start_at_equilibrium {
        let i0 = steady_current(ctrl, p, sig.value(0.0));
        // no static equilibrium on a spring-less load: start at rest instead
        if let Ok(s) = PlantState::equilibrium(p.k_i * i0, p, z) {
            state = s;
            controller.initialize(i0);
        }
    }

    let disturbance = sig.disturbance();
    let f_dist = |t: f64| disturbance.map_or(0.0, |d| d.value(t));

    let mut samples = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = k as f64 / fs;
        if !state.is_finite() {
            return Err(Error::Divergence { time: t });
        }
        let reference = sig.value(t);
        let meas = Measurement { force: state.output_force(p), pressure: state.pressure(p) };
        let current = controller.update(reference, &meas, dt);
        samples.push(Sample {
            t,
            reference,
            current,
            f_mr: state.f_mr,
            pressure: meas.pressure,
            force: meas.force,
            disturbance: f_dist(t),
            state,
        });
        if k < n {
            for j in 0..opts.substeps {
                let tj = t + j as f64 * h;
                state = step_plant(&state, tj, h, |_| current, f_dist, p, z, opts.clutch_clamp);
            }
        }
    }

    Ok(SimResult {
        samples,
        metadata: SimMetadata {
            params_hash: params_hash(p, z),
            controller: ctrl.to_string(),
            signal: sig.label().to_string(),
            integrator_step: h,
            sample_rate: fs,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> ActuationLineParams {
        ActuationLineParams::default()
    }

    #[test]
    fn open_loop_step_settles_to_reference() {
        let p = p();
        let ctrl = ControllerConfig::open_loop(&p);
        let sig = SignalSpec::Step { t0: 0.1, from: 0.0, to: 250.0 };
        for z in [LoadImpedance::Blocked, LoadImpedance::bench()] {
            let r = run_simulation(&p, &z, &ctrl, &sig, 3.0, &SimOptions::default()).unwrap();
            assert_eq!(r.len(), 4501);
            let f = r.last().unwrap().force;
            assert!((f / 250.0 - 1.0).abs() < 1e-3, "{z:?}: {f}");
        }
    }

    #[test]
    fn time_grid_is_uniform_and_columns_recomputable() {
        let p = p();
        let z = LoadImpedance::bench();
        let ctrl = ControllerConfig::open_loop(&p);
        let r = run_simulation(&p, &z, &ctrl, &SignalSpec::mixed_default(), 1.5, &SimOptions::default()).unwrap();
        assert_eq!(r.len(), 2251);
        for (k, s) in r.samples.iter().enumerate() {
            assert_eq!(s.t, k as f64 / 1500.0);
            assert_eq!(s.force, s.state.output_force(&p));
            assert_eq!(s.pressure, s.state.pressure(&p));
            assert_eq!(s.f_mr, s.state.f_mr);
        }
    }

    #[test]
    fn equilibrium_start_is_quiet() {
        let p = p();
        let z = LoadImpedance::bench();
        let ctrl = ControllerConfig::new(ControlLaw::ForcePi { kp: 0.002, ki: 0.1 }, &p);
        let sig = SignalSpec::Step { t0: 10.0, from: 50.0, to: 60.0 };
        let r = run_simulation(&p, &z, &ctrl, &sig, 0.5, &SimOptions::default()).unwrap();
        for s in &r.samples {
            assert!((s.force - 50.0).abs() < 1e-9, "{}", s.force);
        }
    }

    #[test]
    fn invalid_inputs() {
        let p = p();
        let z = LoadImpedance::Blocked;
        let ctrl = ControllerConfig::open_loop(&p);
        let sig = SignalSpec::Step { t0: 0.0, from: 0.0, to: 1.0 };
        assert!(run_simulation(&p, &z, &ctrl, &sig, 0.0, &SimOptions::default()).is_err());
        let opts = SimOptions { substeps: 0, ..SimOptions::default() };
        assert!(run_simulation(&p, &z, &ctrl, &sig, 1.0, &opts).is_err());
    }

    #[test]
    fn divergence_reports_time() {
        let p = p();
        let z = LoadImpedance::bench();
        // far beyond the stable gain with clamps removed
        let ctrl = ControllerConfig::new(ControlLaw::ForcePi { kp: 10.0, ki: 0.0 }, &p).unclamped();
        let sig = SignalSpec::Step { t0: 0.0, from: 0.0, to: 100.0 };
        let err = run_simulation(&p, &z, &ctrl, &sig, 100.0, &SimOptions::linear()).unwrap_err();
        assert!(matches!(err, Error::Divergence { time } if time > 0.0 && time < 100.0), "{err:?}");
    }

    #[test]
    fn hash_tracks_parameters() {
        let p = p();
        let mut q = p;
        q.b1 += 1e-9;
        let z = LoadImpedance::bench();
        assert_eq!(params_hash(&p, &z), params_hash(&p, &z));
        assert_ne!(params_hash(&p, &z), params_hash(&q, &z));
        assert_ne!(params_hash(&p, &z), params_hash(&p, &LoadImpedance::Blocked));
    }
}
