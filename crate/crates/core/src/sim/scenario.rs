use serde::Serialize;

use super::controller::{ControllerConfig, StrategyContext, StrategyRegistry};
use super::metrics::{measure_metrics, peak_deviation, Metrics};
use super::run::{run_simulation, SimOptions, SimResult};
use super::signal::{Disturbance, SignalSpec};
use crate::error::{Error, Result};
use crate::params::{ActuationLineParams, LoadImpedance};

/// Constant-force task with a seeded wideband load disturbance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DrillingConfig {
    /// Reference force, N.
    pub level: f64,
    pub seed: u64,
    pub components: usize,
    /// Highest disturbance tone, Hz.
    pub f_max: f64,
    /// Open-loop peak deviation the disturbance is scaled to, N.
    pub open_loop_peak: f64,
    /// Start of the evaluation window, s.
    pub settle: f64,
    pub duration: f64,
}

impl Default for DrillingConfig {
    fn default() -> Self {
        Self { level: 23.0, seed: 13, components: 32, f_max: 10.0, open_loop_peak: 8.0, settle: 2.0, duration: 12.0 }
    }
}

impl DrillingConfig {
    pub fn window(&self) -> (f64, f64) {
        (self.settle, self.duration)
    }

    fn validate(&self) -> Result<()> {
        let ok = self.level.is_finite()
            && self.components > 0
            && self.f_max > 0.0
            && self.open_loop_peak > 0.0
            && self.settle >= 0.0
            && self.duration > self.settle;
        if ok {
            Ok(())
        } else {
            Err(Error::Validation { name: "drilling", msg: format!("inconsistent scenario {self:?}") })
        }
    }

    pub fn signal(&self, disturbance: Disturbance) -> SignalSpec {
        SignalSpec::ConstantWithDisturbance { level: self.level, disturbance }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DrillingOutcome {
    pub result: SimResult,
    pub disturbance: Disturbance,
    /// Largest `|F − level|` after settling, N.
    pub peak_deviation: f64,
}

/// Multisine scaled so the open-loop line deviates by exactly
/// `cfg.open_loop_peak` over the evaluation window.
///
/// The open-loop current is constant and the clutch force stays positive, so
/// the deviation is linear in the amplitude and one unit-amplitude run fixes
/// the scale.
pub fn calibrate_disturbance(p: &ActuationLineParams, z: &LoadImpedance, cfg: &DrillingConfig) -> Result<Disturbance> {
    cfg.validate()?;
    if matches!(z, LoadImpedance::Blocked) {
        return Err(Error::Validation { name: "load", msg: "a blocked output cannot be disturbed".into() });
    }
    let unit = Disturbance::multisine(cfg.seed, cfg.components, cfg.f_max, 1.0);
    let open = ControllerConfig::open_loop(p);
    let r = run_simulation(p, z, &open, &cfg.signal(unit.clone()), cfg.duration, &SimOptions::default())?;
    let peak = peak_deviation(&r, cfg.level, cfg.window())?;
    if !(peak > 0.0) {
        return Err(Error::Validation { name: "drilling", msg: "disturbance does not reach the output".into() });
    }
    Ok(unit.scaled(cfg.open_loop_peak / peak))
}

/// Holds `cfg.level` under the calibrated disturbance with controller `ctrl`.
pub fn drilling_scenario(
    p: &ActuationLineParams,
    z: &LoadImpedance,
    ctrl: &ControllerConfig,
    cfg: &DrillingConfig,
) -> Result<DrillingOutcome> {
    let disturbance = calibrate_disturbance(p, z, cfg)?;
    drilling_with(p, z, ctrl, cfg, disturbance)
}

/// Same as [`drilling_scenario`] with an explicit disturbance.
pub fn drilling_with(
    p: &ActuationLineParams,
    z: &LoadImpedance,
    ctrl: &ControllerConfig,
    cfg: &DrillingConfig,
    disturbance: Disturbance,
) -> Result<DrillingOutcome> {
    cfg.validate()?;
    let result = run_simulation(p, z, ctrl, &cfg.signal(disturbance.clone()), cfg.duration, &SimOptions::default())?;
    let peak = peak_deviation(&result, cfg.level, cfg.window())?;
    Ok(DrillingOutcome { result, disturbance, peak_deviation: peak })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub name: String,
    pub config: ControllerConfig,
    pub metrics: Metrics,
    #[serde(skip)]
    pub result: SimResult,
}

/// Runs each named strategy on the same reference and measures it over
/// `window`.
pub fn compare_controllers(
    p: &ActuationLineParams,
    z: &LoadImpedance,
    registry: &StrategyRegistry,
    names: &[&str],
    sig: &SignalSpec,
    duration: f64,
    window: (f64, f64),
) -> Result<Vec<ComparisonRow>> {
    let ctx = StrategyContext::new(p, z);
    names
        .iter()
        .map(|&name| {
            let config = registry.configure(name, &ctx)?;
            let result = run_simulation(p, z, &config, sig, duration, &SimOptions::default())?;
            let metrics = measure_metrics(&result, window)?;
            Ok(ComparisonRow { name: name.to_string(), config, metrics, result })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calibration_hits_the_target() {
        let p = ActuationLineParams::default();
        let z = LoadImpedance::bench();
        let cfg = DrillingConfig { duration: 4.0, settle: 1.0, ..DrillingConfig::default() };
        let d = calibrate_disturbance(&p, &z, &cfg).unwrap();
        let out = drilling_with(&p, &z, &ControllerConfig::open_loop(&p), &cfg, d).unwrap();
        assert!((out.peak_deviation - cfg.open_loop_peak).abs() < 1e-9, "{}", out.peak_deviation);
    }

    #[test]
    fn zero_disturbance_holds_the_level() {
        let p = ActuationLineParams::default();
        let z = LoadImpedance::bench();
        let cfg = DrillingConfig { duration: 3.0, ..DrillingConfig::default() };
        let out = drilling_with(&p, &z, &ControllerConfig::open_loop(&p), &cfg, Disturbance::none()).unwrap();
        assert!(out.peak_deviation <= 0.005 * cfg.level);
    }

    #[test]
    fn blocked_output_rejected() {
        let p = ActuationLineParams::default();
        assert!(calibrate_disturbance(&p, &LoadImpedance::Blocked, &DrillingConfig::default()).is_err());
        let bad = DrillingConfig { settle: 20.0, ..DrillingConfig::default() };
        assert!(calibrate_disturbance(&p, &LoadImpedance::bench(), &bad).is_err());
    }
}
