//! Force-control strategies.
//!
//! Each strategy is a [`ControlStrategy`] registered by name in a
//! [`StrategyRegistry`]; it turns a line description into a
//! [`ControllerConfig`], which in turn instantiates the runtime
//! [`Controller`] executed by the simulator at the sample rate.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use super::tune::tune_pi;
use crate::error::{Error, Result};
use crate::params::{ActuationLineParams, LoadImpedance};
use crate::tf::Channel;

/// Controller sample rate of the test bench, Hz.
pub const DEFAULT_SAMPLE_RATE: f64 = 1500.0;

/// Signals available to a controller at a sample instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Measurement {
    pub force: f64,
    pub pressure: f64,
}

impl Measurement {
    pub fn channel(&self, c: Channel) -> f64 {
        match c {
            Channel::Force => self.force,
            Channel::Pressure => self.pressure,
        }
    }
}

/// Runtime controller, called once per sample.
pub trait Controller: Send {
    fn name(&self) -> &'static str;

    /// Clutch current command (A) for the coming sample period.
    fn update(&mut self, reference: f64, meas: &Measurement, dt: f64) -> f64;

    /// Bumpless start from a steady state holding `current`.
    fn initialize(&mut self, _current: f64) {}
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ControlLaw {
    /// `I = G1·F_ref`
    OpenLoop { g1: f64 },
    /// PI on the output-force error.
    ForcePi { kp: f64, ki: f64 },
    /// PI on the line-pressure error against `G2·F_ref`.
    PressurePi { kp: f64, ki: f64, g2: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ControllerConfig {
    pub law: ControlLaw,
    pub sample_rate: f64,
    pub i_min: f64,
    pub i_max: f64,
    /// Bound on the integral contribution `|ki·∫e|`, A.
    pub integrator_limit: f64,
}

impl ControllerConfig {
    pub fn new(law: ControlLaw, p: &ActuationLineParams) -> Self {
        Self { law, sample_rate: DEFAULT_SAMPLE_RATE, i_min: p.i_min, i_max: p.i_max, integrator_limit: p.i_max }
    }

    pub fn open_loop(p: &ActuationLineParams) -> Self {
        Self::new(ControlLaw::OpenLoop { g1: 1.0 / p.k_i }, p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Validation { name: "controller", msg: msg.to_string() });
        if !(self.sample_rate > 0.0) {
            return bad("sample_rate must be > 0");
        }
        if !(self.i_min < self.i_max) {
            return bad("output clamp must satisfy i_min < i_max");
        }
        if !(self.integrator_limit >= 0.0) {
            return bad("integrator limit must be >= 0");
        }
        let gains_ok = match self.law {
            ControlLaw::OpenLoop { g1 } => g1 >= 0.0,
            ControlLaw::ForcePi { kp, ki } => kp >= 0.0 && ki >= 0.0,
            ControlLaw::PressurePi { kp, ki, g2 } => kp >= 0.0 && ki >= 0.0 && g2 >= 0.0,
        };
        if !gains_ok {
            return bad("gains must be >= 0");
        }
        Ok(())
    }

    /// Same configuration without output saturation.
    pub fn unclamped(&self) -> Self {
        Self { i_min: f64::NEG_INFINITY, i_max: f64::INFINITY, integrator_limit: f64::INFINITY, ..*self }
    }

    pub fn name(&self) -> &'static str {
        match self.law {
            ControlLaw::OpenLoop { .. } => "open",
            ControlLaw::ForcePi { .. } => "force-pi",
            ControlLaw::PressurePi { .. } => "pressure-pi",
        }
    }

    pub fn instantiate(&self) -> Box<dyn Controller> {
        match self.law {
            ControlLaw::OpenLoop { g1 } => Box::new(OpenLoopController { g1, i_min: self.i_min, i_max: self.i_max }),
            ControlLaw::ForcePi { kp, ki } => Box::new(PiController::new("force-pi", Channel::Force, kp, ki, 1.0, self)),
            ControlLaw::PressurePi { kp, ki, g2 } => {
                Box::new(PiController::new("pressure-pi", Channel::Pressure, kp, ki, g2, self))
            }
        }
    }

    /// Copy with the proportional gain multiplied by `factor`.
    pub fn with_kp_scaled(&self, factor: f64) -> Self {
        let law = match self.law {
            ControlLaw::ForcePi { kp, ki } => ControlLaw::ForcePi { kp: kp * factor, ki },
            ControlLaw::PressurePi { kp, ki, g2 } => ControlLaw::PressurePi { kp: kp * factor, ki, g2 },
            open => open,
        };
        Self { law, ..*self }
    }
}

impl fmt::Display for ControllerConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.law {
            ControlLaw::OpenLoop { g1 } => write!(f, "open(G1={g1:.6e} A/N)"),
            ControlLaw::ForcePi { kp, ki } => write!(f, "force-pi(kp={kp:.6e} A/N, ki={ki:.6e} A/(N·s))"),
            ControlLaw::PressurePi { kp, ki, g2 } => {
                write!(f, "pressure-pi(kp={kp:.6e} A/N, ki={ki:.6e} A/(N·s), G2={g2})")
            }
        }
    }
}

struct OpenLoopController {
    g1: f64,
    i_min: f64,
    i_max: f64,
}

impl Controller for OpenLoopController {
    fn name(&self) -> &'static str {
        "open"
    }

    fn update(&mut self, reference: f64, _meas: &Measurement, _dt: f64) -> f64 {
        (self.g1 * reference).clamp(self.i_min, self.i_max)
    }
}

/// PI with output clamping and conditional-integration anti-windup.
pub struct PiController {
    name: &'static str,
    channel: Channel,
    kp: f64,
    ki: f64,
    reference_gain: f64,
    i_min: f64,
    i_max: f64,
    integrator_limit: f64,
    integral: f64,
}

impl PiController {
    fn new(name: &'static str, channel: Channel, kp: f64, ki: f64, reference_gain: f64, cfg: &ControllerConfig) -> Self {
        Self {
            name,
            channel,
            kp,
            ki,
            reference_gain,
            i_min: cfg.i_min,
            i_max: cfg.i_max,
            integrator_limit: cfg.integrator_limit,
            integral: 0.0,
        }
    }

    fn bound_integral(&mut self) {
        if self.ki > 0.0 && self.integrator_limit.is_finite() {
            let lim = self.integrator_limit / self.ki;
            self.integral = self.integral.clamp(-lim, lim);
        }
    }
}

impl Controller for PiController {
    fn name(&self) -> &'static str {
        self.name
    }

    fn update(&mut self, reference: f64, meas: &Measurement, dt: f64) -> f64 {
        let error = self.reference_gain * reference - meas.channel(self.channel);
        let raw = self.kp * error + self.ki * self.integral;
        let out = raw.clamp(self.i_min, self.i_max);
        // halt integration while saturated in the direction of the error
        let winding = (raw > self.i_max && error > 0.0) || (raw < self.i_min && error < 0.0);
        if !winding {
            self.integral += error * dt;
            self.bound_integral();
        }
        out
    }

    fn initialize(&mut self, current: f64) {
        if self.ki > 0.0 {
            self.integral = current / self.ki;
            self.bound_integral();
        }
    }
}

/// What a strategy needs to produce a configuration.
#[derive(Debug, Clone, Copy)]
pub struct StrategyContext<'a> {
    pub params: &'a ActuationLineParams,
    pub load: &'a LoadImpedance,
    /// Explicit `(kp, ki)` in A/N and A/(N·s); tuned when absent.
    pub gains: Option<(f64, f64)>,
}

impl<'a> StrategyContext<'a> {
    pub fn new(params: &'a ActuationLineParams, load: &'a LoadImpedance) -> Self {
        Self { params, load, gains: None }
    }
}

pub trait ControlStrategy: Send + Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    fn configure(&self, ctx: &StrategyContext<'_>) -> Result<ControllerConfig>;
}

pub struct OpenLoopStrategy;

impl ControlStrategy for OpenLoopStrategy {
    fn name(&self) -> &'static str {
        "open"
    }

    fn description(&self) -> &'static str {
        "static gain G1 = 1/K_I from force reference to clutch current"
    }

    fn configure(&self, ctx: &StrategyContext<'_>) -> Result<ControllerConfig> {
        Ok(ControllerConfig::open_loop(ctx.params))
    }
}

pub struct ForcePiStrategy;

impl ControlStrategy for ForcePiStrategy {
    fn name(&self) -> &'static str {
        "force-pi"
    }

    fn description(&self) -> &'static str {
        "PI on the end-effector (load-cell) force"
    }

    fn configure(&self, ctx: &StrategyContext<'_>) -> Result<ControllerConfig> {
        let (kp, ki) = match ctx.gains {
            Some(g) => g,
            None => {
                let t = tune_pi(ctx.params, ctx.load, Channel::Force)?;
                (t.kp, t.ki)
            }
        };
        Ok(ControllerConfig::new(ControlLaw::ForcePi { kp, ki }, ctx.params))
    }
}

pub struct PressurePiStrategy;

impl ControlStrategy for PressurePiStrategy {
    fn name(&self) -> &'static str {
        "pressure-pi"
    }

    fn description(&self) -> &'static str {
        "PI on master-cylinder pressure against G2·F_ref"
    }

    fn configure(&self, ctx: &StrategyContext<'_>) -> Result<ControllerConfig> {
        let (kp, ki) = match ctx.gains {
            Some(g) => g,
            None => {
                let t = tune_pi(ctx.params, ctx.load, Channel::Pressure)?;
                (t.kp, t.ki)
            }
        };
        // force-equivalent pressure equals the output force at DC
        Ok(ControllerConfig::new(ControlLaw::PressurePi { kp, ki, g2: 1.0 }, ctx.params))
    }
}

/// Name → strategy lookup.
pub struct StrategyRegistry {
    entries: BTreeMap<&'static str, Box<dyn ControlStrategy>>,
}

impl StrategyRegistry {
    pub fn empty() -> Self {
        Self { entries: BTreeMap::new() }
    }

    /// The three built-in strategies: `open`, `force-pi`, `pressure-pi`.
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(OpenLoopStrategy));
        r.register(Box::new(ForcePiStrategy));
        r.register(Box::new(PressurePiStrategy));
        r
    }

    /// Adds (or replaces) a strategy under its own name.
    pub fn register(&mut self, strategy: Box<dyn ControlStrategy>) {
        self.entries.insert(strategy.name(), strategy);
    }

    pub fn get(&self, name: &str) -> Option<&dyn ControlStrategy> {
        self.entries.get(name).map(|b| b.as_ref())
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }

    pub fn configure(&self, name: &str, ctx: &StrategyContext<'_>) -> Result<ControllerConfig> {
        let strategy = self.get(name).ok_or_else(|| Error::Validation {
            name: "controller",
            msg: format!("unknown strategy `{name}` (known: {})", self.names().collect::<Vec<_>>().join(", ")),
        })?;
        strategy.configure(ctx)
    }
}

impl Default for StrategyRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ActuationLineParams {
        ActuationLineParams::default()
    }

    #[test]
    fn registry_lookup() {
        let r = StrategyRegistry::builtin();
        assert_eq!(r.names().collect::<Vec<_>>(), vec!["force-pi", "open", "pressure-pi"]);
        assert!(r.get("open").is_some());
        assert!(r.get("bang-bang").is_none());
        let p = params();
        let z = LoadImpedance::bench();
        let cfg = r.configure("open", &StrategyContext::new(&p, &z)).unwrap();
        assert_eq!(cfg.law, ControlLaw::OpenLoop { g1: 1.0 / p.k_i });
        let err = r.configure("bang-bang", &StrategyContext::new(&p, &z)).err().unwrap();
        assert!(err.to_string().contains("force-pi"));
    }

    #[test]
    fn explicit_gains_skip_tuning() {
        let p = params();
        let z = LoadImpedance::bench();
        let ctx = StrategyContext { gains: Some((0.001, 0.05)), ..StrategyContext::new(&p, &z) };
        let cfg = StrategyRegistry::builtin().configure("pressure-pi", &ctx).unwrap();
        assert_eq!(cfg.law, ControlLaw::PressurePi { kp: 0.001, ki: 0.05, g2: 1.0 });
        assert_eq!(cfg.name(), "pressure-pi");
    }

    struct Zero;
    impl ControlStrategy for Zero {
        fn name(&self) -> &'static str {
            "zero"
        }
        fn description(&self) -> &'static str {
            "always off"
        }
        fn configure(&self, ctx: &StrategyContext<'_>) -> Result<ControllerConfig> {
            Ok(ControllerConfig::new(ControlLaw::OpenLoop { g1: 0.0 }, ctx.params))
        }
    }

    #[test]
    fn custom_strategies_register() {
        let mut r = StrategyRegistry::builtin();
        r.register(Box::new(Zero));
        assert_eq!(r.names().count(), 4);
        assert_eq!(r.get("zero").unwrap().description(), "always off");
    }

    #[test]
    fn open_loop_clamps() {
        let p = params();
        let mut c = ControllerConfig::open_loop(&p).instantiate();
        let m = Measurement::default();
        assert_eq!(c.update(1e6, &m, 1e-3), p.i_max);
        assert_eq!(c.update(-5.0, &m, 1e-3), p.i_min);
        assert!((c.update(100.0, &m, 1e-3) - 100.0 / p.k_i).abs() < 1e-15);
    }

    #[test]
    fn pi_anti_windup_halts_integration() {
        let p = params();
        let cfg = ControllerConfig::new(ControlLaw::ForcePi { kp: 0.0, ki: 1.0 }, &p);
        let mut c = cfg.instantiate();
        let m = Measurement { force: 0.0, pressure: 0.0 };
        // large error: the integrator reaches the clamp then stops
        for _ in 0..10_000 {
            assert!(c.update(1000.0, &m, 1e-3) <= p.i_max);
        }
        // error reverses: output leaves saturation within a couple of samples
        let mut back = p.i_max;
        for _ in 0..2 {
            back = c.update(-1000.0, &m, 1e-3);
        }
        assert!(back < p.i_max, "{back}");
    }

    #[test]
    fn pi_tracks_pressure_channel_and_initializes() {
        let p = params();
        let cfg = ControllerConfig::new(ControlLaw::PressurePi { kp: 0.01, ki: 2.0, g2: 0.5 }, &p);
        let mut c = cfg.instantiate();
        c.initialize(1.0);
        // pressure matches G2·ref: output holds the initialized current
        let u = c.update(100.0, &Measurement { force: 0.0, pressure: 50.0 }, 1e-3);
        assert!((u - 1.0).abs() < 1e-12);
        let u = c.update(100.0, &Measurement { force: 50.0, pressure: 40.0 }, 1e-3);
        assert!((u - (1.0 + 0.01 * 10.0)).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        let p = params();
        let mut cfg = ControllerConfig::open_loop(&p);
        cfg.validate().unwrap();
        cfg.sample_rate = 0.0;
        assert!(cfg.validate().is_err());
        let neg = ControllerConfig::new(ControlLaw::ForcePi { kp: -1.0, ki: 0.0 }, &p);
        assert!(neg.validate().is_err());
        let cfg = ControllerConfig::new(ControlLaw::ForcePi { kp: 1.0, ki: 2.0 }, &p).with_kp_scaled(2.0);
        assert_eq!(cfg.law, ControlLaw::ForcePi { kp: 2.0, ki: 2.0 });
    }
}
