//! Physical parameters of the actuation line, the config-file format and the
//! handful of derived quantities that come straight from the hardware geometry.
//!
//! All values are SI. Forces and "pressures" are carried in force-equivalent
//! units at the master piston (N); [`ActuationLineParams::pressure_to_pa`]
//! converts for presentation only.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// Rated torque of the test-bench MR clutch, N·m.
pub const CLUTCH_TORQUE_RATING: f64 = 4.0;
/// Radius of the 12 mm clutch output pulley pulling the master cylinder, m.
pub const PULLEY_RADIUS: f64 = 0.006;
/// Upper end of the clutch current band used on the bench, A.
pub const DEFAULT_I_MAX: f64 = 3.5;
/// Master cylinder effective area, m².
pub const DEFAULT_A_MASTER: f64 = 826e-6;
/// Slave cylinder effective area, m².
pub const DEFAULT_A_SLAVE: f64 = 671e-6;
/// Hydraulic hose internal diameter, m.
pub const DEFAULT_HOSE_DIAMETER: f64 = 0.0095;
/// Rolling-diaphragm pressure rating, Pa.
pub const DIAPHRAGM_PRESSURE_RATING: f64 = 3.1e6;

/// Lumped parameters of the clutch + hydrostatic line, reflected to linear
/// motion at the output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ActuationLineParams {
    pub m1: f64,
    pub b1: f64,
    pub k1: f64,
    pub m2: f64,
    pub b2: f64,
    pub k2: f64,
    /// Magnetic build-up time constant of the clutch, s.
    pub tau: f64,
    /// Static clutch gain from coil current to force at the master piston, N/A.
    pub k_i: f64,
    pub a_master: f64,
    pub a_slave: f64,
    pub i_min: f64,
    pub i_max: f64,
}

impl Default for ActuationLineParams {
    fn default() -> Self {
        Self {
            m1: 1.0,
            b1: 210.0,
            k1: 2.76e5,
            m2: 9.65,
            b2: 98.0,
            k2: 2.76e5,
            tau: 0.010,
            // rated clutch force at the pulley, reached at the top of the current band
            k_i: CLUTCH_TORQUE_RATING / PULLEY_RADIUS / DEFAULT_I_MAX,
            a_master: DEFAULT_A_MASTER,
            a_slave: DEFAULT_A_SLAVE,
            i_min: 0.0,
            i_max: DEFAULT_I_MAX,
        }
    }
}

impl ActuationLineParams {
    pub fn validate(&self) -> Result<()> {
        positive("m1", self.m1)?;
        positive("m2", self.m2)?;
        positive("k1", self.k1)?;
        positive("k2", self.k2)?;
        non_negative("b1", self.b1)?;
        non_negative("b2", self.b2)?;
        positive("tau", self.tau)?;
        positive("K_I", self.k_i)?;
        positive("A_master", self.a_master)?;
        positive("A_slave", self.a_slave)?;
        non_negative("I_min", self.i_min)?;
        finite("I_max", self.i_max)?;
        if self.i_min >= self.i_max {
            return Err(Error::Validation {
                name: "I_max",
                msg: format!("must exceed I_min ({} >= {})", self.i_min, self.i_max),
            });
        }
        Ok(())
    }

    /// Force-equivalent line pressure (N at the master piston) to Pa.
    pub fn pressure_to_pa(&self, force_equivalent: f64) -> f64 {
        force_equivalent / self.a_master
    }
}

/// External load seen by the slave cylinder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LoadImpedance {
    /// Output rigidly blocked (impedance → ∞).
    Blocked,
    /// Mass-spring-damper load `m3·s² + b3·s + k3`.
    Compliant { m3: f64, b3: f64, k3: f64 },
}

impl LoadImpedance {
    /// The bench load: 1.87 kg mass, 20 N·s/m damper, 12 000 N/m spring.
    pub const fn bench() -> Self {
        LoadImpedance::Compliant { m3: 1.87, b3: 20.0, k3: 12_000.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if let LoadImpedance::Compliant { m3, b3, k3 } = *self {
            positive("load.m3", m3)?;
            non_negative("load.b3", b3)?;
            non_negative("load.k3", k3)?;
        }
        Ok(())
    }

    pub fn label(&self) -> &'static str {
        match self {
            LoadImpedance::Blocked => "blocked",
            LoadImpedance::Compliant { .. } => "compliant",
        }
    }
}

impl Default for LoadImpedance {
    fn default() -> Self {
        Self::bench()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HardwareGeometry {
    pub hose_length: f64,
    pub hose_inner_diameter: f64,
    pub fluid_density: f64,
    /// Piston area whose displacement the fluid mass is reflected to.
    pub cylinder_area: f64,
    pub pulley_radius: f64,
    pub clutch_torque_rating: f64,
}

impl Default for HardwareGeometry {
    fn default() -> Self {
        Self {
            hose_length: 1.0,
            hose_inner_diameter: DEFAULT_HOSE_DIAMETER,
            fluid_density: 1000.0,
            cylinder_area: DEFAULT_A_MASTER,
            pulley_radius: PULLEY_RADIUS,
            clutch_torque_rating: CLUTCH_TORQUE_RATING,
        }
    }
}

impl HardwareGeometry {
    pub fn validate(&self) -> Result<()> {
        positive("hose.length", self.hose_length)?;
        positive("hose.diameter", self.hose_inner_diameter)?;
        positive("fluid.density", self.fluid_density)?;
        positive("cylinder_area", self.cylinder_area)?;
        positive("pulley.radius", self.pulley_radius)?;
        positive("clutch_torque_rating", self.clutch_torque_rating)?;
        Ok(())
    }

    pub fn hose_area(&self) -> f64 {
        PI * self.hose_inner_diameter * self.hose_inner_diameter / 4.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JointSpec {
    pub torque_capacity: f64,
    pub rom_min_deg: f64,
    pub rom_max_deg: f64,
}

impl JointSpec {
    pub const SHOULDER: JointSpec = JointSpec { torque_capacity: 39.0, rom_min_deg: 0.0, rom_max_deg: 115.0 };
    pub const ELBOW: JointSpec = JointSpec { torque_capacity: 25.0, rom_min_deg: 0.0, rom_max_deg: 180.0 };

    pub fn validate(&self) -> Result<()> {
        positive("torque_capacity", self.torque_capacity)?;
        if !(self.rom_min_deg < self.rom_max_deg) {
            return Err(Error::Validation { name: "rom", msg: "rom_min must be below rom_max".into() });
        }
        Ok(())
    }

    pub fn range_of_motion_deg(&self) -> f64 {
        self.rom_max_deg - self.rom_min_deg
    }

    /// True when `torque` exceeds the joint's rated capacity in magnitude.
    pub fn exceeds_capacity(&self, torque: f64) -> bool {
        torque.abs() > self.torque_capacity
    }
}

/// Everything a config file describes.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct LineConfig {
    pub params: ActuationLineParams,
    pub load: LoadImpedance,
    pub geometry: HardwareGeometry,
}

impl LineConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.load.validate()?;
        self.geometry.validate()
    }
}

/// Documented config keys, in canonical order.
pub const CONFIG_KEYS: &[&str] = &[
    "m1", "b1", "k1", "m2", "b2", "k2", "tau", "K_I", "A_master", "A_slave", "I_min", "I_max",
    "load.kind", "load.m3", "load.b3", "load.k3", "hose.length", "hose.diameter", "fluid.density",
    "pulley.radius",
];

pub fn load_config(path: impl AsRef<Path>) -> Result<LineConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io { path: path.display().to_string(), msg: e.to_string() })?;
    parse_config(&text)
}

/// Parses the flat `key = value` format. Unspecified keys keep their defaults.
pub fn parse_config(text: &str) -> Result<LineConfig> {
    let mut cfg = LineConfig::default();
    let mut kind: Option<String> = None;
    let (mut m3, mut b3, mut k3) = match LoadImpedance::bench() {
        LoadImpedance::Compliant { m3, b3, k3 } => (m3, b3, k3),
        LoadImpedance::Blocked => unreachable!(),
    };
    let mut load_values_given = false;
    let mut seen: Vec<&str> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| Error::Parse { line, msg: format!("expected `key = value`, got `{content}`") })?;
        let canonical = CONFIG_KEYS
            .iter()
            .copied()
            .find(|k| *k == key)
            .ok_or_else(|| Error::UnknownKey { line, key: key.to_string() })?;
        if seen.contains(&canonical) {
            return Err(Error::Parse { line, msg: format!("duplicate key `{key}`") });
        }
        seen.push(canonical);

        if canonical == "load.kind" {
            match value {
                "blocked" | "compliant" => kind = Some(value.to_string()),
                other => {
                    return Err(Error::Parse {
                        line,
                        msg: format!("load.kind must be `blocked` or `compliant`, got `{other}`"),
                    })
                }
            }
            continue;
        }

        let v: f64 = value
            .parse()
            .map_err(|_| Error::Parse { line, msg: format!("`{value}` is not a number") })?;
        if !v.is_finite() {
            return Err(Error::Parse { line, msg: format!("`{value}` is not finite") });
        }
        let p = &mut cfg.params;
        let g = &mut cfg.geometry;
        match canonical {
            "m1" => p.m1 = v,
            "b1" => p.b1 = v,
            "k1" => p.k1 = v,
            "m2" => p.m2 = v,
            "b2" => p.b2 = v,
            "k2" => p.k2 = v,
            "tau" => p.tau = v,
            "K_I" => p.k_i = v,
            "A_master" => p.a_master = v,
            "A_slave" => p.a_slave = v,
            "I_min" => p.i_min = v,
            "I_max" => p.i_max = v,
            "load.m3" => {
                m3 = v;
                load_values_given = true;
            }
            "load.b3" => {
                b3 = v;
                load_values_given = true;
            }
            "load.k3" => {
                k3 = v;
                load_values_given = true;
            }
            "hose.length" => g.hose_length = v,
            "hose.diameter" => g.hose_inner_diameter = v,
            "fluid.density" => g.fluid_density = v,
            "pulley.radius" => g.pulley_radius = v,
            _ => unreachable!("key list and match arms disagree"),
        }
    }

    cfg.load = match kind.as_deref() {
        Some("blocked") => {
            if load_values_given {
                return Err(Error::Validation {
                    name: "load.kind",
                    msg: "load.m3/b3/k3 given for a blocked load".into(),
                });
            }
            LoadImpedance::Blocked
        }
        _ => LoadImpedance::Compliant { m3, b3, k3 },
    };
    cfg.geometry.cylinder_area = cfg.params.a_master;
    cfg.validate()?;
    Ok(cfg)
}

/// Canonical text form: every key, documented order, shortest round-trip floats.
pub fn save_config(cfg: &LineConfig) -> String {
    let p = &cfg.params;
    let g = &cfg.geometry;
    let mut out = String::from("# mrhydro actuation-line config (SI units)\n");
    let mut put = |k: &str, v: f64| {
        let _ = writeln!(out, "{k} = {v:?}");
    };
    put("m1", p.m1);
    put("b1", p.b1);
    put("k1", p.k1);
    put("m2", p.m2);
    put("b2", p.b2);
    put("k2", p.k2);
    put("tau", p.tau);
    put("K_I", p.k_i);
    put("A_master", p.a_master);
    put("A_slave", p.a_slave);
    put("I_min", p.i_min);
    put("I_max", p.i_max);
    match cfg.load {
        LoadImpedance::Blocked => out.push_str("load.kind = blocked\n"),
        LoadImpedance::Compliant { m3, b3, k3 } => {
            let _ = writeln!(out, "load.kind = compliant");
            let _ = writeln!(out, "load.m3 = {m3:?}");
            let _ = writeln!(out, "load.b3 = {b3:?}");
            let _ = writeln!(out, "load.k3 = {k3:?}");
        }
    }
    let _ = writeln!(out, "hose.length = {:?}", g.hose_length);
    let _ = writeln!(out, "hose.diameter = {:?}", g.hose_inner_diameter);
    let _ = writeln!(out, "fluid.density = {:?}", g.fluid_density);
    let _ = writeln!(out, "pulley.radius = {:?}", g.pulley_radius);
    out
}

/// Fluid mass in the hose reflected to the cylinder piston: ρ·L·A_cyl²/A_hose.
///
/// The piston moves `A_hose/A_cyl` times less than the fluid in the hose, so the
/// kinetic-energy-equivalent mass scales with `(A_cyl/A_hose)²`.
pub fn derive_hydraulic_mass(geom: &HardwareGeometry) -> Result<f64> {
    geom.validate()?;
    let hose = geom.hose_area();
    Ok(geom.fluid_density * geom.hose_length * geom.cylinder_area * geom.cylinder_area / hose)
}

/// Net torque of an antagonist pair of pull-only cables on a pulley of radius `r`.
pub fn joint_torque(f_a: f64, f_b: f64, r: f64) -> Result<f64> {
    if !(f_a >= 0.0) {
        return Err(Error::Validation { name: "F_a", msg: format!("cable force must be >= 0, got {f_a}") });
    }
    if !(f_b >= 0.0) {
        return Err(Error::Validation { name: "F_b", msg: format!("cable force must be >= 0, got {f_b}") });
    }
    positive("r", r)?;
    Ok((f_a - f_b) * r)
}

fn finite(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Validation { name, msg: format!("must be finite, got {v}") })
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    finite(name, v)?;
    if v > 0.0 {
        Ok(())
    } else {
        Err(Error::Validation { name, msg: format!("must be > 0, got {v}") })
    }
}

fn non_negative(name: &'static str, v: f64) -> Result<()> {
    finite(name, v)?;
    if v >= 0.0 {
        Ok(())
    } else {
        Err(Error::Validation { name, msg: format!("must be >= 0, got {v}") })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_documented_keys_parse() {
        let text = "m1 = 1\nb1 = 210\nk1 = 2.76e5\nm2 = 9.65\nb2 = 98\nk2 = 2.76e5\ntau = 0.010\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.params.m2, 9.65);
        assert_eq!(cfg.params.tau, 0.010);
        assert_eq!(cfg.params.k1, 276_000.0);
    }

    #[test]
    fn empty_file_gives_defaults_with_bench_load() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, LineConfig::default());
        assert_eq!(cfg.load, LoadImpedance::Compliant { m3: 1.87, b3: 20.0, k3: 12_000.0 });
        assert_eq!(cfg.params.i_max, 3.5);
        assert_eq!(cfg.params.i_min, 0.0);
    }

    #[test]
    fn negative_mass_is_rejected() {
        let err = parse_config("m1 = -1\n").unwrap_err();
        assert!(matches!(err, Error::Validation { name: "m1", .. }), "{err:?}");
    }

    #[test]
    fn unknown_key_and_malformed_lines() {
        assert!(matches!(parse_config("m_1 = 1").unwrap_err(), Error::UnknownKey { line: 1, .. }));
        assert!(matches!(parse_config("# hi\nm1 1").unwrap_err(), Error::Parse { line: 2, .. }));
        assert!(matches!(parse_config("m1 = abc").unwrap_err(), Error::Parse { .. }));
        assert!(matches!(parse_config("m1 = 1\nm1 = 2").unwrap_err(), Error::Parse { line: 2, .. }));
        assert!(matches!(parse_config("load.kind = rigid").unwrap_err(), Error::Parse { .. }));
        assert!(matches!(parse_config("I_min = 4").unwrap_err(), Error::Validation { name: "I_max", .. }));
    }

    #[test]
    fn blocked_load_and_comments() {
        let cfg = parse_config("load.kind = blocked   # rigid output\n\n# k1 = 3\n").unwrap();
        assert_eq!(cfg.load, LoadImpedance::Blocked);
        assert_eq!(cfg.params.k1, 2.76e5);
        assert!(parse_config("load.kind = blocked\nload.m3 = 2").is_err());
    }

    #[test]
    fn canonical_round_trip() {
        let mut cfg = LineConfig::default();
        cfg.params.b2 = 101.25;
        cfg.load = LoadImpedance::Compliant { m3: 2.5, b3: 0.0, k3: 1e4 };
        let text = save_config(&cfg);
        let back = parse_config(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(save_config(&back), text);

        let blocked = LineConfig { load: LoadImpedance::Blocked, ..LineConfig::default() };
        let text = save_config(&blocked);
        assert_eq!(save_config(&parse_config(&text).unwrap()), text);
    }

    #[test]
    fn load_config_reads_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("line.cfg");
        std::fs::write(&path, "tau = 0.02\n").unwrap();
        assert_eq!(load_config(&path).unwrap().params.tau, 0.02);
        let missing = load_config(dir.path().join("nope.cfg")).unwrap_err();
        assert!(missing.is_input_error());
    }

    #[test]
    fn hydraulic_mass_bench_value() {
        let geom = HardwareGeometry::default();
        // hand evaluation: 1000 * 1.0 * (826e-6)^2 / (pi * 0.0095^2 / 4)
        let hose = PI * 0.0095 * 0.0095 / 4.0;
        let expected = 1000.0 * 826e-6 * 826e-6 / hose;
        let m2 = derive_hydraulic_mass(&geom).unwrap();
        assert!((m2 - expected).abs() < 1e-12);
        assert!((m2 - 9.626).abs() < 0.001, "m2 = {m2}");
        assert!((m2 / 9.65 - 1.0).abs() < 0.05);
    }

    #[test]
    fn hydraulic_mass_unit_reflection() {
        let mut geom = HardwareGeometry::default();
        geom.cylinder_area = geom.hose_area();
        let m2 = derive_hydraulic_mass(&geom).unwrap();
        let plain = geom.fluid_density * geom.hose_length * geom.hose_area();
        assert!((m2 - plain).abs() <= 1e-15 * plain);
    }

    #[test]
    fn hydraulic_mass_rejects_bad_geometry() {
        let geom = HardwareGeometry { hose_length: 0.0, ..HardwareGeometry::default() };
        assert!(derive_hydraulic_mass(&geom).is_err());
    }

    #[test]
    fn joint_torque_cases() {
        assert_eq!(joint_torque(0.0, 0.0, 0.05).unwrap(), 0.0);
        assert_eq!(joint_torque(500.0, 500.0, 0.012).unwrap(), 0.0);
        // rated membrane pressure on the slave piston, 12 mm driven-pulley radius
        let f = DIAPHRAGM_PRESSURE_RATING * DEFAULT_A_SLAVE;
        assert!((f - 2080.1).abs() < 1e-6);
        let t = joint_torque(f, 0.0, 0.012).unwrap();
        assert!((t - 24.9612).abs() < 1e-9, "t = {t}");
        assert!(!JointSpec::ELBOW.exceeds_capacity(t));
        assert!(JointSpec::ELBOW.exceeds_capacity(t * 1.1));
        assert!(joint_torque(-1.0, 0.0, 0.01).is_err());
        assert!(joint_torque(0.0, -1.0, 0.01).is_err());
    }

    #[test]
    fn joint_specs() {
        assert_eq!(JointSpec::SHOULDER.range_of_motion_deg(), 115.0);
        assert_eq!(JointSpec::ELBOW.range_of_motion_deg(), 180.0);
        JointSpec::SHOULDER.validate().unwrap();
        let bad = JointSpec { torque_capacity: 1.0, rom_min_deg: 10.0, rom_max_deg: 10.0 };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn pressure_presentation() {
        let p = ActuationLineParams::default();
        assert!((p.pressure_to_pa(826.0) - 1e6).abs() < 1e-6);
    }
}
