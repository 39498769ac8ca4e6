#![allow(dead_code)]

use mrhydro_core::params::{ActuationLineParams, LoadImpedance};
use num_complex::Complex64;
use rand::Rng;

fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

/// Nominal parameters perturbed by factors of up to 5 in masses and stiffnesses,
/// damping anywhere in `[0, 3×]`, lag 2–50 ms and clutch gain 1–1000 N/A.
pub fn random_params(rng: &mut impl Rng) -> ActuationLineParams {
    let base = ActuationLineParams::default();
    ActuationLineParams {
        m1: base.m1 * log_uniform(rng, 0.2, 5.0),
        b1: base.b1 * rng.gen_range(0.0..3.0),
        k1: base.k1 * log_uniform(rng, 0.2, 5.0),
        m2: base.m2 * log_uniform(rng, 0.2, 5.0),
        b2: base.b2 * rng.gen_range(0.0..3.0),
        k2: base.k2 * log_uniform(rng, 0.2, 5.0),
        tau: log_uniform(rng, 0.002, 0.05),
        k_i: log_uniform(rng, 1.0, 1000.0),
        ..base
    }
}

pub fn random_load(rng: &mut impl Rng) -> LoadImpedance {
    if rng.gen_bool(0.3) {
        return LoadImpedance::Blocked;
    }
    LoadImpedance::Compliant {
        m3: 1.87 * log_uniform(rng, 0.2, 5.0),
        b3: 20.0 * rng.gen_range(0.0..3.0),
        k3: 12_000.0 * log_uniform(rng, 0.05, 20.0),
    }
}

/// `(H_F, H_P)` at `f` Hz by complex arithmetic straight on the block equations.
pub fn direct_response(p: &ActuationLineParams, z: &LoadImpedance, f: f64) -> (Complex64, Complex64) {
    let s = Complex64::new(0.0, 2.0 * std::f64::consts::PI * f);
    let q1 = p.m1 * s * s + p.b1 * s + p.k1;
    let a = p.k1 / q1;
    let b = (p.m1 * s * s + p.b1 * s) * p.k1 / q1;
    let q2 = p.m2 * s * s + p.b2 * s;
    let (c, d) = match *z {
        LoadImpedance::Blocked => (p.k2 / (q2 + p.k2), 1.0 / (q2 + p.k2)),
        LoadImpedance::Compliant { m3, b3, k3 } => {
            let z3 = m3 * s * s + b3 * s + k3;
            let dd = q2 * (z3 + p.k2) + z3 * p.k2;
            (z3 * p.k2 / dd, (z3 + p.k2) / dd)
        }
    };
    let hf = p.k_i / (p.tau * s + 1.0) * a / (b * d + 1.0);
    (hf, hf * c)
}
