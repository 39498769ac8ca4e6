use std::fmt;

use serde::Serialize;

use super::{Polynomial, RationalTf, CANCEL_TOLERANCE};
use crate::error::Result;
use crate::params::{ActuationLineParams, LoadImpedance};

/// Intermediate blocks of the line model.
///
/// ```text
/// A  = k1 / (m1 s² + b1 s + k1)
/// B  = (m1 s² + b1 s) k1 / (m1 s² + b1 s + k1)
/// C  = Z3 k2 / ((m2 s² + b2 s)(Z3 + k2) + Z3 k2)
/// D  = (Z3 + k2) / ((m2 s² + b2 s)(Z3 + k2) + Z3 k2)
/// Z3 = m3 s² + b3 s + k3
/// ```
///
/// For a blocked output `z3` is `None` and C, D are their `Z3 → ∞` limits.
#[derive(Debug, Clone)]
pub struct Blocks {
    pub a: RationalTf,
    pub b: RationalTf,
    pub c: RationalTf,
    pub d: RationalTf,
    pub z3: Option<RationalTf>,
}

pub fn build_blocks(p: &ActuationLineParams, z: &LoadImpedance) -> Blocks {
    let q1 = Polynomial::quadratic(p.k1, p.b1, p.m1);
    let m1_part = Polynomial::quadratic(0.0, p.b1, p.m1);
    let a = RationalTf::new(Polynomial::constant(p.k1), q1.clone()).expect("k1 > 0");
    let b = RationalTf::new(m1_part.scale(p.k1), q1).expect("k1 > 0");

    let m2_part = Polynomial::quadratic(0.0, p.b2, p.m2);
    let (c, d, z3) = match *z {
        LoadImpedance::Blocked => {
            let q2 = Polynomial::quadratic(p.k2, p.b2, p.m2);
            let c = RationalTf::new(Polynomial::constant(p.k2), q2.clone()).expect("k2 > 0");
            let d = RationalTf::new(Polynomial::one(), q2).expect("k2 > 0");
            (c, d, None)
        }
        LoadImpedance::Compliant { m3, b3, k3 } => {
            let z3 = Polynomial::quadratic(k3, b3, m3);
            let z3_k2 = &z3 + &Polynomial::constant(p.k2);
            let den = &(&m2_part * &z3_k2) + &z3.scale(p.k2);
            let c = RationalTf::new(z3.scale(p.k2), den.clone()).expect("k2 > 0");
            let d = RationalTf::new(z3_k2, den).expect("k2 > 0");
            (c, d, Some(RationalTf::new(z3, Polynomial::one()).expect("unit denominator")))
        }
    };
    Blocks { a, b, c, d, z3 }
}

/// The two candidate closed forms for the clutch-current transfer functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Candidate {
    /// `1/(τs+1) · A/(BD+1)`, the form labelled H_F.
    ForceForm,
    /// `1/(τs+1) · A·C/(BD+1)`, the form labelled H_P.
    PressureForm,
}

impl Candidate {
    pub const ALL: [Candidate; 2] = [Candidate::ForceForm, Candidate::PressureForm];

    pub fn formula(&self) -> &'static str {
        match self {
            Candidate::ForceForm => "A/(BD+1)",
            Candidate::PressureForm => "A*C/(BD+1)",
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Candidate::ForceForm => "hf",
            Candidate::PressureForm => "hp",
        }
    }
}

impl fmt::Display for Candidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.label(), self.formula())
    }
}

/// Physical signals of the line that can be measured and fed back.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    /// Output force transmitted through the slave-side stiffness, `k2·(x2 − x3)`.
    Force,
    /// Master-side line pressure in force-equivalent units, `k1·(x1 − x2)`.
    Pressure,
}

impl Channel {
    pub const ALL: [Channel; 2] = [Channel::Force, Channel::Pressure];

    /// Closed form whose frequency response the simulated channel reproduces.
    ///
    /// Solving the three-mass equations of motion puts the k1-spring force at
    /// `A/(BD+1)` and the k2-spring force at `A·C/(BD+1)`; the time-domain
    /// cross-validation in `sim` confirms the assignment.
    pub fn candidate(&self) -> Candidate {
        match self {
            Channel::Force => Candidate::PressureForm,
            Channel::Pressure => Candidate::ForceForm,
        }
    }

    pub fn transfer(&self, p: &ActuationLineParams, z: &LoadImpedance) -> Result<RationalTf> {
        candidate_tf(self.candidate(), p, z)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Channel::Force => "force",
            Channel::Pressure => "pressure",
        }
    }
}

pub fn candidate_tf(which: Candidate, p: &ActuationLineParams, z: &LoadImpedance) -> Result<RationalTf> {
    match which {
        Candidate::ForceForm => build_hf(p, z),
        Candidate::PressureForm => build_hp(p, z),
    }
}

/// Clutch current to force, `K_I/(τs+1) · A/(BD+1)`, expanded and reduced.
pub fn build_hf(p: &ActuationLineParams, z: &LoadImpedance) -> Result<RationalTf> {
    let blk = build_blocks(p, z);
    expand(p, &blk.a, &blk)
}

/// Clutch current to line pressure, `K_I/(τs+1) · A·C/(BD+1)`, expanded and reduced.
pub fn build_hp(p: &ActuationLineParams, z: &LoadImpedance) -> Result<RationalTf> {
    let blk = build_blocks(p, z);
    expand(p, &blk.a.mul(&blk.c), &blk)
}

fn expand(p: &ActuationLineParams, numerator: &RationalTf, blk: &Blocks) -> Result<RationalTf> {
    let bd_plus_one = blk.b.mul(&blk.d).add(&RationalTf::constant(1.0));
    let lag = RationalTf::first_order_lag(p.tau);
    let g = lag.mul(&numerator.div(&bd_plus_one)?);
    Ok(g.cancel_common_factors(CANCEL_TOLERANCE)?.scale(p.k_i))
}
