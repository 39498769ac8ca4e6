use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use super::Polynomial;
use crate::error::{Error, Result};

/// Relative distance under which a numerator root and a denominator root are
/// treated as the same factor.
pub const CANCEL_TOLERANCE: f64 = 1e-8;

/// `num(s) / den(s)` with a monic denominator.
#[derive(Clone, PartialEq)]
pub struct RationalTf {
    num: Polynomial,
    den: Polynomial,
}

impl RationalTf {
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        let lead = den.leading();
        Ok(Self { num: num.scale(1.0 / lead), den: den.scale(1.0 / lead) })
    }

    pub fn constant(k: f64) -> Self {
        Self { num: Polynomial::constant(k), den: Polynomial::one() }
    }

    /// `1 / (tau·s + 1)`
    pub fn first_order_lag(tau: f64) -> Self {
        Self::new(Polynomial::one(), Polynomial::new(vec![1.0, tau])).expect("tau > 0")
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn relative_degree(&self) -> isize {
        self.den.degree() as isize - self.num.degree() as isize
    }

    pub fn is_proper(&self) -> bool {
        self.relative_degree() >= 0
    }

    /// Value at an arbitrary complex point; errors when `s` sits on a pole.
    pub fn eval(&self, s: Complex64) -> Result<Complex64> {
        let d = self.den.eval_complex(s);
        if d.norm() <= 64.0 * f64::EPSILON * self.den.abs_eval(s) {
            return Err(Error::AtPole { re: s.re, im: s.im });
        }
        Ok(self.num.eval_complex(s) / d)
    }

    /// Frequency response at `f_hz`, i.e. the value at `s = j·2π·f`.
    pub fn eval_jw(&self, f_hz: f64) -> Result<Complex64> {
        self.eval(Complex64::new(0.0, 2.0 * PI * f_hz))
    }

    /// `num(0)/den(0)`; infinite for a pole at the origin.
    pub fn dc_gain(&self) -> f64 {
        let d = self.den.coeffs()[0];
        let n = self.num.coeffs()[0];
        if d == 0.0 {
            if n == 0.0 { f64::NAN } else { f64::INFINITY }
        } else {
            n / d
        }
    }

    pub fn scale(&self, k: f64) -> Self {
        Self { num: self.num.scale(k), den: self.den.clone() }
    }

    pub fn mul(&self, other: &RationalTf) -> Self {
        Self::new(&self.num * &other.num, &self.den * &other.den).expect("product of nonzero denominators")
    }

    pub fn add(&self, other: &RationalTf) -> Self {
        let num = &(&self.num * &other.den) + &(&other.num * &self.den);
        Self::new(num, &self.den * &other.den).expect("product of nonzero denominators")
    }

    pub fn reciprocal(&self) -> Result<Self> {
        Self::new(self.den.clone(), self.num.clone())
    }

    pub fn div(&self, other: &RationalTf) -> Result<Self> {
        Self::new(&self.num * &other.den, &self.den * &other.num)
    }

    /// `G / (1 + G)`
    pub fn unity_feedback(&self) -> Result<Self> {
        Self::new(self.num.clone(), &self.den + &self.num)
    }

    /// Characteristic polynomial `den + k·num` of unity feedback around `k·G`.
    pub fn closed_loop_characteristic(&self, k: f64) -> Polynomial {
        &self.den + &self.num.scale(k)
    }

    pub fn poles(&self) -> Result<Vec<Complex64>> {
        self.den.roots()
    }

    pub fn zeros(&self) -> Result<Vec<Complex64>> {
        self.num.roots()
    }

    /// Removes numerator/denominator factors whose roots coincide within
    /// `rel_tol`, keeping the DC gain unchanged.
    pub fn cancel_common_factors(&self, rel_tol: f64) -> Result<Self> {
        if self.num.is_zero() || self.num.degree() == 0 || self.den.degree() == 0 {
            return Ok(self.clone());
        }
        let zs = self.zeros()?;
        let ps = self.poles()?;
        let mut zero_used = vec![false; zs.len()];
        let mut pole_used = vec![false; ps.len()];
        for (pi, p) in ps.iter().enumerate() {
            if pole_used[pi] {
                continue;
            }
            let tol = rel_tol * p.norm().max(f64::MIN_POSITIVE);
            let nearest = |target: Complex64, pool: &[Complex64], used: &[bool], skip: Option<usize>| {
                pool.iter()
                    .enumerate()
                    .filter(|(j, z)| !used[*j] && Some(*j) != skip && (*z - target).norm() <= tol)
                    .min_by(|a, b| (a.1 - target).norm().total_cmp(&(b.1 - target).norm()))
                    .map(|(j, _)| j)
            };
            let Some(zi) = nearest(*p, &zs, &zero_used, None) else { continue };
            if p.im == 0.0 {
                zero_used[zi] = true;
                pole_used[pi] = true;
                continue;
            }
            // a complex root cancels only together with its conjugate
            let conj_pole = nearest(p.conj(), &ps, &pole_used, Some(pi));
            let conj_zero = nearest(p.conj(), &zs, &zero_used, Some(zi));
            if let (Some(pj), Some(zj)) = (conj_pole, conj_zero) {
                zero_used[zi] = true;
                zero_used[zj] = true;
                pole_used[pi] = true;
                pole_used[pj] = true;
            }
        }
        if !zero_used.iter().any(|&u| u) {
            return Ok(self.clone());
        }
        // rebuild from the surviving roots; dividing the expanded polynomials
        // instead loses accuracy whenever the cancelled roots sit mid-spectrum
        let keep = |roots: &[Complex64], used: &[bool]| -> Vec<Complex64> {
            roots.iter().zip(used).filter(|(_, u)| !**u).map(|(r, _)| *r).collect()
        };
        let num = Polynomial::from_roots(&keep(&zs, &zero_used), self.num.leading());
        let den = Polynomial::from_roots(&keep(&ps, &pole_used), 1.0);
        let reduced = Self::new(num, den)?;
        // the rebuilt product drifts in its constant term by round-off; pin the DC gain
        let (before, after) = (self.dc_gain(), reduced.dc_gain());
        if before.is_finite() && after.is_finite() && before != 0.0 && after != 0.0 {
            return Ok(reduced.scale(before / after));
        }
        Ok(reduced)
    }
}

impl fmt::Debug for RationalTf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RationalTf {{ num: {:?}, den: {:?} }}", self.num, self.den)
    }
}

impl fmt::Display for RationalTf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) / ({})", self.num, self.den)
    }
}
