//! Simultaneous polynomial root finding (Aberth–Ehrlich iteration).
//!
//! The polynomial is first rescaled `s → ω·z` with `ω` a power of two close to the
//! geometric mean of the root magnitudes, so coefficient sets spanning many decades
//! (stiffness ~10⁵ against masses ~1) do not wreck the iteration. Each root is
//! frozen once its residual drops to the round-off level of the evaluation.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Iteration cap before reporting [`Error::NonConvergence`].
pub const MAX_ITERATIONS: usize = 500;

/// Roots of `Σ c_k s^k` (ascending coefficients) with multiplicity, sorted by
/// real then imaginary part. A constant polynomial has no roots.
pub fn polynomial_roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let mut c: Vec<f64> = coeffs.to_vec();
    while c.len() > 1 && c[c.len() - 1] == 0.0 {
        c.pop();
    }
    if c.len() <= 1 {
        return Ok(Vec::new());
    }
    // exact zero roots
    let zeros = c.iter().take_while(|&&x| x == 0.0).count();
    let mut roots = vec![Complex64::new(0.0, 0.0); zeros];
    let c = &c[zeros..];
    let n = c.len() - 1;
    if n == 0 {
        return Ok(roots);
    }

    let lead = c[n];
    let mean_mag = (c[0] / lead).abs().powf(1.0 / n as f64);
    let omega = 2f64.powi(mean_mag.log2().round() as i32);
    let mut monic = Vec::with_capacity(n + 1);
    let mut pw = 1.0;
    for &ck in c {
        monic.push(ck * pw / (lead * omega.powi(n as i32)));
        pw *= omega;
    }
    monic[n] = 1.0;

    let found = aberth(&monic)?;
    roots.extend(found.into_iter().map(|z| clean(z * omega)));
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(roots)
}

/// Residual bound used as the root-quality contract:
/// `|p(r)| ≤ 1e-8 · max|c_k| · max(1, |r|)^deg`.
pub fn residual_ok(coeffs: &[f64], r: Complex64) -> bool {
    let deg = coeffs.len().saturating_sub(1) as i32;
    let max_c = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let value = coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * r + c);
    value.norm() <= 1e-8 * max_c * r.norm().max(1.0).powi(deg)
}

fn aberth(monic: &[f64]) -> Result<Vec<Complex64>> {
    let n = monic.len() - 1;
    if n == 1 {
        return Ok(vec![Complex64::new(-monic[0], 0.0)]);
    }
    if n == 2 {
        return Ok(quadratic(monic[0], monic[1]).to_vec());
    }
    let deriv: Vec<f64> = monic.iter().enumerate().skip(1).map(|(k, &c)| k as f64 * c).collect();

    // Start on a circle of the mean root radius, off the real axis so conjugate
    // pairs can separate.
    let radius = monic[0].abs().powf(1.0 / n as f64).max(f64::MIN_POSITIVE);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(radius, 2.0 * PI * k as f64 / n as f64 + 0.4))
        .collect();
    let mut done = vec![false; n];
    let eps = f64::EPSILON;

    for _ in 0..MAX_ITERATIONS {
        let mut all_done = true;
        for i in 0..n {
            if done[i] {
                continue;
            }
            let zi = z[i];
            let (p, bound) = horner_with_bound(monic, zi);
            if p.norm() <= 4.0 * n as f64 * eps * bound {
                done[i] = true;
                continue;
            }
            all_done = false;
            let dp = horner(&deriv, zi);
            let ratio = p / dp;
            let mut repulsion = Complex64::new(0.0, 0.0);
            for (j, &zj) in z.iter().enumerate() {
                if j != i {
                    repulsion += (zi - zj).inv();
                }
            }
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if !step.re.is_finite() || !step.im.is_finite() {
                // coincident iterates: nudge and carry on
                z[i] = zi * Complex64::new(1.0 + 1e-7, 1e-7) + Complex64::new(1e-12, 1e-12);
                continue;
            }
            z[i] = zi - step;
            if step.norm() <= eps * z[i].norm() {
                done[i] = true;
            }
        }
        if all_done {
            return Ok(z);
        }
    }
    if done.iter().all(|&d| d) {
        Ok(z)
    } else {
        Err(Error::NonConvergence { iterations: MAX_ITERATIONS })
    }
}

fn quadratic(c0: f64, c1: f64) -> [Complex64; 2] {
    // z² + c1 z + c0, cancellation-free form
    let disc = c1 * c1 - 4.0 * c0;
    if disc >= 0.0 {
        let q = -0.5 * (c1 + c1.signum() * disc.sqrt());
        if q == 0.0 {
            return [Complex64::new(0.0, 0.0); 2];
        }
        [Complex64::new(q, 0.0), Complex64::new(c0 / q, 0.0)]
    } else {
        let re = -0.5 * c1;
        let im = 0.5 * (-disc).sqrt();
        [Complex64::new(re, im), Complex64::new(re, -im)]
    }
}

fn horner(c: &[f64], z: Complex64) -> Complex64 {
    c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &ck| acc * z + ck)
}

fn horner_with_bound(c: &[f64], z: Complex64) -> (Complex64, f64) {
    let r = z.norm();
    let mut p = Complex64::new(0.0, 0.0);
    let mut b = 0.0;
    for &ck in c.iter().rev() {
        p = p * z + ck;
        b = b * r + ck.abs();
    }
    (p, b)
}

fn clean(z: Complex64) -> Complex64 {
    if z.im.abs() <= 1e-12 * z.norm() {
        Complex64::new(z.re, 0.0)
    } else {
        z
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * b.norm().max(1.0)
    }

    #[test]
    fn first_order() {
        let r = polynomial_roots(&[1.0, 0.01]).unwrap();
        assert_eq!(r.len(), 1);
        assert!(close(r[0], Complex64::new(-100.0, 0.0), 1e-14));
    }

    #[test]
    fn complex_pair() {
        let r = polynomial_roots(&[5.0, 2.0, 1.0]).unwrap();
        assert!(close(r[0], Complex64::new(-1.0, -2.0), 1e-14));
        assert!(close(r[1], Complex64::new(-1.0, 2.0), 1e-14));
    }

    #[test]
    fn constant_and_zero_roots() {
        assert!(polynomial_roots(&[3.0]).unwrap().is_empty());
        assert!(polynomial_roots(&[3.0, 0.0]).unwrap().is_empty());
        let r = polynomial_roots(&[0.0, 0.0, 2.0, 2.0]).unwrap();
        assert_eq!(r.len(), 3);
        assert_eq!(r.iter().filter(|z| z.norm() == 0.0).count(), 2);
        assert!(close(r[0], Complex64::new(-1.0, 0.0), 1e-14));
    }

    #[test]
    fn higher_degree_mixed_scales() {
        // (s+1)(s+10)(s+100)(s+1000)(s² + 2s + 101)
        let roots = [
            Complex64::new(-1.0, 0.0),
            Complex64::new(-10.0, 0.0),
            Complex64::new(-100.0, 0.0),
            Complex64::new(-1000.0, 0.0),
            Complex64::new(-1.0, 10.0),
            Complex64::new(-1.0, -10.0),
        ];
        let p = crate::tf::Polynomial::from_roots(&roots, 3.0);
        let found = polynomial_roots(p.coeffs()).unwrap();
        assert_eq!(found.len(), 6);
        for r in &roots {
            let best = found.iter().map(|f| (f - r).norm() / r.norm()).fold(f64::INFINITY, f64::min);
            assert!(best < 1e-10, "{r}: {best}");
        }
        for f in &found {
            assert!(residual_ok(p.coeffs(), *f));
        }
    }

    #[test]
    fn triple_root() {
        let r = polynomial_roots(&[1.0, 3.0, 3.0, 1.0]).unwrap();
        assert_eq!(r.len(), 3);
        for z in r {
            assert!((z - Complex64::new(-1.0, 0.0)).norm() < 1e-4, "{z}");
        }
    }
}
