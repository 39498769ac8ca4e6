//! Polynomial and rational transfer-function algebra, and the exact builders of
//! the actuation-line blocks.

mod blocks;
mod poly;
mod rational;
mod roots;

pub use blocks::{build_blocks, build_hf, build_hp, candidate_tf, Blocks, Candidate, Channel};
pub use poly::Polynomial;
pub use rational::{RationalTf, CANCEL_TOLERANCE};
pub use roots::{polynomial_roots, residual_ok, MAX_ITERATIONS};


use num_complex::Complex64;

use crate::error::Result;

/// Sampled complex frequency response, frequencies in Hz, strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyResponse {
    pub freqs_hz: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl FrequencyResponse {
    pub fn new(freqs_hz: Vec<f64>, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(freqs_hz.len(), values.len());
        debug_assert!(freqs_hz.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(freqs_hz.iter().all(|&f| f > 0.0));
        Self { freqs_hz, values }
    }

    /// Evaluates `g` on the given grid.
    pub fn of(g: &RationalTf, freqs_hz: &[f64]) -> Result<Self> {
        let values = freqs_hz.iter().map(|&f| g.eval_jw(f)).collect::<Result<Vec<_>>>()?;
        Ok(Self::new(freqs_hz.to_vec(), values))
    }

    pub fn len(&self) -> usize {
        self.freqs_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs_hz.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, Complex64)> + '_ {
        self.freqs_hz.iter().copied().zip(self.values.iter().copied())
    }
}

/// `n` logarithmically spaced frequencies from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}
