//! Estimation and detection figures of merit.

use crate::dsp::{energy, C64};
use crate::error::{Error, Result};

/// `||est - truth||^2 / ||truth||^2`.
pub fn nmse(estimate: &[C64], truth: &[C64]) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(Error::Length {
            what: "channel estimate",
            expected: truth.len(),
            actual: estimate.len(),
        });
    }
    let norm = energy(truth);
    if norm == 0.0 {
        return Err(Error::ZeroEnergy("true channel"));
    }
    Ok(estimate.iter().zip(truth).map(|(e, t)| (e - t).norm_sqr()).sum::<f64>() / norm)
}

/// Number of differing bits.
pub fn bit_errors(rx: &[u8], tx: &[u8]) -> Result<usize> {
    if rx.len() != tx.len() {
        return Err(Error::Length {
            what: "received bits",
            expected: tx.len(),
            actual: rx.len(),
        });
    }
    Ok(rx.iter().zip(tx).filter(|(a, b)| a != b).count())
}

/// Fraction of differing bits.
pub fn ber(rx: &[u8], tx: &[u8]) -> Result<f64> {
    if tx.is_empty() {
        return Err(Error::Empty("bit sequence"));
    }
    Ok(bit_errors(rx, tx)? as f64 / tx.len() as f64)
}

/// Running mean and standard error (Welford).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MeanStat {
    n: usize,
    mean: f64,
    m2: f64,
}

impl MeanStat {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero below two samples.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}
