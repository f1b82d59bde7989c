//! Replication statistics with a fixed summation order.

use serde::{Deserialize, Serialize};

/// Pairwise (cascade) summation. The split points depend only on the length,
/// so the result is identical for identical inputs regardless of how the
/// values were produced.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (divisor `n - 1`).
    pub sd: f64,
    /// `sd / sqrt(n)`.
    pub stderr: f64,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Summary {
        let n = xs.len();
        let mean = pairwise_sum(xs) / n as f64;
        let sq: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
        let var = if n > 1 { pairwise_sum(&sq) / (n - 1) as f64 } else { 0.0 };
        let sd = var.sqrt();
        Summary {
            n,
            mean,
            sd,
            stderr: sd / (n as f64).sqrt(),
        }
    }

    /// z-score of the mean against a reference value.
    pub fn z_against(&self, reference: f64) -> f64 {
        (self.mean - reference) / self.stderr
    }
}

/// Two-sample z statistic for the difference of means.
pub fn two_sample_z(a: &Summary, b: &Summary) -> f64 {
    (a.mean - b.mean) / (a.stderr * a.stderr + b.stderr * b.stderr).sqrt()
}
