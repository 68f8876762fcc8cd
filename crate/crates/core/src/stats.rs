//! Sample means with standard errors.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    /// Standard error of `mean`; zero for a single batch.
    pub se: f64,
    /// Number of independent batches the estimate was formed from.
    pub batches: usize,
}

impl MeanEstimate {
    pub fn exact(mean: f64) -> Self {
        Self { mean, se: 0.0, batches: 0 }
    }

    /// Whether `value` lies within `k` standard errors (plus `slack`).
    pub fn agrees_with(&self, value: f64, k: f64, slack: f64) -> bool {
        (self.mean - value).abs() <= k * self.se + slack
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            mean: self.mean * s,
            se: self.se * s.abs(),
            batches: self.batches,
        }
    }

    pub fn offset(&self, c: f64) -> Self {
        Self {
            mean: self.mean + c,
            ..*self
        }
    }
}

/// Pairwise summation; the result depends only on the order of `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        xs.iter().sum()
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

/// Mean and standard error treating each entry as one independent batch.
pub fn mean_se(batch_means: &[f64]) -> MeanEstimate {
    let n = batch_means.len();
    if n == 0 {
        return MeanEstimate { mean: f64::NAN, se: f64::NAN, batches: 0 };
    }
    let mean = pairwise_sum(batch_means) / n as f64;
    let se = if n > 1 {
        let dev: Vec<f64> = batch_means.iter().map(|x| (x - mean) * (x - mean)).collect();
        (pairwise_sum(&dev) / (n - 1) as f64 / n as f64).sqrt()
    } else {
        0.0
    };
    MeanEstimate { mean, se, batches: n }
}

/// Standard error of the difference of two independent estimates.
pub fn combined_se(a: &MeanEstimate, b: &MeanEstimate) -> f64 {
    (a.se * a.se + b.se * b.se).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_se_of_small_sample() {
        let m = mean_se(&[1.0, 2.0, 3.0, 4.0]);
        assert!((m.mean - 2.5).abs() < 1e-15);
        // sample variance 5/3, se = sqrt(5/3/4)
        assert!((m.se - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn pairwise_matches_naive_on_integers() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 499_500.0);
    }
}
