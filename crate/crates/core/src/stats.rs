//! Small statistics helpers for the Monte Carlo layer.

use serde::{Deserialize, Serialize};

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// A binomial proportion with its 95% Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityEstimate {
    pub successes: usize,
    pub trials: usize,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl ProbabilityEstimate {
    pub fn new(successes: usize, trials: usize) -> Self {
        assert!(
            trials > 0 && successes <= trials,
            "{successes} successes in {trials} trials"
        );
        let p_hat = successes as f64 / trials as f64;
        let (lo, hi) = wilson_interval(successes, trials, Z_95);
        Self {
            successes,
            trials,
            p_hat,
            ci_low: lo.min(p_hat),
            ci_high: hi.max(p_hat),
        }
    }
}

pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Running sum and sum of squares, merged in a fixed order by the caller.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MeanAccumulator {
    pub count: usize,
    pub sum: f64,
    pub sum_sq: f64,
}

impl MeanAccumulator {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.count as f64
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        let n = self.count as f64;
        let var = (self.sum_sq - self.sum * self.sum / n) / (n - 1.0);
        (var.max(0.0) / n).sqrt()
    }
}

/// One-sample Kolmogorov-Smirnov statistic. Sorts `samples` in place.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic p-value of the KS statistic `d` for `n` samples (Kolmogorov
/// series with Stephens' small-sample correction).
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let jf = j as f64;
        let term = (-2.0 * jf * jf * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_brackets_estimate() {
        for (s, n) in [(0, 10), (10, 10), (9_980, 10_000), (5, 11)] {
            let p = ProbabilityEstimate::new(s, n);
            assert!(p.ci_low <= p.p_hat && p.p_hat <= p.ci_high);
            assert!(p.ci_low >= 0.0 && p.ci_high <= 1.0);
        }
        let p = ProbabilityEstimate::new(9_980, 10_000);
        assert!(p.ci_high - p.ci_low < 0.006);
    }

    #[test]
    fn ks_critical_value() {
        // The 1% critical value of sqrt(n) D is about 1.628 for large n.
        let p = ks_p_value(1.6276 / 1000.0, 1_000_000);
        assert!((p - 0.01).abs() < 2e-4, "{p}");
        assert_eq!(ks_p_value(0.0, 100), 1.0);
    }

    #[test]
    fn ks_uniform_grid_is_small() {
        let mut xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let d = ks_statistic(&mut xs, |x| x);
        assert!((d - 0.0005).abs() < 1e-12);
    }

    #[test]
    fn mean_accumulator() {
        let mut acc = MeanAccumulator::default();
        for x in [1.0, 2.0, 3.0, 4.0] {
            acc.push(x);
        }
        assert_eq!(acc.mean(), 2.5);
        assert!((acc.std_error() - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }
}
