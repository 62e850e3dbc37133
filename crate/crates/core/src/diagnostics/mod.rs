//! Empirical distributions, Kolmogorov-Smirnov distances, and the
//! compensator check for the abandonment process.

mod compensator;

pub use compensator::{
    compensator, compensator_at, martingale_increment_test, martingale_test, martingale_test_with,
    terminal_gap, ClassReport, IncrementReport, MartingaleReport,
};

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Sorted sample.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalDistribution {
    sorted: Vec<f64>,
}

impl EmpiricalDistribution {
    /// Rejects empty samples and NaN.
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySample);
        }
        if samples.iter().any(|v| v.is_nan()) {
            return Err(Error::NotANumber);
        }
        samples.sort_by(f64::total_cmp);
        Ok(EmpiricalDistribution { sorted: samples })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    /// Fraction of samples `<= x`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    /// Sample quantile by the nearest-rank rule.
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.sorted.len();
        let rank = math::round(p.clamp(0.0, 1.0) * (n - 1) as f64) as usize;
        self.sorted[rank]
    }

    pub fn mean(&self) -> f64 {
        mean_se(&self.sorted).0
    }
}

/// `sup_x |F_emp(x) - cdf(x)|`, attained at a sample point from the left or right.
pub fn ks_distance<F: Fn(f64) -> f64>(e: &EmpiricalDistribution, cdf: F) -> f64 {
    let n = e.len() as f64;
    let mut worst = 0.0f64;
    for (i, &x) in e.sorted.iter().enumerate() {
        let f = cdf(x);
        worst = worst
            .max((i as f64 / n - f).abs())
            .max(((i + 1) as f64 / n - f).abs());
    }
    worst
}

/// Two-sample statistic `sup_x |F_a(x) - F_b(x)|`, exact including ties.
pub fn ks_two_sample(a: &EmpiricalDistribution, b: &EmpiricalDistribution) -> f64 {
    let (xa, xb) = (&a.sorted, &b.sorted);
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut worst = 0.0f64;
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        worst = worst.max((i as f64 / na - j as f64 / nb).abs());
    }
    worst
}

/// Sample mean and its standard error (`sd / sqrt(len)`).
pub fn mean_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = samples.iter().map(|v| (v - mean) * (v - mean)).sum();
    let var = ss / (n - 1) as f64;
    (mean, math::sqrt(var / n as f64))
}

/// Sample variance and its standard error under a normal-theory
/// approximation using the fourth central moment.
pub fn variance_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let (mean, _) = mean_se(samples);
    let m2 = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let m4 = samples
        .iter()
        .map(|v| libm::pow(v - mean, 4.0))
        .sum::<f64>()
        / n;
    let var = m2 * n / (n - 1.0);
    (var, math::sqrt(((m4 - m2 * m2) / n).max(0.0)))
}

/// Dvoretzky-Kiefer-Wolfowitz radius: `sup |F_emp - F| <= eps` with
/// probability at least `1 - alpha` for a sample of size `len`.
pub fn dkw_radius(len: usize, alpha: f64) -> f64 {
    math::sqrt(math::ln(2.0 / alpha) / (2.0 * len as f64))
}
