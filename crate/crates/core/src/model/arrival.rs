use rand_distr::{Distribution, Exp1, Gamma};

use crate::error::{invalid, Result};
use crate::math;
use crate::rng::RngStream;

/// Family of the pre-scaling inter-arrival law `u~`.
#[derive(Clone, Debug, PartialEq)]
pub enum InterArrivalFamily {
    Exponential {
        mean: f64,
    },
    Gamma {
        shape: f64,
        mean: f64,
    },
    Deterministic {
        value: f64,
    },
    Uniform {
        low: f64,
        high: f64,
    },
    /// Mixture: with probability `p` an exponential of mean `mean1`, else of mean `mean2`.
    HyperExponential2 {
        p: f64,
        mean1: f64,
        mean2: f64,
    },
}

/// A validated inter-arrival law with its analytic mean and standard deviation.
#[derive(Clone, Debug, PartialEq)]
pub struct InterArrivalSpec {
    family: InterArrivalFamily,
    mean: f64,
    sd: f64,
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, "must be finite and positive"))
    }
}

impl InterArrivalSpec {
    pub fn new(family: InterArrivalFamily) -> Result<Self> {
        let (mean, sd) = match family {
            InterArrivalFamily::Exponential { mean } => {
                positive("mean", mean)?;
                (mean, mean)
            }
            InterArrivalFamily::Gamma { shape, mean } => {
                positive("shape", shape)?;
                positive("mean", mean)?;
                (mean, mean / math::sqrt(shape))
            }
            InterArrivalFamily::Deterministic { value } => {
                positive("value", value)?;
                (value, 0.0)
            }
            InterArrivalFamily::Uniform { low, high } => {
                if !(low.is_finite() && high.is_finite() && low >= 0.0 && high > low) {
                    return Err(invalid("low/high", "need 0 <= low < high"));
                }
                ((low + high) / 2.0, (high - low) / math::sqrt(12.0))
            }
            InterArrivalFamily::HyperExponential2 { p, mean1, mean2 } => {
                if !(p > 0.0 && p < 1.0) {
                    return Err(invalid("p", "must lie in (0, 1)"));
                }
                positive("mean1", mean1)?;
                positive("mean2", mean2)?;
                let m = p * mean1 + (1.0 - p) * mean2;
                let second = 2.0 * (p * mean1 * mean1 + (1.0 - p) * mean2 * mean2);
                (m, math::sqrt(second - m * m))
            }
        };
        Ok(InterArrivalSpec { family, mean, sd })
    }

    pub fn exponential(mean: f64) -> Result<Self> {
        Self::new(InterArrivalFamily::Exponential { mean })
    }

    pub fn gamma(shape: f64, mean: f64) -> Result<Self> {
        Self::new(InterArrivalFamily::Gamma { shape, mean })
    }

    pub fn deterministic(value: f64) -> Result<Self> {
        Self::new(InterArrivalFamily::Deterministic { value })
    }

    pub fn family(&self) -> &InterArrivalFamily {
        &self.family
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn sd(&self) -> f64 {
        self.sd
    }

    /// Squared coefficient of variation `sd^2 / mean^2`; invariant under rescaling.
    pub fn scv(&self) -> f64 {
        (self.sd / self.mean) * (self.sd / self.mean)
    }

    /// One draw from the unscaled law.
    fn draw(&self, rng: &mut RngStream) -> f64 {
        match self.family {
            InterArrivalFamily::Exponential { mean } => {
                let e: f64 = Exp1.sample(rng);
                mean * e
            }
            InterArrivalFamily::Gamma { shape, mean } => {
                let g = Gamma::new(shape, mean / shape).expect("validated gamma parameters");
                g.sample(rng)
            }
            InterArrivalFamily::Deterministic { value } => value,
            InterArrivalFamily::Uniform { low, high } => low + (high - low) * rng.open01(),
            InterArrivalFamily::HyperExponential2 { p, mean1, mean2 } => {
                let m = if rng.open01() < p { mean1 } else { mean2 };
                let e: f64 = Exp1.sample(rng);
                m * e
            }
        }
    }
}

/// Draws `u~ / n` where `u~` follows the family of `spec` rescaled to mean
/// `mean_override`; the family and its squared coefficient of variation are
/// preserved.
pub fn sample_interarrival(
    spec: &InterArrivalSpec,
    n: u64,
    mean_override: f64,
    rng: &mut RngStream,
) -> f64 {
    debug_assert!(n >= 1 && mean_override > 0.0);
    let scale = mean_override / spec.mean;
    spec.draw(rng) * scale / n as f64
}
