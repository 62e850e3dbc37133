use rand_distr::{Distribution, Exp1};

use super::hazard::Hazard;
use super::limit::{LimitFn, LimitH};
use crate::error::{invalid, Result};
use crate::math;
use crate::rng::RngStream;

/// Base law of an `n`-independent patience CDF.
#[derive(Clone, Debug, PartialEq)]
pub enum FixedBase {
    Exponential {
        rate: f64,
    },
    /// Uniform on `(0, upper)`.
    Uniform {
        upper: f64,
    },
}

/// An `n`-independent patience CDF, optionally truncated at `delta`
/// (`F(x) = 1` for `x >= delta`).
#[derive(Clone, Debug, PartialEq)]
pub struct FixedCdf {
    base: FixedBase,
    truncate_at: Option<f64>,
}

impl FixedCdf {
    pub fn new(base: FixedBase, truncate_at: Option<f64>) -> Result<Self> {
        match base {
            FixedBase::Exponential { rate } if !(rate.is_finite() && rate > 0.0) => {
                return Err(invalid("rate", "must be finite and positive"))
            }
            FixedBase::Uniform { upper } if !(upper.is_finite() && upper > 0.0) => {
                return Err(invalid("upper", "must be finite and positive"))
            }
            _ => {}
        }
        if let Some(d) = truncate_at {
            if !(d.is_finite() && d > 0.0) {
                return Err(invalid("truncate_at", "must be finite and positive"));
            }
        }
        Ok(FixedCdf { base, truncate_at })
    }

    pub fn base(&self) -> &FixedBase {
        &self.base
    }

    pub fn truncate_at(&self) -> Option<f64> {
        self.truncate_at
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if matches!(self.truncate_at, Some(d) if x >= d) {
            return 1.0;
        }
        match self.base {
            FixedBase::Exponential { rate } => -math::expm1(-rate * x),
            FixedBase::Uniform { upper } => (x / upper).min(1.0),
        }
    }

    /// `F'(0+)`.
    pub fn slope_at_zero(&self) -> f64 {
        match self.base {
            FixedBase::Exponential { rate } => rate,
            FixedBase::Uniform { upper } => 1.0 / upper,
        }
    }

    fn sample(&self, rng: &mut RngStream) -> f64 {
        let d = match self.base {
            FixedBase::Exponential { rate } => {
                let e: f64 = Exp1.sample(rng);
                e / rate
            }
            FixedBase::Uniform { upper } => upper * rng.open01(),
        };
        match self.truncate_at {
            Some(delta) => d.min(delta),
            None => d,
        }
    }
}

/// Patience law of one class in the `n`-th system.
#[derive(Clone, Debug, PartialEq)]
pub enum PatienceSpec {
    /// `F^n = F` for all `n`.
    FixedCdf(FixedCdf),
    /// `F^n(x) = 1 - exp(-int_0^x h(sqrt(n) u) du)`.
    HazardScaled(Hazard),
    /// Infinite patience; reneging disabled.
    None,
}

impl PatienceSpec {
    pub fn exponential(rate: f64) -> Result<Self> {
        Ok(PatienceSpec::FixedCdf(FixedCdf::new(
            FixedBase::Exponential { rate },
            None,
        )?))
    }

    pub fn constant_hazard(rate: f64) -> Result<Self> {
        Ok(PatienceSpec::HazardScaled(Hazard::constant(rate)?))
    }

    pub fn hazard(&self) -> Option<&Hazard> {
        match self {
            PatienceSpec::HazardScaled(h) => Some(h),
            _ => None,
        }
    }

    /// Draws one patience time for the `n`-th system; `+inf` when the
    /// customer never reneges.
    pub fn sample(&self, n: u64, rng: &mut RngStream) -> f64 {
        match self {
            PatienceSpec::FixedCdf(f) => f.sample(rng),
            PatienceSpec::HazardScaled(h) => {
                // int_0^x h(sqrt(n) u) du = H(sqrt(n) x) / sqrt(n) = E
                let e: f64 = Exp1.sample(rng);
                let root_n = math::sqrt(n as f64);
                match h.inverse_integral(root_n * e) {
                    Some(v) => v / root_n,
                    None => f64::INFINITY,
                }
            }
            PatienceSpec::None => f64::INFINITY,
        }
    }

    /// `int_0^a h^n(u) du` with `h^n(u) = h(sqrt(n) u)`.
    pub fn scaled_cumulative_hazard(hazard: &Hazard, n: u64, a: f64) -> f64 {
        let root_n = math::sqrt(n as f64);
        hazard.integral(root_n * a) / root_n
    }
}

/// `F^n(x)` for the given spec.
pub fn patience_cdf(spec: &PatienceSpec, n: u64, x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(invalid("x", "patience CDF needs x >= 0"));
    }
    Ok(match spec {
        PatienceSpec::FixedCdf(f) => f.cdf(x),
        PatienceSpec::HazardScaled(h) => {
            -math::expm1(-PatienceSpec::scaled_cumulative_hazard(h, n, x))
        }
        PatienceSpec::None => 0.0,
    })
}

/// The scaling limit `H` of `sqrt(n) F^n(. / sqrt(n))`.
pub fn limit_h(spec: &PatienceSpec) -> LimitH {
    match spec {
        PatienceSpec::FixedCdf(f) => LimitH::Linear {
            slope: f.slope_at_zero(),
        },
        PatienceSpec::HazardScaled(h) => LimitH::Integrated(h.clone()),
        PatienceSpec::None => LimitH::Zero,
    }
}

/// `max_j |sqrt(n) F^n(x_j / sqrt(n)) - H(x_j)|` over `points` equally spaced
/// `x_j` in `[0, upper]`.
pub fn limit_error(spec: &PatienceSpec, n: u64, upper: f64, points: usize) -> f64 {
    let h = limit_h(spec);
    let root_n = math::sqrt(n as f64);
    let points = points.max(2);
    (0..points)
        .map(|j| {
            let x = upper * j as f64 / (points - 1) as f64;
            let scaled = root_n * patience_cdf(spec, n, x / root_n).unwrap_or(f64::NAN);
            (scaled - h.eval(x)).abs()
        })
        .fold(0.0, f64::max)
}

/// `H(x)` for the given spec.
pub fn limit_h_at(spec: &PatienceSpec, x: f64) -> f64 {
    limit_h(spec).eval(x)
}
