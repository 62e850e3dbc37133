//! Parameterization of the `n`-th double-ended queue.

mod arrival;
mod hazard;
mod limit;
mod patience;

pub use arrival::{sample_interarrival, InterArrivalFamily, InterArrivalSpec};
pub use hazard::{Hazard, PiecewiseHazard};
pub use limit::{FnLimit, LimitFn, LimitH};
pub use patience::{
    limit_error, limit_h, limit_h_at, patience_cdf, FixedBase, FixedCdf, PatienceSpec,
};

use crate::error::{invalid, Error, Result};
use crate::math;

/// Customer class, `+1` or `-1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Class {
    Plus,
    Minus,
}

impl Class {
    pub const BOTH: [Class; 2] = [Class::Plus, Class::Minus];

    pub fn opposite(self) -> Class {
        match self {
            Class::Plus => Class::Minus,
            Class::Minus => Class::Plus,
        }
    }

    pub fn sign(self) -> i64 {
        match self {
            Class::Plus => 1,
            Class::Minus => -1,
        }
    }

    /// 0 for `+1`, 1 for `-1`; used to index per-class pairs.
    pub fn index(self) -> usize {
        match self {
            Class::Plus => 0,
            Class::Minus => 1,
        }
    }
}

/// Rule for the initial class-1 queue `Q_1(0)`; `Q_-1(0)` is always 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitialQueue {
    /// The same count for every `n`.
    Count(u64),
    /// `round(sqrt(n) q)` for a diffusion-scale initial value `q >= 0`.
    Diffusion(f64),
}

impl InitialQueue {
    pub fn count(&self, n: u64) -> u64 {
        match *self {
            InitialQueue::Count(k) => k,
            InitialQueue::Diffusion(q) => math::round(math::sqrt(n as f64) * q) as u64,
        }
    }
}

/// Full parameterization of the sequence of systems.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    lambda: f64,
    c: f64,
    arrival: [InterArrivalSpec; 2],
    patience: [PatienceSpec; 2],
    q0: InitialQueue,
}

impl ModelConfig {
    /// Validates the parameters. Both inter-arrival laws must have mean
    /// `1 / lambda`; the class-1 mean is shifted per `n` by [`effective_rates`].
    pub fn new(
        lambda: f64,
        c: f64,
        arrival_plus: InterArrivalSpec,
        arrival_minus: InterArrivalSpec,
        patience_plus: PatienceSpec,
        patience_minus: PatienceSpec,
        q0: InitialQueue,
    ) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(invalid("lambda", "must be finite and positive"));
        }
        if !c.is_finite() {
            return Err(invalid("c", "must be finite"));
        }
        for spec in [&arrival_plus, &arrival_minus] {
            if (spec.mean() * lambda - 1.0).abs() > 1e-9 {
                return Err(invalid("arrival", "inter-arrival mean must equal 1/lambda"));
            }
        }
        if let InitialQueue::Diffusion(q) = q0 {
            if !(q.is_finite() && q >= 0.0) {
                return Err(invalid(
                    "q0",
                    "diffusion-scale initial value must be finite and nonnegative",
                ));
            }
        }
        Ok(ModelConfig {
            lambda,
            c,
            arrival: [arrival_plus, arrival_minus],
            patience: [patience_plus, patience_minus],
            q0,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn arrival(&self, class: Class) -> &InterArrivalSpec {
        &self.arrival[class.index()]
    }

    pub fn patience(&self, class: Class) -> &PatienceSpec {
        &self.patience[class.index()]
    }

    pub fn q0(&self) -> InitialQueue {
        self.q0
    }

    /// Limit variance `sigma_i^2` of `u~_i` (the law rescaled to mean `1/lambda`).
    pub fn sigma_sq(&self, class: Class) -> f64 {
        self.arrival(class).scv() / (self.lambda * self.lambda)
    }

    /// Mean of the pre-scaling inter-arrival time `u~_i` in the `n`-th system.
    pub fn class_mean(&self, class: Class, n: u64) -> Result<f64> {
        let (plus, minus) = effective_rates(self, n)?;
        let n = n as f64;
        Ok(match class {
            Class::Plus => n / plus,
            Class::Minus => n / minus,
        })
    }

    pub fn with_c(&self, c: f64) -> Self {
        ModelConfig { c, ..self.clone() }
    }

    pub fn with_q0(&self, q0: InitialQueue) -> Self {
        ModelConfig { q0, ..self.clone() }
    }

    pub fn with_patience(&self, plus: PatienceSpec, minus: PatienceSpec) -> Self {
        ModelConfig {
            patience: [plus, minus],
            ..self.clone()
        }
    }
}

/// Arrival rates `(lambda^n_1, lambda^n_-1) = (n lambda + c sqrt(n), n lambda)`,
/// so that `(lambda^n_1 - lambda^n_-1) / sqrt(n) = c` at every `n`.
pub fn effective_rates(config: &ModelConfig, n: u64) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    let root_n = math::sqrt(n as f64);
    let per_unit = config.lambda + config.c / root_n;
    if !(per_unit > 0.0) {
        return Err(Error::NonPositiveRate { n, rate: per_unit });
    }
    let nf = n as f64;
    Ok((nf * config.lambda + config.c * root_n, nf * config.lambda))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(lambda: f64, c: f64) -> ModelConfig {
        ModelConfig::new(
            lambda,
            c,
            InterArrivalSpec::exponential(1.0 / lambda).unwrap(),
            InterArrivalSpec::exponential(1.0 / lambda).unwrap(),
            PatienceSpec::None,
            PatienceSpec::None,
            InitialQueue::Count(0),
        )
        .unwrap()
    }

    #[test]
    fn rates_examples() {
        assert_eq!(
            effective_rates(&config(1.0, 2.0), 100).unwrap(),
            (120.0, 100.0)
        );
        assert_eq!(effective_rates(&config(1.0, 0.0), 1).unwrap(), (1.0, 1.0));
        assert!(matches!(
            effective_rates(&config(1.0, -3.0), 4),
            Err(Error::NonPositiveRate { .. })
        ));
    }

    #[test]
    fn drift_is_exact_at_every_n() {
        for &n in &[1u64, 4, 100, 12_345, 1_000_000] {
            let (a, b) = effective_rates(&config(2.5, -1.25), n).unwrap();
            assert!(((a - b) / (n as f64).sqrt() + 1.25).abs() < 1e-9);
        }
    }

    #[test]
    fn class_means() {
        let cfg = config(1.0, 2.0);
        assert!((cfg.class_mean(Class::Plus, 100).unwrap() - 1.0 / 1.2).abs() < 1e-15);
        assert_eq!(cfg.class_mean(Class::Minus, 100).unwrap(), 1.0);
    }

    #[test]
    fn mean_must_match_lambda() {
        let bad = ModelConfig::new(
            2.0,
            0.0,
            InterArrivalSpec::exponential(1.0).unwrap(),
            InterArrivalSpec::exponential(0.5).unwrap(),
            PatienceSpec::None,
            PatienceSpec::None,
            InitialQueue::Count(0),
        );
        assert!(bad.is_err());
    }

    #[test]
    fn initial_queue_rule() {
        assert_eq!(InitialQueue::Diffusion(1.5).count(16), 6);
        assert_eq!(InitialQueue::Count(3).count(1000), 3);
    }
}
