use super::hazard::Hazard;
use crate::quad;

/// A patience scaling limit `H`: nonnegative, nondecreasing, locally
/// Lipschitz on `[0, inf)`.
///
/// The provided methods fall back to numerics; [`LimitH`] overrides them
/// with closed forms.
pub trait LimitFn {
    fn eval(&self, x: f64) -> f64;

    /// `lim_{x -> inf} H(x)`.
    fn limit_at_infinity(&self) -> f64;

    /// A Lipschitz constant of `H` on `[0, upper]`, estimated as the largest
    /// chord slope over a 10^4-point grid.
    fn lipschitz_on(&self, upper: f64) -> f64 {
        const POINTS: usize = 10_000;
        if !(upper > 0.0) {
            return 0.0;
        }
        let dx = upper / POINTS as f64;
        let mut prev = self.eval(0.0);
        let mut best = 0.0f64;
        for j in 1..=POINTS {
            let cur = self.eval(j as f64 * dx);
            best = best.max((cur - prev).abs() / dx);
            prev = cur;
        }
        best
    }

    /// `int_0^y H(u) du` for `y >= 0`.
    fn antiderivative(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        quad::integrate(|u| self.eval(u), 0.0, y, 1e-14, 1e-12).0
    }

    /// Right derivative at 0.
    fn slope_at_zero(&self) -> f64 {
        let eps = 1e-7;
        (self.eval(eps) - self.eval(0.0)) / eps
    }
}

impl<T: LimitFn + ?Sized> LimitFn for &T {
    fn eval(&self, x: f64) -> f64 {
        (**self).eval(x)
    }
    fn limit_at_infinity(&self) -> f64 {
        (**self).limit_at_infinity()
    }
    fn lipschitz_on(&self, upper: f64) -> f64 {
        (**self).lipschitz_on(upper)
    }
    fn antiderivative(&self, y: f64) -> f64 {
        (**self).antiderivative(y)
    }
    fn slope_at_zero(&self) -> f64 {
        (**self).slope_at_zero()
    }
}

/// The supported closed-form limits.
#[derive(Clone, Debug, PartialEq)]
pub enum LimitH {
    /// No reneging.
    Zero,
    /// `H(x) = slope * x`, the limit of any fixed CDF with `F'(0+) = slope`.
    Linear { slope: f64 },
    /// `H(x) = int_0^x h`, the limit under hazard-rate scaling.
    Integrated(Hazard),
}

impl LimitH {
    pub fn identity() -> Self {
        LimitH::Linear { slope: 1.0 }
    }

    /// The base hazard `h = H'`, when `H` is an integrated hazard.
    pub fn hazard(&self) -> Option<&Hazard> {
        match self {
            LimitH::Integrated(h) => Some(h),
            _ => None,
        }
    }
}

impl LimitFn for LimitH {
    fn eval(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        match self {
            LimitH::Zero => 0.0,
            LimitH::Linear { slope } => slope * x,
            LimitH::Integrated(h) => h.integral(x),
        }
    }

    fn limit_at_infinity(&self) -> f64 {
        match self {
            LimitH::Zero => 0.0,
            LimitH::Linear { slope } => {
                if *slope > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            LimitH::Integrated(h) => h.total(),
        }
    }

    fn lipschitz_on(&self, upper: f64) -> f64 {
        match self {
            LimitH::Zero => 0.0,
            LimitH::Linear { slope } => *slope,
            LimitH::Integrated(h) => h.sup_on(upper),
        }
    }

    fn antiderivative(&self, y: f64) -> f64 {
        let y = y.max(0.0);
        match self {
            LimitH::Zero => 0.0,
            LimitH::Linear { slope } => 0.5 * slope * y * y,
            LimitH::Integrated(h) => h.double_integral(y),
        }
    }

    fn slope_at_zero(&self) -> f64 {
        match self {
            LimitH::Zero => 0.0,
            LimitH::Linear { slope } => *slope,
            LimitH::Integrated(h) => h.rate(0.0),
        }
    }
}

/// Wraps an arbitrary closure as a limit function; all derived quantities
/// use the numeric fallbacks.
#[derive(Clone, Copy)]
pub struct FnLimit<F> {
    f: F,
    at_infinity: f64,
}

impl<F: Fn(f64) -> f64> FnLimit<F> {
    pub fn new(f: F, at_infinity: f64) -> Self {
        FnLimit { f, at_infinity }
    }
}

impl<F: Fn(f64) -> f64> LimitFn for FnLimit<F> {
    fn eval(&self, x: f64) -> f64 {
        (self.f)(x.max(0.0))
    }

    fn limit_at_infinity(&self) -> f64 {
        self.at_infinity
    }
}
