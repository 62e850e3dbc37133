use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::math;

/// A base hazard rate `h` on `[0, inf)` whose integrals are available in
/// closed form.
///
/// Patience under hazard scaling has CDF `1 - exp(-int_0^x h(sqrt(n) u) du)`
/// and scaling limit `H(x) = int_0^x h`.
#[derive(Clone, Debug, PartialEq)]
pub enum Hazard {
    Constant(f64),
    /// `values[0]` on `[0, breaks[0])`, `values[j]` on `[breaks[j-1], breaks[j])`,
    /// and the last value on `[breaks.last(), inf)`.
    PiecewiseConstant(PiecewiseHazard),
    /// `h(u) = min(intercept + slope * u, cap)`.
    AffineCapped {
        intercept: f64,
        slope: f64,
        cap: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseHazard {
    breaks: Vec<f64>,
    values: Vec<f64>,
    // H and int H at each break
    cum: Vec<f64>,
    cum2: Vec<f64>,
}

impl PiecewiseHazard {
    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Index of the piece containing `u` and that piece's left end.
    fn piece(&self, u: f64) -> (usize, f64) {
        let j = self.breaks.partition_point(|&b| b <= u);
        let left = if j == 0 { 0.0 } else { self.breaks[j - 1] };
        (j, left)
    }

    fn start(&self, j: usize) -> (f64, f64) {
        if j == 0 {
            (0.0, 0.0)
        } else {
            (self.cum[j - 1], self.cum2[j - 1])
        }
    }
}

impl Hazard {
    pub fn constant(rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(invalid("rate", "hazard must be finite and nonnegative"));
        }
        Ok(Hazard::Constant(rate))
    }

    pub fn piecewise(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != breaks.len() + 1 {
            return Err(invalid("values", "need exactly one more value than breaks"));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(invalid("values", "hazard must be finite and nonnegative"));
        }
        if breaks.iter().any(|b| !(b.is_finite() && *b > 0.0))
            || breaks.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(invalid(
                "breaks",
                "must be positive and strictly increasing",
            ));
        }
        let mut cum = Vec::with_capacity(breaks.len());
        let mut cum2 = Vec::with_capacity(breaks.len());
        let (mut h, mut h2, mut left) = (0.0, 0.0, 0.0);
        for (j, &b) in breaks.iter().enumerate() {
            let len = b - left;
            h2 += h * len + 0.5 * values[j] * len * len;
            h += values[j] * len;
            cum.push(h);
            cum2.push(h2);
            left = b;
        }
        Ok(Hazard::PiecewiseConstant(PiecewiseHazard {
            breaks,
            values,
            cum,
            cum2,
        }))
    }

    pub fn affine_capped(intercept: f64, slope: f64, cap: f64) -> Result<Self> {
        if !(intercept.is_finite() && intercept >= 0.0) {
            return Err(invalid("intercept", "must be finite and nonnegative"));
        }
        if !(slope.is_finite() && slope >= 0.0) {
            return Err(invalid("slope", "must be finite and nonnegative"));
        }
        if cap.is_nan() || cap < intercept {
            return Err(invalid("cap", "must be at least the intercept"));
        }
        Ok(Hazard::AffineCapped {
            intercept,
            slope,
            cap,
        })
    }

    fn kink(intercept: f64, slope: f64, cap: f64) -> f64 {
        if slope > 0.0 && cap.is_finite() {
            (cap - intercept) / slope
        } else if slope > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    }

    /// Points where `h` jumps or has a kink, ascending.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Hazard::Constant(_) => Vec::new(),
            Hazard::PiecewiseConstant(p) => p.breaks.clone(),
            &Hazard::AffineCapped {
                intercept,
                slope,
                cap,
            } => {
                let k = Self::kink(intercept, slope, cap);
                if k > 0.0 && k.is_finite() {
                    alloc::vec![k]
                } else {
                    Vec::new()
                }
            }
        }
    }

    /// `h(u)`.
    pub fn rate(&self, u: f64) -> f64 {
        match self {
            Hazard::Constant(r) => *r,
            Hazard::PiecewiseConstant(p) => p.values[p.piece(u).0],
            Hazard::AffineCapped {
                intercept,
                slope,
                cap,
            } => (intercept + slope * u).min(*cap),
        }
    }

    /// `H(x) = int_0^x h(u) du`.
    pub fn integral(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match self {
            Hazard::Constant(r) => r * x,
            Hazard::PiecewiseConstant(p) => {
                let (j, left) = p.piece(x);
                p.start(j).0 + p.values[j] * (x - left)
            }
            &Hazard::AffineCapped {
                intercept,
                slope,
                cap,
            } => {
                let k = Self::kink(intercept, slope, cap);
                if x <= k {
                    intercept * x + 0.5 * slope * x * x
                } else {
                    let hk = intercept * k + 0.5 * slope * k * k;
                    hk + cap * (x - k)
                }
            }
        }
    }

    /// `int_0^x H(s) ds = int_0^x int_0^s h(u) du ds`.
    pub fn double_integral(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match self {
            Hazard::Constant(r) => 0.5 * r * x * x,
            Hazard::PiecewiseConstant(p) => {
                let (j, left) = p.piece(x);
                let (h0, h20) = p.start(j);
                let len = x - left;
                h20 + h0 * len + 0.5 * p.values[j] * len * len
            }
            &Hazard::AffineCapped {
                intercept,
                slope,
                cap,
            } => {
                let k = Self::kink(intercept, slope, cap);
                if x <= k {
                    0.5 * intercept * x * x + slope * x * x * x / 6.0
                } else {
                    let hk = intercept * k + 0.5 * slope * k * k;
                    let h2k = 0.5 * intercept * k * k + slope * k * k * k / 6.0;
                    let len = x - k;
                    h2k + hk * len + 0.5 * cap * len * len
                }
            }
        }
    }

    /// `int_0^inf h`, possibly infinite.
    pub fn total(&self) -> f64 {
        match self {
            Hazard::Constant(r) => {
                if *r > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            Hazard::PiecewiseConstant(p) => {
                if *p.values.last().expect("nonempty") > 0.0 {
                    f64::INFINITY
                } else {
                    p.cum.last().copied().unwrap_or(0.0)
                }
            }
            Hazard::AffineCapped {
                intercept,
                slope,
                cap,
            } => {
                if *intercept > 0.0 || (*slope > 0.0 && *cap > 0.0) {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
        }
    }

    /// Smallest `x` with `H(x) >= y`, or `None` when `y` is never reached.
    pub fn inverse_integral(&self, y: f64) -> Option<f64> {
        if y <= 0.0 {
            return Some(0.0);
        }
        if y >= self.total() {
            return None;
        }
        Some(match self {
            Hazard::Constant(r) => y / r,
            Hazard::PiecewiseConstant(p) => {
                // first piece whose right end accumulates at least y
                let j = p.cum.partition_point(|&c| c < y);
                let left = if j == 0 { 0.0 } else { p.breaks[j - 1] };
                let h0 = p.start(j).0;
                if p.values[j] > 0.0 {
                    left + (y - h0) / p.values[j]
                } else {
                    // zero-hazard piece can only be hit at its left end
                    left
                }
            }
            &Hazard::AffineCapped {
                intercept,
                slope,
                cap,
            } => {
                let k = Self::kink(intercept, slope, cap);
                let hk = if k.is_finite() {
                    intercept * k + 0.5 * slope * k * k
                } else {
                    f64::INFINITY
                };
                if y <= hk {
                    2.0 * y / (intercept + math::sqrt(intercept * intercept + 2.0 * slope * y))
                } else {
                    k + (y - hk) / cap
                }
            }
        })
    }

    /// `sup h` over `[0, upper]`: a Lipschitz constant for `H` there.
    pub fn sup_on(&self, upper: f64) -> f64 {
        match self {
            Hazard::Constant(r) => *r,
            Hazard::PiecewiseConstant(p) => {
                let (j, _) = p.piece(upper.max(0.0));
                p.values[..=j].iter().copied().fold(0.0, f64::max)
            }
            Hazard::AffineCapped {
                intercept,
                slope,
                cap,
            } => (intercept + slope * upper.max(0.0)).min(*cap),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad;

    fn hazards() -> Vec<Hazard> {
        alloc::vec![
            Hazard::constant(0.7).unwrap(),
            Hazard::piecewise(alloc::vec![0.5, 2.0], alloc::vec![1.0, 0.25, 3.0]).unwrap(),
            Hazard::piecewise(alloc::vec![1.0], alloc::vec![0.5, 0.0]).unwrap(),
            Hazard::affine_capped(0.2, 1.5, 2.0).unwrap(),
            Hazard::affine_capped(0.0, 1.0, f64::INFINITY).unwrap(),
        ]
    }

    #[test]
    fn closed_forms_match_quadrature() {
        for h in hazards() {
            for &x in &[0.1, 0.5, 1.0, 1.7, 3.0, 6.0] {
                let (i1, _) = quad::integrate(|u| h.rate(u), 0.0, x, 1e-13, 1e-13);
                assert!((h.integral(x) - i1).abs() < 1e-10, "{h:?} H({x})");
                let (i2, _) = quad::integrate(|s| h.integral(s), 0.0, x, 1e-13, 1e-13);
                assert!((h.double_integral(x) - i2).abs() < 1e-10, "{h:?} intH({x})");
            }
        }
    }

    #[test]
    fn inverse_round_trips() {
        for h in hazards() {
            for &x in &[0.05, 0.4, 1.3, 2.5, 4.0] {
                let y = h.integral(x);
                match h.inverse_integral(y) {
                    Some(back) => assert!((h.integral(back) - y).abs() < 1e-12, "{h:?} at {x}"),
                    None => assert!(y >= h.total()),
                }
            }
        }
    }

    #[test]
    fn bounded_hazard_total() {
        let h = Hazard::piecewise(alloc::vec![1.0], alloc::vec![0.5, 0.0]).unwrap();
        assert_eq!(h.total(), 0.5);
        assert_eq!(h.inverse_integral(0.6), None);
        assert_eq!(Hazard::constant(0.0).unwrap().total(), 0.0);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(Hazard::piecewise(alloc::vec![1.0, 0.5], alloc::vec![1.0, 1.0, 1.0]).is_err());
        assert!(Hazard::piecewise(alloc::vec![1.0], alloc::vec![1.0]).is_err());
        assert!(Hazard::constant(-1.0).is_err());
        assert!(Hazard::affine_capped(1.0, 1.0, 0.5).is_err());
    }
}
