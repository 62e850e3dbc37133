//! Stationary density of the limit diffusion,
//!
//! ```text
//! pi(x) = C0 exp(-(2/v) (-c x + lambda^2 int_0^{|x|/lambda} H_i(u) du)),
//! ```
//!
//! with `i = 1` for `x >= 0`, `i = -1` for `x < 0`, and
//! `v = lambda^3 (sigma1^2 + sigma-1^2)`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::model::{Class, Hazard, LimitFn};
use crate::quad;
use crate::rng::RngStream;
use crate::sde::DiffusionParams;

/// Nodes of the tabulated CDF.
pub const TABLE_NODES: usize = 10_000;

/// Relative height below which the density is truncated.
const TAIL: f64 = 1e-16;

/// Integrability of the density: `lim H1 > c/lambda` when `c >= 0` and
/// `lim H-1 > -c/lambda` when `c <= 0`, with a nondegenerate noise.
pub fn check_drift_condition(d: &DiffusionParams) -> bool {
    if !(d.variance_scale() > 0.0) {
        return false;
    }
    let ratio = d.c / d.lambda;
    let right = d.c < 0.0 || d.h_plus.limit_at_infinity() > ratio;
    let left = d.c > 0.0 || d.h_minus.limit_at_infinity() > -ratio;
    right && left
}

/// `log(pi(x) / C0)`.
pub fn log_density_unnorm(x: f64, d: &DiffusionParams) -> f64 {
    let l = d.lambda;
    let h = if x >= 0.0 { &d.h_plus } else { &d.h_minus };
    -(2.0 / d.variance_scale()) * (-d.c * x + l * l * h.antiderivative(x.abs() / l))
}

/// The same density written with base hazards `h_i`, where
/// `lambda^2 int_0^{|x|/lambda} H = lambda int_0^{|x|} int_0^{s/lambda} h`.
/// Both integrals are computed by nested quadrature of `h` alone, split at
/// the jumps and kinks of `h`.
pub fn log_density_hazard_form(
    x: f64,
    d: &DiffusionParams,
    h_plus: &Hazard,
    h_minus: &Hazard,
) -> f64 {
    let l = d.lambda;
    let h = if x >= 0.0 { h_plus } else { h_minus };
    let kinks = h.breakpoints();
    let outer_kinks: Vec<f64> = kinks.iter().map(|k| k * l).collect();
    let inner = |s: f64| quad::integrate_split(|u| h.rate(u), 0.0, s / l, &kinks, 1e-15, 1e-14);
    let outer = quad::integrate_split(inner, 0.0, x.abs(), &outer_kinks, 1e-14, 1e-13);
    -(2.0 / d.variance_scale()) * (-d.c * x + l * outer)
}

/// Normalized stationary density with a tabulated CDF.
#[derive(Clone, Debug, PartialEq)]
pub struct StationaryDensity {
    params: DiffusionParams,
    c0: f64,
    mode: f64,
    lower: f64,
    upper: f64,
    nodes: Vec<f64>,
    table: Vec<f64>,
}

/// Smallest `y >= 0` with `H(y) >= target`; the drift condition guarantees it exists.
fn level_crossing(h: &dyn LimitFn, target: f64) -> f64 {
    if h.eval(0.0) >= target {
        return 0.0;
    }
    let mut hi = 1.0;
    while h.eval(hi) < target {
        hi *= 2.0;
    }
    quad::invert_monotone(|y| h.eval(y), target, 0.0, hi)
}

/// Point beyond `from` (in direction `dir`) where the log density has
/// dropped by `drop` below `peak`.
fn tail_point(d: &DiffusionParams, from: f64, dir: f64, peak: f64, drop: f64) -> f64 {
    let target = peak - drop;
    let mut width = math::sqrt(d.variance_scale()).max(1e-3);
    while log_density_unnorm(from + dir * width, d) > target {
        width *= 2.0;
        if width > 1e12 {
            break;
        }
    }
    let w = quad::invert_monotone(
        |w| peak - log_density_unnorm(from + dir * w, d),
        drop,
        0.0,
        width,
    );
    from + dir * w
}

/// Computes `C0`, the truncation interval and the CDF table.
pub fn normalize(d: &DiffusionParams) -> Result<StationaryDensity> {
    if !check_drift_condition(d) {
        return Err(Error::DriftCondition);
    }
    let l = d.lambda;
    let mode = if d.c > 0.0 {
        l * level_crossing(&d.h_plus, d.c / l)
    } else if d.c < 0.0 {
        -l * level_crossing(&d.h_minus, -d.c / l)
    } else {
        0.0
    };
    let peak = log_density_unnorm(mode, d);
    let drop = -math::ln(TAIL);
    let lower = tail_point(d, mode, -1.0, peak, drop);
    let upper = tail_point(d, mode, 1.0, peak, drop);

    let f = |x: f64| math::exp(log_density_unnorm(x, d) - peak);
    let h = (upper - lower) / (TABLE_NODES - 1) as f64;
    let mut nodes = Vec::with_capacity(TABLE_NODES);
    let mut table = Vec::with_capacity(TABLE_NODES);
    let mut acc = 0.0;
    nodes.push(lower);
    table.push(0.0);
    for j in 1..TABLE_NODES {
        let a = lower + (j - 1) as f64 * h;
        let b = if j == TABLE_NODES - 1 {
            upper
        } else {
            lower + j as f64 * h
        };
        // split panels at the kink at 0 and at the mode
        let mut cuts = [a, a, a, b];
        let mut m = 1;
        for p in [0.0f64.min(mode), 0.0f64.max(mode)] {
            if p > cuts[m - 1] && p < b {
                cuts[m] = p;
                m += 1;
            }
        }
        cuts[m] = b;
        for w in cuts[..=m].windows(2) {
            acc += quad::integrate(f, w[0], w[1], 1e-300, 1e-13).0;
        }
        nodes.push(b);
        table.push(acc);
    }
    let total = acc;
    for v in &mut table {
        *v /= total;
    }
    let c0 = math::exp(-peak) / total;
    Ok(StationaryDensity {
        params: d.clone(),
        c0,
        mode,
        lower,
        upper,
        nodes,
        table,
    })
}

impl StationaryDensity {
    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn params(&self) -> &DiffusionParams {
        &self.params
    }

    pub fn mode(&self) -> f64 {
        self.mode
    }

    /// Truncation interval.
    pub fn bounds(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.c0 * math::exp(log_density_unnorm(x, &self.params))
    }

    /// Tabulated `(x, cdf)` nodes.
    pub fn table(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.table.iter().copied())
    }

    /// CDF by linear interpolation of the table.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.lower {
            return 0.0;
        }
        if x >= self.upper {
            return 1.0;
        }
        let j = self
            .nodes
            .partition_point(|&v| v <= x)
            .clamp(1, self.nodes.len() - 1);
        let (x0, x1) = (self.nodes[j - 1], self.nodes[j]);
        let (c0, c1) = (self.table[j - 1], self.table[j]);
        c0 + (c1 - c0) * (x - x0) / (x1 - x0)
    }

    /// Inverse of [`Self::cdf`].
    pub fn quantile(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return self.lower;
        }
        if u >= 1.0 {
            return self.upper;
        }
        let j = self
            .table
            .partition_point(|&v| v < u)
            .clamp(1, self.table.len() - 1);
        let (x0, x1) = (self.nodes[j - 1], self.nodes[j]);
        let (c0, c1) = (self.table[j - 1], self.table[j]);
        if c1 > c0 {
            x0 + (x1 - x0) * (u - c0) / (c1 - c0)
        } else {
            x0
        }
    }

    pub fn sample(&self, rng: &mut RngStream, count: usize) -> Vec<f64> {
        (0..count).map(|_| self.quantile(rng.open01())).collect()
    }

    /// Mass on one side of 0: `P(X >= 0)` for `Plus`, `P(X < 0)` for `Minus`.
    pub fn side_mass(&self, class: Class) -> f64 {
        match class {
            Class::Plus => 1.0 - self.cdf(0.0),
            Class::Minus => self.cdf(0.0),
        }
    }
}
