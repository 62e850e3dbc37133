//! Functions sampled on a uniform time grid starting at 0.

use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};

/// Values at `t_j = j * step`, `j = 0..len`; the horizon is `step * (len - 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    step: f64,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(step: f64, values: Vec<f64>) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(invalid("step", "must be finite and positive"));
        }
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::NotANumber);
        }
        Ok(GridFunction { step, values })
    }

    /// Samples `f` on `[0, horizon]`; the node count is `round(horizon / step) + 1`.
    pub fn from_fn(step: f64, horizon: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let len = node_count(step, horizon)?;
        let values = (0..len).map(|j| f(j as f64 * step)).collect();
        GridFunction::new(step, values)
    }

    pub fn constant(step: f64, horizon: f64, value: f64) -> Result<Self> {
        GridFunction::from_fn(step, horizon, |_| value)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.step * (self.values.len() - 1) as f64
    }

    pub fn time(&self, j: usize) -> f64 {
        j as f64 * self.step
    }

    /// Right-continuous step interpolation.
    pub fn step_at(&self, t: f64) -> f64 {
        let j = crate::math::floor(t / self.step + 1e-9);
        let j = if j < 0.0 { 0 } else { j as usize };
        self.values[j.min(self.values.len() - 1)]
    }

    /// Linear interpolation, clamped at the ends.
    pub fn linear_at(&self, t: f64) -> f64 {
        let last = self.values.len() - 1;
        let s = t / self.step;
        if !(s > 0.0) {
            return self.values[0];
        }
        let j = s as usize;
        if j >= last {
            return self.values[last];
        }
        let frac = s - j as f64;
        self.values[j] * (1.0 - frac) + self.values[j + 1] * frac
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction {
            step: self.step,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn conformable(&self, other: &GridFunction) -> bool {
        self.values.len() == other.values.len() && self.step == other.step
    }

    /// `sup |f|`.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `sup |f - g|`; errors if the grids differ.
    pub fn sup_distance(&self, other: &GridFunction) -> Result<f64> {
        if !self.conformable(other) {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }
}

pub(crate) fn node_count(step: f64, horizon: f64) -> Result<usize> {
    if !(step.is_finite() && step > 0.0) {
        return Err(invalid("step", "must be finite and positive"));
    }
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(invalid("horizon", "must be finite and nonnegative"));
    }
    Ok(crate::math::round(horizon / step) as usize + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horizon_from_len() {
        let g = GridFunction::from_fn(0.1, 1.0, |t| t).unwrap();
        assert_eq!(g.len(), 11);
        assert!((g.horizon() - 1.0).abs() < 1e-12);
        assert!((g.linear_at(0.25) - 0.25).abs() < 1e-12);
        assert_eq!(g.step_at(0.25), g.values()[2]);
    }

    #[test]
    fn rejects_nan_and_mismatch() {
        assert!(GridFunction::new(0.1, vec![0.0, f64::NAN]).is_err());
        let a = GridFunction::constant(0.1, 1.0, 0.0).unwrap();
        let b = GridFunction::constant(0.2, 1.0, 0.0).unwrap();
        assert_eq!(a.sup_distance(&b), Err(Error::GridMismatch));
    }
}
