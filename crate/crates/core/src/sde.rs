//! Euler-Maruyama for the limit diffusion
//!
//! ```text
//! dQ = c dt - lambda H1(Q^+/lambda) dt + lambda H-1(Q^-/lambda) dt + sqrt(v) dW,
//! v = lambda^3 (sigma1^2 + sigma-1^2),
//! ```
//!
//! and for its driving process `X = q/lambda + (c/lambda) t + sqrt(lambda (sigma1^2 + sigma-1^2)) B`.
//! Both are built from one stream of Brownian increments so that
//! `Q = lambda (Psi1 - Psi-1)(X)` can be checked path by path.

use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::grid::{node_count, GridFunction};
use crate::math;
use crate::model::{limit_h, Class, LimitFn, LimitH, ModelConfig};
use crate::picard;
use crate::rng::RngStream;

/// Coefficients of the limit diffusion.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffusionParams {
    pub lambda: f64,
    pub c: f64,
    pub sigma1sq: f64,
    pub sigmam1sq: f64,
    pub h_plus: LimitH,
    pub h_minus: LimitH,
}

impl DiffusionParams {
    pub fn new(
        lambda: f64,
        c: f64,
        sigma1sq: f64,
        sigmam1sq: f64,
        h_plus: LimitH,
        h_minus: LimitH,
    ) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(invalid("lambda", "must be finite and positive"));
        }
        if !c.is_finite() {
            return Err(invalid("c", "must be finite"));
        }
        if !(sigma1sq >= 0.0 && sigmam1sq >= 0.0 && sigma1sq.is_finite() && sigmam1sq.is_finite()) {
            return Err(invalid("sigma", "variances must be finite and nonnegative"));
        }
        Ok(DiffusionParams {
            lambda,
            c,
            sigma1sq,
            sigmam1sq,
            h_plus,
            h_minus,
        })
    }

    /// The limit diffusion of a model configuration.
    pub fn from_config(config: &ModelConfig) -> Self {
        DiffusionParams {
            lambda: config.lambda(),
            c: config.c(),
            sigma1sq: config.sigma_sq(Class::Plus),
            sigmam1sq: config.sigma_sq(Class::Minus),
            h_plus: limit_h(config.patience(Class::Plus)),
            h_minus: limit_h(config.patience(Class::Minus)),
        }
    }

    /// `v = lambda^3 (sigma1^2 + sigma-1^2)`.
    pub fn variance_scale(&self) -> f64 {
        self.lambda * self.lambda * self.lambda * (self.sigma1sq + self.sigmam1sq)
    }

    pub fn h(&self, class: Class) -> &LimitH {
        match class {
            Class::Plus => &self.h_plus,
            Class::Minus => &self.h_minus,
        }
    }

    pub fn drift(&self, q: f64) -> f64 {
        let l = self.lambda;
        self.c - l * self.h_plus.eval(math::pos(q) / l) + l * self.h_minus.eval(math::neg(q) / l)
    }
}

/// Law of the initial value `q`, drawn independently of the noise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitialValue {
    Constant(f64),
    Normal { mean: f64, sd: f64 },
}

impl InitialValue {
    pub fn draw(&self, rng: &mut RngStream) -> f64 {
        match *self {
            InitialValue::Constant(q) => q,
            InitialValue::Normal { mean, sd } => mean + sd * rng.normal(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SdeParams {
    pub diffusion: DiffusionParams,
    pub q: InitialValue,
}

/// One realization of the noise: initial value plus Brownian increments
/// `B(t_{k+1}) - B(t_k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Noise {
    pub q: f64,
    pub step: f64,
    pub increments: Vec<f64>,
}

impl Noise {
    /// Draws `q` first, then one increment per grid step.
    pub fn draw(p: &SdeParams, horizon: f64, step: f64, rng: &mut RngStream) -> Result<Self> {
        let steps = node_count(step, horizon)? - 1;
        if steps == 0 {
            return Err(invalid("horizon", "must be at least one step"));
        }
        let q = p.q.draw(rng);
        let sd = math::sqrt(step);
        let increments = (0..steps).map(|_| sd * rng.normal()).collect();
        Ok(Noise {
            q,
            step,
            increments,
        })
    }
}

/// Euler-Maruyama path of `Q` driven by `noise`.
pub fn euler_from(d: &DiffusionParams, noise: &Noise) -> Result<GridFunction> {
    let scale = math::sqrt(d.variance_scale());
    let mut values = Vec::with_capacity(noise.increments.len() + 1);
    let mut q = noise.q;
    values.push(q);
    for &db in &noise.increments {
        q += d.drift(q) * noise.step + scale * db;
        values.push(q);
    }
    GridFunction::new(noise.step, values)
}

/// Driving process `X` built from the same increments.
pub fn driver_from(d: &DiffusionParams, noise: &Noise) -> Result<GridFunction> {
    let scale = math::sqrt(d.lambda * (d.sigma1sq + d.sigmam1sq));
    let mut values = Vec::with_capacity(noise.increments.len() + 1);
    let mut b = 0.0;
    values.push(noise.q / d.lambda);
    for (k, &db) in noise.increments.iter().enumerate() {
        b += db;
        let t = (k + 1) as f64 * noise.step;
        values.push(noise.q / d.lambda + d.c / d.lambda * t + scale * b);
    }
    GridFunction::new(noise.step, values)
}

pub fn euler_path(
    p: &SdeParams,
    horizon: f64,
    step: f64,
    rng: &mut RngStream,
) -> Result<GridFunction> {
    euler_from(&p.diffusion, &Noise::draw(p, horizon, step, rng)?)
}

pub fn driver_path(
    p: &SdeParams,
    horizon: f64,
    step: f64,
    rng: &mut RngStream,
) -> Result<GridFunction> {
    driver_from(&p.diffusion, &Noise::draw(p, horizon, step, rng)?)
}

/// `Q(T)` without storing the path.
pub fn euler_terminal(p: &SdeParams, horizon: f64, step: f64, rng: &mut RngStream) -> Result<f64> {
    let steps = node_count(step, horizon)? - 1;
    let d = &p.diffusion;
    let scale = math::sqrt(d.variance_scale() * step);
    let mut q = p.q.draw(rng);
    for _ in 0..steps {
        q += d.drift(q) * step + scale * rng.normal();
    }
    Ok(q)
}

/// Continues an Euler chain from `q` for `steps` steps.
pub fn euler_advance(
    d: &DiffusionParams,
    q: f64,
    step: f64,
    steps: usize,
    rng: &mut RngStream,
) -> f64 {
    let scale = math::sqrt(d.variance_scale() * step);
    let mut q = q;
    for _ in 0..steps {
        q += d.drift(q) * step + scale * rng.normal();
    }
    q
}

/// `sup |Q - lambda (Psi1 - Psi-1)(X)|` for coupled `Q` and `X`.
pub fn psi_consistency(p: &SdeParams, horizon: f64, step: f64, rng: &mut RngStream) -> Result<f64> {
    let noise = Noise::draw(p, horizon, step, rng)?;
    psi_gap(&p.diffusion, &noise)
}

/// [`psi_consistency`] on a given noise realization.
pub fn psi_gap(d: &DiffusionParams, noise: &Noise) -> Result<f64> {
    let q = euler_from(d, noise)?;
    let x = driver_from(d, noise)?;
    let sol = picard::solve(&x, &d.h_plus, &d.h_minus, 1e-9)?;
    let from_psi = picard::queue_from(&sol, d.lambda);
    Ok(q.values()
        .iter()
        .zip(&from_psi)
        .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
}
