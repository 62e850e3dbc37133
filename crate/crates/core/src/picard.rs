//! The fixed-point map `x -> (w1, w-1)` on grid functions.
//!
//! For a driving path `x` the pair solves, at every node,
//!
//! ```text
//! w1  = [x - int_0^t H1(w1) + int_0^t H-1(w-1)]^+
//! w-1 = [x - int_0^t H1(w1) + int_0^t H-1(w-1)]^-
//! ```
//!
//! with the integrals discretized by the trapezoid rule. The solver sweeps
//! time windows short enough for the Picard map to contract by 1/2.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::grid::GridFunction;
use crate::math;
use crate::model::LimitFn;
use crate::quad;

/// `Phi(t) = int_0^t du / (H1(u) + H-1(u) + 1)`, accumulated over doubling
/// panels so that very long ranges keep their accuracy.
struct Phi<'a, A: ?Sized, B: ?Sized> {
    h1: &'a A,
    h2: &'a B,
}

impl<A: LimitFn + ?Sized, B: LimitFn + ?Sized> Phi<'_, A, B> {
    fn density(&self, u: f64) -> f64 {
        1.0 / (self.h1.eval(u) + self.h2.eval(u) + 1.0)
    }

    fn between(&self, a: f64, b: f64) -> f64 {
        quad::integrate(|u| self.density(u), a, b, 1e-15, 1e-13).0
    }

    fn at(&self, t: f64) -> f64 {
        let (mut acc, mut a) = (0.0, 0.0);
        while a < t {
            let b = (2.0 * a + 1.0).min(t);
            acc += self.between(a, b);
            a = b;
        }
        acc
    }

    /// Solves `Phi(m) = target`.
    fn inverse(&self, target: f64) -> Result<f64> {
        let (mut acc, mut a) = (0.0, 0.0);
        loop {
            let b = 2.0 * a + 1.0;
            if !(b < 1e300) {
                return Err(Error::Unbounded);
            }
            let piece = self.between(a, b);
            if acc + piece >= target {
                let base = acc;
                return Ok(quad::invert_monotone(
                    |m| base + self.between(a, m),
                    target,
                    a,
                    b,
                ));
            }
            acc += piece;
            a = b;
        }
    }
}

/// A-priori bound `M = Phi^{-1}(Phi(|x|_T) + T)` on `sup (w1 + w-1)`.
///
/// Fails with [`Error::Unbounded`] when `Phi` is bounded and the target is
/// never reached (super-linear `H`).
pub fn apriori_bound<A: LimitFn + ?Sized, B: LimitFn + ?Sized>(
    x: &GridFunction,
    h1: &A,
    h2: &B,
) -> Result<f64> {
    let phi = Phi { h1, h2 };
    let target = phi.at(x.sup_norm()) + x.horizon();
    phi.inverse(target)
}

/// Starting point of the iteration on each window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitialIterate {
    Zero,
    /// Both components start at this value.
    Constant(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    /// Iteration cap per window.
    pub max_iter: usize,
    pub init: InitialIterate,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-9,
            max_iter: 200,
            init: InitialIterate::Zero,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub w_plus: GridFunction,
    pub w_minus: GridFunction,
    /// A-priori bound used to size the windows.
    pub bound: f64,
    /// Lipschitz constant of `H1`, `H-1` on `[0, bound]`.
    pub lipschitz: f64,
    /// Window length in grid steps.
    pub window_steps: usize,
    /// Largest iteration count over all windows.
    pub iterations: usize,
}

/// Solves with default options and tolerance `tol`.
pub fn solve<A: LimitFn + ?Sized, B: LimitFn + ?Sized>(
    x: &GridFunction,
    h1: &A,
    h2: &B,
    tol: f64,
) -> Result<Solution> {
    solve_with(
        x,
        h1,
        h2,
        &SolveOptions {
            tol,
            ..SolveOptions::default()
        },
    )
}

pub fn solve_with<A: LimitFn + ?Sized, B: LimitFn + ?Sized>(
    x: &GridFunction,
    h1: &A,
    h2: &B,
    opts: &SolveOptions,
) -> Result<Solution> {
    if !(opts.tol > 0.0) {
        return Err(invalid("tol", "must be positive"));
    }
    let bound = apriori_bound(x, h1, h2)?;
    let kappa = h1.lipschitz_on(bound).max(h2.lipschitz_on(bound));
    let dt = x.step();
    let horizon = x.horizon();
    let delta = if kappa > 0.0 {
        horizon.min(0.25 / kappa)
    } else {
        horizon
    };
    let window_steps = ((delta / dt) as usize).max(1);

    let xs = x.values();
    let len = xs.len();
    let mut w1 = vec![0.0; len];
    let mut w2 = vec![0.0; len];
    w1[0] = math::pos(xs[0]);
    w2[0] = math::neg(xs[0]);
    // g = H-1(w-1) - H1(w1); cum = trapezoid integral of g up to each node
    let g = |a: f64, b: f64| h2.eval(b) - h1.eval(a);
    let mut cum = vec![0.0; len];
    let mut iterations = 0;
    let mut next1 = vec![0.0; window_steps];
    let mut next2 = vec![0.0; window_steps];

    let mut start = 1;
    while start < len {
        let end = (start + window_steps).min(len);
        let start_value = match opts.init {
            InitialIterate::Zero => 0.0,
            InitialIterate::Constant(v) => v,
        };
        for j in start..end {
            w1[j] = start_value;
            w2[j] = start_value;
        }
        let g_left = g(w1[start - 1], w2[start - 1]);
        let mut converged = false;
        let mut change = f64::INFINITY;
        for iter in 1..=opts.max_iter {
            let mut running = cum[start - 1];
            let mut prev = g_left;
            change = 0.0f64;
            for j in start..end {
                let cur = g(w1[j], w2[j]);
                running += 0.5 * dt * (prev + cur);
                prev = cur;
                let b = xs[j] + running;
                let (n1, n2) = (math::pos(b), math::neg(b));
                change = change.max((n1 - w1[j]).abs()).max((n2 - w2[j]).abs());
                next1[j - start] = n1;
                next2[j - start] = n2;
            }
            w1[start..end].copy_from_slice(&next1[..end - start]);
            w2[start..end].copy_from_slice(&next2[..end - start]);
            if change <= 0.5 * opts.tol {
                iterations = iterations.max(iter);
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NotConverged {
                residual: change,
                iterations: opts.max_iter,
            });
        }
        let mut prev = g_left;
        for j in start..end {
            let cur = g(w1[j], w2[j]);
            cum[j] = cum[j - 1] + 0.5 * dt * (prev + cur);
            prev = cur;
        }
        start = end;
    }

    Ok(Solution {
        w_plus: GridFunction::new(dt, w1)?,
        w_minus: GridFunction::new(dt, w2)?,
        bound,
        lipschitz: kappa,
        window_steps,
        iterations,
    })
}

/// `max_j |w1 - [B]^+| + |w-1 - [B]^-|` with `B` the trapezoid bracket
/// evaluated on the candidate pair.
pub fn residual<A: LimitFn + ?Sized, B: LimitFn + ?Sized>(
    x: &GridFunction,
    w1: &GridFunction,
    w2: &GridFunction,
    h1: &A,
    h2: &B,
) -> Result<f64> {
    if !(x.conformable(w1) && x.conformable(w2)) {
        return Err(Error::GridMismatch);
    }
    let dt = x.step();
    let (xs, a, b) = (x.values(), w1.values(), w2.values());
    let mut running = 0.0;
    let mut prev = 0.0;
    let mut worst = 0.0f64;
    for j in 0..xs.len() {
        let cur = h2.eval(b[j]) - h1.eval(a[j]);
        if j > 0 {
            running += 0.5 * dt * (prev + cur);
        }
        prev = cur;
        let bracket = xs[j] + running;
        worst = worst.max((a[j] - math::pos(bracket)).abs() + (b[j] - math::neg(bracket)).abs());
    }
    Ok(worst)
}

/// `lambda (w1 - w-1)`: the queue built from a solution.
pub fn queue_from(solution: &Solution, lambda: f64) -> Vec<f64> {
    solution
        .w_plus
        .values()
        .iter()
        .zip(solution.w_minus.values())
        .map(|(a, b)| lambda * (a - b))
        .collect()
}
