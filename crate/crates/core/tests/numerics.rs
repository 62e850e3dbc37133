//! Oracle checks for the solver, the diffusion integrator and the
//! stationary density.

use dedq_core::diagnostics::{ks_distance, mean_se, variance_se, EmpiricalDistribution};
use dedq_core::model::{
    limit_error, FixedBase, FixedCdf, FnLimit, Hazard, LimitFn, LimitH, PatienceSpec,
};
use dedq_core::picard::{apriori_bound, residual, solve, solve_with, InitialIterate, SolveOptions};
use dedq_core::sde::{
    driver_from, euler_advance, euler_from, euler_terminal, DiffusionParams, InitialValue, Noise, SdeParams,
};
use dedq_core::stationary::{log_density_hazard_form, log_density_unnorm, normalize};
use dedq_core::{GridFunction, RngStream};
use rand::{Rng, SeedableRng};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

fn ou() -> DiffusionParams {
    DiffusionParams::new(1.0, 0.0, 0.5, 0.5, LimitH::identity(), LimitH::identity()).unwrap()
}

#[test]
fn picard_exponential_decay() {
    for &a in &[0.5, 1.0, 2.0] {
        let x = GridFunction::constant(1e-3, 5.0, a).unwrap();
        let s = solve(&x, &LimitH::identity(), &LimitH::Linear { slope: 3.0 }, 1e-9).unwrap();
        let err = s
            .w_plus
            .values()
            .iter()
            .enumerate()
            .map(|(j, w)| (w - a * (-(j as f64) * 1e-3).exp()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "a={a} err={err}");
        assert_eq!(s.w_minus.sup_norm(), 0.0);
        assert!(residual(&x, &s.w_plus, &s.w_minus, &LimitH::identity(), &LimitH::Linear { slope: 3.0 }).unwrap() <= 1e-9);
    }
}

#[test]
fn picard_mirror() {
    let x = GridFunction::constant(1e-3, 3.0, -1.5).unwrap();
    let s = solve(&x, &LimitH::Zero, &LimitH::identity(), 1e-9).unwrap();
    let err = s
        .w_minus
        .values()
        .iter()
        .enumerate()
        .map(|(j, w)| (w - 1.5 * (-(j as f64) * 1e-3).exp()).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-6, "{err}");
    assert_eq!(s.w_plus.sup_norm(), 0.0);
}

#[test]
fn picard_zero_input() {
    let x = GridFunction::constant(1e-2, 2.0, 0.0).unwrap();
    let s = solve(&x, &LimitH::identity(), &LimitH::identity(), 1e-9).unwrap();
    assert_eq!(s.w_plus.sup_norm() + s.w_minus.sup_norm(), 0.0);
}

#[test]
fn apriori_bound_zero_input_below_horizon() {
    let h = FnLimit::new(|u: f64| u.sqrt(), f64::INFINITY);
    for &t in &[1.0, 5.0] {
        let x = GridFunction::constant(1e-2, t, 0.0).unwrap();
        let m = apriori_bound(&x, &h, &LimitH::Zero).unwrap();
        assert!(m >= t - 1e-9, "Phi(u) <= u so Phi^-1(T) >= T");
        // Phi(m) = T by the oracle quadrature
        let (phi, _) = dedq_core::quad::integrate(|u| 1.0 / (u.sqrt() + 1.0), 0.0, m, 1e-13, 1e-13);
        assert!((phi - t).abs() < 1e-8);
    }
}

fn wiggly(step: f64, horizon: f64) -> GridFunction {
    GridFunction::from_fn(step, horizon, |t| (2.0 * t).sin() + 0.3 * t - 0.4).unwrap()
}

#[test]
fn picard_uniqueness_and_complementarity() {
    let x = wiggly(1e-3, 4.0);
    let (h1, h2) = (LimitH::identity(), LimitH::Linear { slope: 2.0 });
    let zero = solve(&x, &h1, &h2, 1e-9).unwrap();
    let m = apriori_bound(&x, &h1, &h2).unwrap();
    let opts = SolveOptions {
        init: InitialIterate::Constant(m),
        ..SolveOptions::default()
    };
    let high = solve_with(&x, &h1, &h2, &opts).unwrap();
    assert!(zero.w_plus.sup_distance(&high.w_plus).unwrap() < 1e-8);
    assert!(zero.w_minus.sup_distance(&high.w_minus).unwrap() < 1e-8);
    for (a, b) in zero.w_plus.values().iter().zip(zero.w_minus.values()) {
        assert!(*a >= 0.0 && *b >= 0.0 && a * b == 0.0);
        assert!(a + b <= m + 1e-9);
    }
}

#[test]
fn picard_grid_refinement() {
    let (h1, h2) = (LimitH::identity(), LimitH::Linear { slope: 2.0 });
    let coarse = solve(&wiggly(1e-2, 3.0), &h1, &h2, 1e-10).unwrap();
    let fine = solve(&wiggly(5e-3, 3.0), &h1, &h2, 1e-10).unwrap();
    let mut diff = 0.0f64;
    for (j, w) in coarse.w_plus.values().iter().enumerate() {
        diff = diff.max((w - fine.w_plus.values()[2 * j]).abs());
    }
    assert!(diff < 1e-2, "{diff}");
}

#[test]
fn picard_continuity_in_input() {
    let (h1, h2) = (LimitH::identity(), LimitH::Linear { slope: 0.5 });
    let (horizon, kappa) = (2.0f64, 1.0f64);
    let bound = 2.0 * (1.0 + 2.0 * kappa * horizon) * (4.0 * kappa * horizon).exp();
    let x = wiggly(1e-3, horizon);
    let base = solve(&x, &h1, &h2, 1e-10).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let eps = 1e-2;
        let phase: f64 = rng.random_range(0.0..6.0);
        let y = GridFunction::from_fn(1e-3, horizon, |t| x.linear_at(t) + eps * (3.0 * t + phase).sin()).unwrap();
        let s = solve(&y, &h1, &h2, 1e-10).unwrap();
        let gap = s.w_plus.sup_distance(&base.w_plus).unwrap() + s.w_minus.sup_distance(&base.w_minus).unwrap();
        assert!(gap <= bound * eps, "{gap}");
    }
}

#[test]
fn residual_detects_perturbation() {
    let x = wiggly(1e-2, 2.0);
    let w1 = x.map(|v| v.max(0.0));
    let w2 = x.map(|v| (-v).max(0.0));
    assert_eq!(residual(&x, &w1, &w2, &LimitH::Zero, &LimitH::Zero).unwrap(), 0.0);
    let mut bumped = w1.values().to_vec();
    bumped[50] += 0.01;
    let bumped = GridFunction::new(1e-2, bumped).unwrap();
    assert!(residual(&x, &bumped, &w2, &LimitH::Zero, &LimitH::Zero).unwrap() >= 0.01 - 1e-12);
}

#[test]
fn ou_mean_decay() {
    let p = SdeParams {
        diffusion: ou(),
        q: InitialValue::Constant(1.0),
    };
    let root = RngStream::new(11, 0);
    let samples: Vec<f64> = (0..10_000)
        .map(|r| euler_terminal(&p, 1.0, 1e-3, &mut root.substream(r)).unwrap())
        .collect();
    let (m, se) = mean_se(&samples);
    assert!((m - (-1.0f64).exp()).abs() < 3.0 * se, "{m} {se}");
}

#[test]
fn ou_variance_settles() {
    let d = ou();
    let root = RngStream::new(12, 0);
    let samples: Vec<f64> = (0..5_000)
        .map(|r| euler_advance(&d, 0.0, 1e-3, 10_000, &mut root.substream(r)))
        .collect();
    let (v, se) = variance_se(&samples);
    assert!((v - 0.5).abs() < 3.0 * se, "{v} {se}");
}

#[test]
fn driver_increment_variance_and_coupling() {
    let p = SdeParams {
        diffusion: DiffusionParams::new(2.0, 0.5, 0.3, 0.2, LimitH::identity(), LimitH::Zero).unwrap(),
        q: InitialValue::Constant(0.4),
    };
    let d = &p.diffusion;
    let root = RngStream::new(13, 0);
    let mut incr = Vec::with_capacity(100_000);
    for r in 0..100_000u64 {
        let noise = Noise::draw(&p, 1e-2, 1e-2, &mut root.substream(r)).unwrap();
        let x = driver_from(d, &noise).unwrap();
        incr.push(x.values()[1] - x.values()[0]);
    }
    let (v, se) = variance_se(&incr);
    let expected = d.lambda * (d.sigma1sq + d.sigmam1sq) * 1e-2;
    assert!((v - expected).abs() < 3.0 * se, "{v} {expected} {se}");

    // lambda X = q + c t + sqrt(v) B exactly
    let noise = Noise::draw(&p, 2.0, 1e-3, &mut root.substream(7)).unwrap();
    let x = driver_from(d, &noise).unwrap();
    let mut b = 0.0;
    for (k, xv) in x.values().iter().enumerate() {
        if k > 0 {
            b += noise.increments[k - 1];
        }
        let t = k as f64 * 1e-3;
        let direct = noise.q + d.c * t + d.variance_scale().sqrt() * b;
        assert!((d.lambda * xv - direct).abs() < 1e-12);
    }
}

#[test]
fn quiet_exponential_coupling() {
    let p = SdeParams {
        diffusion: DiffusionParams::new(1.0, 0.0, 0.0, 0.0, LimitH::identity(), LimitH::Zero).unwrap(),
        q: InitialValue::Constant(1.3),
    };
    let noise = Noise::draw(&p, 5.0, 1e-3, &mut RngStream::new(1, 1)).unwrap();
    let gap = dedq_core::sde::psi_gap(&p.diffusion, &noise).unwrap();
    assert!(gap <= 1e-3, "{gap}");
    // Euler against the exact solution
    let q = euler_from(&p.diffusion, &noise).unwrap();
    assert!((q.last() - 1.3 * (-5.0f64).exp()).abs() < 1e-3);
}

#[test]
fn stationary_sampler() {
    let s = normalize(&ou()).unwrap();
    let draws = s.sample(&mut RngStream::new(21, 0), 100_000);
    let (m, se) = mean_se(&draws);
    assert!(m.abs() < 3.0 * se);
    let (v, vse) = variance_se(&draws);
    assert!((v - 0.5).abs() < 3.0 * vse, "{v}");
    let e = EmpiricalDistribution::new(draws).unwrap();
    assert!(ks_distance(&e, |x| s.cdf(x)) < 0.01);
    assert!(s.sample(&mut RngStream::new(21, 0), 0).is_empty());

    let normal = Normal::new(0.0, 0.5f64.sqrt()).unwrap();
    for &x in &[-1.5, -0.6, 0.0, 0.2, 0.9, 2.1] {
        assert!((s.cdf(x) - normal.cdf(x)).abs() < 1e-6, "{x}");
        assert!((s.pdf(x) - normal.pdf(x)).abs() < 1e-9, "{x}");
        let u = normal.cdf(x);
        assert!((dedq_core::math::normal_quantile(u) * 0.5f64.sqrt() - normal.inverse_cdf(u)).abs() < 1e-9);
    }
}

#[test]
fn stationary_symmetry_and_hazard_form() {
    let h = Hazard::piecewise(vec![0.5, 2.0], vec![1.0, 0.25, 3.0]).unwrap();
    let d = DiffusionParams::new(1.3, 0.0, 0.4, 0.7, LimitH::Integrated(h.clone()), LimitH::Integrated(h.clone())).unwrap();
    for &x in &[0.1, 0.7, 1.9, 4.0] {
        assert!((log_density_unnorm(x, &d) - log_density_unnorm(-x, &d)).abs() < 1e-12);
    }
    let h2 = Hazard::affine_capped(0.2, 1.5, 2.0).unwrap();
    let d = DiffusionParams::new(1.3, -0.4, 0.4, 0.7, LimitH::Integrated(h.clone()), LimitH::Integrated(h2.clone())).unwrap();
    for &x in &[-3.0, -1.1, -0.2, 0.0, 0.3, 1.4, 3.5] {
        let a = log_density_unnorm(x, &d);
        let b = log_density_hazard_form(x, &d, &h, &h2);
        assert!((a - b).abs() < 1e-8 * (1.0 + a.abs()), "{x}: {a} vs {b}");
    }
}

#[test]
fn stationary_ensemble_stays_put() {
    let d = ou();
    let s = normalize(&d).unwrap();
    let mut rng = RngStream::new(31, 0);
    let start = s.sample(&mut rng, 100_000);
    let end: Vec<f64> = start.iter().map(|&q| euler_advance(&d, q, 1e-3, 1000, &mut rng)).collect();
    let e = EmpiricalDistribution::new(end).unwrap();
    assert!(ks_distance(&e, |x| s.cdf(x)) < 0.02);
}

#[test]
fn steeper_negative_side_has_less_mass() {
    let sym = normalize(&ou()).unwrap();
    let d = DiffusionParams::new(1.0, 0.0, 0.5, 0.5, LimitH::identity(), LimitH::Linear { slope: 3.0 }).unwrap();
    let asym = normalize(&d).unwrap();
    use dedq_core::Class;
    assert!(asym.side_mass(Class::Minus) < sym.side_mass(Class::Minus));
}

#[test]
fn patience_scaling_limits() {
    let specs = [
        PatienceSpec::exponential(1.5).unwrap(),
        PatienceSpec::FixedCdf(FixedCdf::new(FixedBase::Uniform { upper: 2.0 }, None).unwrap()),
        PatienceSpec::FixedCdf(FixedCdf::new(FixedBase::Exponential { rate: 1.0 }, Some(0.1)).unwrap()),
        PatienceSpec::constant_hazard(0.7).unwrap(),
        PatienceSpec::HazardScaled(Hazard::piecewise(vec![1.0], vec![0.5, 2.0]).unwrap()),
        PatienceSpec::HazardScaled(Hazard::affine_capped(0.2, 1.5, 2.0).unwrap()),
    ];
    for spec in &specs {
        let errs: Vec<f64> = [100u64, 10_000, 1_000_000].iter().map(|&n| limit_error(spec, n, 5.0, 501)).collect();
        let decreasing = errs.windows(2).all(|w| w[1] < w[0] || w[1] <= 1e-12);
        assert!(decreasing, "{spec:?}: {errs:?}");
    }
    assert_eq!(LimitH::identity().eval(2.0), 2.0);
}
