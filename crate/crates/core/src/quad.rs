//! Adaptive Gauss-Kronrod quadrature and monotone root bracketing.

use alloc::vec::Vec;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One 15-point Kronrod panel; returns (estimate, |kronrod - gauss|).
fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(centre - dx) + f(centre + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Integrates `f` over `[a, b]` to absolute tolerance `abs_tol` or relative
/// tolerance `rel_tol`, whichever is looser, by global bisection of the
/// worst panel. Returns `(value, error_estimate)`.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> (f64, f64) {
    if a == b {
        return (0.0, 0.0);
    }
    if b < a {
        let (v, e) = integrate(f, b, a, abs_tol, rel_tol);
        return (-v, e);
    }
    let (v0, e0) = gk15(&mut f, a, b);
    let mut panels: Vec<(f64, f64, f64, f64)> = alloc::vec![(a, b, v0, e0)];
    let mut total = v0;
    let mut err = e0;
    for _ in 0..2000 {
        if err <= abs_tol.max(rel_tol * total.abs()) {
            break;
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("at least one panel");
        let (pa, pb, pv, pe) = panels.swap_remove(worst);
        let mid = 0.5 * (pa + pb);
        if mid <= pa || mid >= pb {
            panels.push((pa, pb, pv, pe));
            break;
        }
        let (lv, le) = gk15(&mut f, pa, mid);
        let (rv, re) = gk15(&mut f, mid, pb);
        total += lv + rv - pv;
        err += le + re - pe;
        panels.push((pa, mid, lv, le));
        panels.push((mid, pb, rv, re));
    }
    // resum to shed accumulated cancellation from the running updates
    let total = panels.iter().map(|p| p.2).sum();
    let err = panels.iter().map(|p| p.3).sum();
    (total, err)
}

/// [`integrate`] on `[a, b]` split at the interior points of `cuts`, for
/// integrands with known kinks or jumps. Points outside `(a, b)` are ignored.
pub fn integrate_split<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    cuts: &[f64],
    abs_tol: f64,
    rel_tol: f64,
) -> f64 {
    let (lo, hi, sign) = if a <= b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut total = 0.0;
    let mut left = lo;
    for &c in cuts.iter().filter(|&&c| c > lo && c < hi) {
        total += integrate(&mut f, left, c, abs_tol, rel_tol).0;
        left = c;
    }
    total += integrate(&mut f, left, hi, abs_tol, rel_tol).0;
    sign * total
}

/// Finds `x` in `[lo, hi]` with `g(x) = target` for nondecreasing `g`, by
/// bisection down to floating-point resolution.
pub fn invert_monotone<G: FnMut(f64) -> f64>(
    mut g: G,
    target: f64,
    mut lo: f64,
    mut hi: f64,
) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math;

    #[test]
    fn polynomials_are_exact() {
        let (v, _) = integrate(|x| x * x * x - 2.0 * x, 0.0, 3.0, 1e-14, 1e-14);
        assert!((v - (81.0 / 4.0 - 9.0)).abs() < 1e-12);
    }

    #[test]
    fn gaussian_integral() {
        let (v, e) = integrate(|x| math::exp(-x * x), -9.0, 9.0, 1e-15, 1e-13);
        assert!((v - core::f64::consts::PI.sqrt()).abs() < 1e-12, "{v} {e}");
    }

    #[test]
    fn kink_is_resolved_by_adaptivity() {
        let (v, _) = integrate(|x: f64| x.abs(), -1.0, 2.0, 1e-13, 1e-13);
        assert!((v - 2.5).abs() < 1e-11);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let (v, _) = integrate(|x| x, 2.0, 0.0, 1e-14, 1e-14);
        assert!((v + 2.0).abs() < 1e-14);
    }

    #[test]
    fn bisection_inverts() {
        let x = invert_monotone(|x| x * x, 2.0, 0.0, 10.0);
        assert!((x - core::f64::consts::SQRT_2).abs() < 1e-14);
    }
}
