//! Adaptive Simpson quadrature.

use crate::error::{Error, Result};

/// Absolute tolerance handed to each top-level panel.
pub const PANEL_ABS_TOL: f64 = 1e-12;
/// Global relative tolerance.
pub const GLOBAL_REL_TOL: f64 = 1e-10;
const MAX_DEPTH: u32 = 48;

/// `∫ₐᵇ f` by adaptive Simpson with Richardson correction.
///
/// A panel is accepted when `|S(left) + S(right) − S(whole)| ≤ 15·tol`, where the
/// tolerance is `max(abs_tol, rel_tol·|estimate|)` and halves on each split.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::invalid("quadrature limits must be finite"));
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let tol = abs_tol.max(rel_tol * whole.abs());
    let mut failed = false;
    let v = recurse(&f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH, &mut failed);
    if failed || !v.is_finite() {
        return Err(Error::Numerical(format!(
            "adaptive Simpson did not converge on [{a}, {b}] (estimate {v})"
        )));
    }
    Ok(v)
}

/// Same with the crate-wide default tolerances.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> Result<f64> {
    adaptive_simpson(f, a, b, PANEL_ABS_TOL, GLOBAL_REL_TOL)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    failed: &mut bool,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    // second clause: the panel is resolved to rounding level
    if delta.abs() <= 15.0 * tol || delta.abs() <= 64.0 * f64::EPSILON * (left.abs() + right.abs()) {
        return left + right + delta / 15.0;
    }
    if depth == 0 || m <= a || m >= b {
        *failed = true;
        return left + right + delta / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, failed)
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, failed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_and_exponentials() {
        let v = integrate(|x| x * x * x, 0.0, 2.0).unwrap();
        assert!((v - 4.0).abs() < 1e-13);
        let v = integrate(f64::exp, 0.0, 1.0).unwrap();
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-12);
        assert_eq!(integrate(f64::exp, 1.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn integrable_log_singularity() {
        // ∫₀¹ x ln x = -1/4
        let v = integrate(|x: f64| if x > 0.0 { x * x.ln() } else { 0.0 }, 0.0, 1.0).unwrap();
        assert!((v + 0.25).abs() < 1e-10);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let v = integrate(|x| x, 1.0, 0.0).unwrap();
        assert!((v + 0.5).abs() < 1e-14);
    }

    #[test]
    fn non_finite_integrand_is_reported() {
        assert!(integrate(|x: f64| 1.0 / x, 0.0, 1.0).is_err());
    }
}
