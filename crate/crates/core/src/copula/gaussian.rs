//! Gaussian copula with a differentiable correlation parameter.

use crate::diff::Real;

/// 1 - ρ², computed as (1 - ρ)(1 + ρ).
#[inline]
fn one_minus_sq<R: Real>(rho: R) -> R {
    rho.rsub(1.0) * (rho + 1.0)
}

/// log c in normal scores `x = Φ⁻¹(u)`, `y = Φ⁻¹(v)`.
#[inline]
pub fn log_density_scores<R: Real>(x: R, y: R, rho: R) -> R {
    let om = one_minus_sq(rho);
    let num = rho.square() * (x.square() + y.square()) - rho * x * y * 2.0;
    -(om.ln() * 0.5) - num / (om * 2.0)
}

#[inline]
pub fn log_density<R: Real>(u: R, v: R, rho: R) -> R {
    log_density_scores(u.norm_quantile(), v.norm_quantile(), rho)
}

/// F(u | v) = Φ((x - ρy)/√(1-ρ²)).
#[inline]
pub fn h<R: Real>(u: R, v: R, rho: R) -> R {
    let (x, y) = (u.norm_quantile(), v.norm_quantile());
    ((x - rho * y) / one_minus_sq(rho).sqrt()).norm_cdf().clamp_unit()
}

/// Inverse of [`h`] in its first argument.
#[inline]
pub fn h_inv<R: Real>(w: R, v: R, rho: R) -> R {
    let (z, y) = (w.norm_quantile(), v.norm_quantile());
    (z * one_minus_sq(rho).sqrt() + rho * y).norm_cdf().clamp_unit()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::Tape;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-12)
    }

    #[test]
    fn theta_derivatives_match_central_differences() {
        let step = 1e-5;
        for &(u, v, r) in &[(0.3, 0.8, 0.4), (0.05, 0.6, -0.7), (0.9, 0.95, 0.85), (0.5, 0.2, 0.0)] {
            let tape = Tape::new();
            let rho = tape.var(r);
            let (uu, vv) = (tape.constant(u), tape.constant(v));

            let d = log_density(uu, vv, rho).exp();
            let g = tape.backward(d).wrt(rho);
            let f = |t: f64| log_density(u, v, t).exp();
            let fd = (f(r + step) - f(r - step)) / (2.0 * step);
            assert!(rel(g, fd) < 1e-4, "density: {g} vs {fd}");

            let hi = h_inv(uu, vv, rho);
            let g = tape.backward(hi).wrt(rho);
            let f = |t: f64| h_inv(u, v, t);
            let fd = (f(r + step) - f(r - step)) / (2.0 * step);
            assert!(rel(g, fd) < 1e-4, "h_inv: {g} vs {fd}");
        }
    }
}
