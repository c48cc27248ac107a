//! Closed-form log-densities, h-functions and inverses for the one-parameter
//! Archimedean families, in log space where the textbook forms overflow.

use crate::diff::{Dual, Real};
use crate::numerics::{clamp_unit, EPS};

/// ln(e^a + e^b)
#[inline]
fn log_add_exp<R: Real>(a: R, b: R) -> R {
    let (m, n) = if a.value() >= b.value() { (a, b) } else { (b, a) };
    m + (n - m).exp().ln_1p()
}

// ---- Clayton, θ > 0 ----

/// ln(u^-θ + v^-θ - 1) from `lu = ln u`, `lv = ln v`.
#[inline]
fn clayton_log_s<R: Real>(lu: R, lv: R, theta: f64) -> R {
    let (a, b) = (lu * -theta, lv * -theta);
    let (m, n) = if a.value() >= b.value() { (a, b) } else { (b, a) };
    // e^m + e^n - 1 = e^m (1 + e^-m expm1(n))
    m + ((-m).exp() * n.expm1()).ln_1p()
}

#[inline]
pub fn clayton_log_density<R: Real>(u: R, v: R, theta: f64) -> R {
    let (lu, lv) = (u.ln(), v.ln());
    let l = clayton_log_s(lu, lv, theta);
    (lu + lv) * -(1.0 + theta) - l * (2.0 + 1.0 / theta) + theta.ln_1p()
}

#[inline]
pub fn clayton_h<R: Real>(u: R, v: R, theta: f64) -> R {
    let (lu, lv) = (u.ln(), v.ln());
    let l = clayton_log_s(lu, lv, theta);
    (lv * -(theta + 1.0) - l * (1.0 + 1.0 / theta)).exp()
}

#[inline]
pub fn clayton_h_inv<R: Real>(w: R, v: R, theta: f64) -> R {
    let b = v.ln() * -theta;
    let s = b - w.ln() * (theta / (1.0 + theta));
    // u^-θ = e^s (e^-s - expm1(b - s))
    let lu = (s + ((-s).exp() - (b - s).expm1()).ln()) * (-1.0 / theta);
    lu.exp()
}

/// C(u, v), used by tests as an independent reference.
pub fn clayton_cdf(u: f64, v: f64, theta: f64) -> f64 {
    (u.powf(-theta) + v.powf(-theta) - 1.0).powf(-1.0 / theta)
}

// ---- Gumbel, θ ≥ 1 ----

/// ln A with A = (-ln u)^θ + (-ln v)^θ, plus -ln u and -ln v.
#[inline]
fn gumbel_parts<R: Real>(u: R, v: R, theta: f64) -> (R, R, R) {
    let (x, y) = (-u.ln(), -v.ln());
    (log_add_exp(x.ln() * theta, y.ln() * theta), x, y)
}

#[inline]
pub fn gumbel_log_density<R: Real>(u: R, v: R, theta: f64) -> R {
    let (la, x, y) = gumbel_parts(u, v, theta);
    let a1 = (la / theta).exp();
    -a1 + x + y + (x.ln() + y.ln()) * (theta - 1.0)
        + la * (1.0 / theta - 2.0)
        + (a1 + (theta - 1.0)).ln()
}

#[inline]
pub fn gumbel_h<R: Real>(u: R, v: R, theta: f64) -> R {
    let (la, _, y) = gumbel_parts(u, v, theta);
    let a1 = (la / theta).exp();
    (-a1 + la * (1.0 / theta - 1.0) + y.ln() * (theta - 1.0) + y).exp()
}

pub fn gumbel_cdf(u: f64, v: f64, theta: f64) -> f64 {
    let a = (-u.ln()).powf(theta) + (-v.ln()).powf(theta);
    (-a.powf(1.0 / theta)).exp()
}

const GUMBEL_MAX_ITER: usize = 200;
const GUMBEL_TOL: f64 = 1e-10;

/// Safeguarded Newton on `h(u|v) = w` inside a shrinking bisection bracket.
pub fn gumbel_h_inv_value(w: f64, v: f64, theta: f64) -> f64 {
    let (w, v) = (clamp_unit(w), clamp_unit(v));
    let resid = |u: f64| gumbel_h(u, v, theta) - w;
    let (mut lo, mut hi) = (EPS, 1.0 - EPS);
    if resid(lo) >= 0.0 {
        return lo;
    }
    if resid(hi) <= 0.0 {
        return hi;
    }
    let mut u = w;
    for _ in 0..GUMBEL_MAX_ITER {
        let r = resid(u);
        if r.abs() <= 1e-3 * GUMBEL_TOL * w.min(1.0 - w) {
            break;
        }
        if r > 0.0 {
            hi = u
        } else {
            lo = u
        }
        let newton = u - r / gumbel_log_density(u, v, theta).exp();
        if (newton - u).abs() <= 1e-15 * u {
            break;
        }
        u = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 1e-16 {
            break;
        }
    }
    u
}

/// Numeric inverse wrapped as a custom node: ∂u/∂w = 1/c, ∂u/∂v = -(∂h/∂v)/c.
#[inline]
pub fn gumbel_h_inv<R: Real>(w: R, v: R, theta: f64) -> R {
    let u = gumbel_h_inv_value(w.value(), v.value(), theta);
    if !R::TRACKS_GRADIENT || u <= EPS || u >= 1.0 - EPS {
        return w.custom2(v, u, 0.0, 0.0);
    }
    let c = gumbel_log_density(u, v.value(), theta).exp();
    let dh_dv = gumbel_h(Dual::constant(u), Dual::new(v.value(), 1.0), theta).deriv();
    w.custom2(v, u, 1.0 / c, -dh_dv / c)
}

// ---- Frank, θ ≠ 0 ----

/// (1 - e^-θ) - (1 - e^-θu)(1 - e^-θv), rearranged into two same-signed terms.
#[inline]
fn frank_denom<R: Real>(u: R, v: R, theta: f64) -> R {
    (u * -theta).exp() * -((v * -theta).expm1())
        + (v * -theta).exp() * -((v.rsub(1.0) * -theta).expm1())
}

#[inline]
pub fn frank_log_density<R: Real>(u: R, v: R, theta: f64) -> R {
    let d = frank_denom(u, v, theta);
    let d = if d.value() < 0.0 { -d } else { d };
    -((u + v) * theta) - d.ln() * 2.0 + (theta * -(-theta).exp_m1()).ln()
}

#[inline]
pub fn frank_h<R: Real>(u: R, v: R, theta: f64) -> R {
    (v * -theta).exp() * -((u * -theta).expm1()) / frank_denom(u, v, theta)
}

#[inline]
pub fn frank_h_inv<R: Real>(w: R, v: R, theta: f64) -> R {
    let one_m_w = w.rsub(1.0);
    let num = one_m_w + w * (v.rsub(1.0) * -theta).exp();
    let den = w + one_m_w * (v * -theta).exp();
    let ln_z = v * -theta + num.ln() - den.ln();
    ln_z * (-1.0 / theta)
}

pub fn frank_cdf(u: f64, v: f64, theta: f64) -> f64 {
    let num = (-theta * u).exp_m1() * (-theta * v).exp_m1();
    -(num / (-theta).exp_m1()).ln_1p() / theta
}

/// Debye function D₁(θ) = (1/θ) ∫₀^θ t/(eᵗ - 1) dt.
pub fn debye1(theta: f64) -> f64 {
    let f = |t: f64| if t == 0.0 { 1.0 } else { t / t.exp_m1() };
    crate::numerics::integrate_adaptive(&mut { f }, 0.0, theta, 1e-13) / theta
}
