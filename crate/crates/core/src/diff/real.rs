use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::numerics::{self, clamp_unit, EPS};

/// Scalar arithmetic shared by `f64`, [`super::Var`] and [`super::Dual`].
///
/// Every primitive carries an exact local derivative rule in the
/// differentiable implementations. `norm_quantile` and `logit` clamp their
/// input to `[EPS, 1 - EPS]`.
pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    /// Whether local partials are consumed; lets expensive custom nodes skip them.
    const TRACKS_GRADIENT: bool = true;

    fn value(self) -> f64;

    /// A constant living in the same context as `self`.
    fn lift(self, c: f64) -> Self;

    /// A node with prescribed value and local derivative `d` w.r.t. `self`.
    fn custom1(self, value: f64, d: f64) -> Self;

    /// Two-argument node with prescribed value and local partials.
    fn custom2(self, other: Self, value: f64, da: f64, db: f64) -> Self;

    /// Same value, no gradient flows back through the result.
    fn detach(self) -> Self;

    #[inline]
    fn exp(self) -> Self {
        let v = self.value().exp();
        self.custom1(v, v)
    }

    #[inline]
    fn ln(self) -> Self {
        let x = self.value();
        self.custom1(x.ln(), 1.0 / x)
    }

    #[inline]
    fn expm1(self) -> Self {
        let x = self.value();
        self.custom1(x.exp_m1(), x.exp())
    }

    #[inline]
    fn ln_1p(self) -> Self {
        let x = self.value();
        self.custom1(x.ln_1p(), 1.0 / (1.0 + x))
    }

    #[inline]
    fn sqrt(self) -> Self {
        let v = self.value().sqrt();
        self.custom1(v, 0.5 / v)
    }

    #[inline]
    fn tanh(self) -> Self {
        let t = self.value().tanh();
        self.custom1(t, 1.0 - t * t)
    }

    #[inline]
    fn recip(self) -> Self {
        let x = self.value();
        self.custom1(1.0 / x, -1.0 / (x * x))
    }

    #[inline]
    fn square(self) -> Self {
        let x = self.value();
        self.custom1(x * x, 2.0 * x)
    }

    /// `self^p` for a constant exponent; `self > 0` unless `p` is an integer.
    #[inline]
    fn powf(self, p: f64) -> Self {
        let x = self.value();
        let v = x.powf(p);
        self.custom1(v, p * x.powf(p - 1.0))
    }

    /// `self^e` with a differentiable exponent; `self > 0`.
    #[inline]
    fn pow(self, e: Self) -> Self {
        let (x, p) = (self.value(), e.value());
        let v = x.powf(p);
        self.custom2(e, v, p * x.powf(p - 1.0), v * x.ln())
    }

    #[inline]
    fn sigmoid(self) -> Self {
        let s = numerics::sigmoid(self.value());
        self.custom1(s, s * (1.0 - s))
    }

    #[inline]
    fn logit(self) -> Self {
        let u = clamp_unit(self.value());
        let d = if self.value() > EPS && self.value() < 1.0 - EPS {
            1.0 / (u * (1.0 - u))
        } else {
            0.0
        };
        self.custom1(numerics::logit(u), d)
    }

    #[inline]
    fn softplus(self) -> Self {
        let x = self.value();
        self.custom1(numerics::softplus(x), numerics::sigmoid(x))
    }

    /// `ln sigmoid(self)`
    #[inline]
    fn log_sigmoid(self) -> Self {
        let x = self.value();
        self.custom1(numerics::log_sigmoid(x), numerics::sigmoid(-x))
    }

    #[inline]
    fn norm_cdf(self) -> Self {
        let x = self.value();
        self.custom1(numerics::phi(x), numerics::norm_pdf(x))
    }

    /// Φ⁻¹ with dΦ⁻¹(u)/du = 1/φ(Φ⁻¹(u)).
    #[inline]
    fn norm_quantile(self) -> Self {
        let u = self.value();
        let x = numerics::phi_inv(u);
        let d = if u > EPS && u < 1.0 - EPS {
            1.0 / numerics::norm_pdf(x)
        } else {
            0.0
        };
        self.custom1(x, d)
    }

    #[inline]
    fn norm_logpdf(self) -> Self {
        let x = self.value();
        self.custom1(numerics::norm_logpdf(x), -x)
    }

    /// Clamp into `[EPS, 1 - EPS]`; outside that range the result is constant.
    #[inline]
    fn clamp_unit(self) -> Self {
        let x = self.value();
        if x < EPS || x > 1.0 - EPS {
            self.lift(clamp_unit(x))
        } else {
            self
        }
    }

    /// `c - self`
    #[inline]
    fn rsub(self, c: f64) -> Self {
        -self + c
    }

    /// `c / self`
    #[inline]
    fn rdiv(self, c: f64) -> Self {
        self.recip() * c
    }
}

impl Real for f64 {
    const TRACKS_GRADIENT: bool = false;

    #[inline]
    fn value(self) -> f64 {
        self
    }
    #[inline]
    fn lift(self, c: f64) -> Self {
        c
    }
    #[inline]
    fn custom1(self, value: f64, _d: f64) -> Self {
        value
    }
    #[inline]
    fn custom2(self, _other: Self, value: f64, _da: f64, _db: f64) -> Self {
        value
    }
    #[inline]
    fn detach(self) -> Self {
        self
    }

    // derivative-free fast paths
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn ln(self) -> Self {
        f64::ln(self)
    }
    #[inline]
    fn expm1(self) -> Self {
        f64::exp_m1(self)
    }
    #[inline]
    fn ln_1p(self) -> Self {
        f64::ln_1p(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    #[inline]
    fn recip(self) -> Self {
        1.0 / self
    }
    #[inline]
    fn square(self) -> Self {
        self * self
    }
    #[inline]
    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }
    #[inline]
    fn pow(self, e: Self) -> Self {
        f64::powf(self, e)
    }
    #[inline]
    fn sigmoid(self) -> Self {
        numerics::sigmoid(self)
    }
    #[inline]
    fn logit(self) -> Self {
        numerics::logit(self)
    }
    #[inline]
    fn softplus(self) -> Self {
        numerics::softplus(self)
    }
    #[inline]
    fn log_sigmoid(self) -> Self {
        numerics::log_sigmoid(self)
    }
    #[inline]
    fn norm_cdf(self) -> Self {
        numerics::phi(self)
    }
    #[inline]
    fn norm_quantile(self) -> Self {
        numerics::phi_inv(self)
    }
    #[inline]
    fn norm_logpdf(self) -> Self {
        numerics::norm_logpdf(self)
    }
    #[inline]
    fn clamp_unit(self) -> Self {
        clamp_unit(self)
    }
    #[inline]
    fn rsub(self, c: f64) -> Self {
        c - self
    }
    #[inline]
    fn rdiv(self, c: f64) -> Self {
        c / self
    }
}
