//! Special functions, clamping, and random streams shared by every other module.
//!
//! Hot paths use the unchecked `f64` helpers (`phi`, `phi_inv`, `logit`, ...).
//! The checked entry points (`std_normal_cdf`, `std_normal_quantile`) reject
//! non-finite input and return [`UnitInterval`] values.

mod minimize;
mod normal;
mod quadrature;
mod rng;

pub use minimize::{brent_minimize, grid_then_brent, Minimum};
pub use normal::{
    norm_logpdf, norm_pdf, phi, phi_inv, std_normal_cdf, std_normal_quantile, LN_SQRT_2PI,
};
pub use quadrature::{gauss_legendre, integrate_adaptive, GaussLegendre};
pub use rng::{derive_seed, RngStream};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Clamp used for every unit-interval value that enters a log or a quantile.
pub const EPS: f64 = 1e-12;

/// Clamps `u` into `[EPS, 1 - EPS]`.
#[inline]
pub fn clamp_unit(u: f64) -> f64 {
    u.clamp(EPS, 1.0 - EPS)
}

/// A value strictly inside (0, 1), clamped to `[EPS, 1 - EPS]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UnitInterval(f64);

impl UnitInterval {
    /// Clamps a finite value into the open unit interval.
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::NonFinite {
                context: "unit interval",
                value,
            });
        }
        Ok(Self(clamp_unit(value)))
    }

    /// Like [`UnitInterval::new`] but maps NaN to 0.5; only for values that
    /// are known to come from a probability computation.
    pub fn clamped(value: f64) -> Self {
        if value.is_nan() {
            Self(0.5)
        } else {
            Self(clamp_unit(value))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl From<UnitInterval> for f64 {
    fn from(u: UnitInterval) -> f64 {
        u.0
    }
}

/// `ln(u / (1 - u))` on the clamped domain.
#[inline]
pub fn logit(u: f64) -> f64 {
    let u = clamp_unit(u);
    u.ln() - (-u).ln_1p()
}

/// Logistic function, evaluated without overflow for large |z|.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
#[inline]
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Inverse of [`softplus`] for `y > 0`.
pub fn softplus_inv(y: f64) -> f64 {
    // ln(e^y - 1) = y + ln(1 - e^-y)
    y + (-(-y).exp()).ln_1p()
}

/// `ln sigmoid(z) = -softplus(-z)`.
#[inline]
pub fn log_sigmoid(z: f64) -> f64 {
    -softplus(-z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn clamping_is_idempotent() {
        for &v in &[-3.0, 0.0, 1e-15, 0.3, 1.0, 7.0] {
            let once = UnitInterval::new(v).unwrap();
            let twice = UnitInterval::new(once.get()).unwrap();
            assert_eq!(once, twice);
            assert!(once.get() > 0.0 && once.get() < 1.0);
        }
        assert!(UnitInterval::new(f64::NAN).is_err());
        assert!(UnitInterval::new(f64::INFINITY).is_err());
    }

    #[test]
    fn logit_examples() {
        assert_eq!(logit(0.5), 0.0);
        // ln 9 by direct evaluation of the logarithm
        assert!((logit(0.9) - 9f64.ln()).abs() < 1e-14);
        assert!((logit(sigmoid(3.7)) - 3.7).abs() < 1e-12);
    }

    #[test]
    fn logit_strictly_increasing_on_grid() {
        let mut prev = f64::NEG_INFINITY;
        for i in 1..10_000 {
            let v = logit(i as f64 / 10_000.0);
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn softplus_round_trip() {
        for &y in &[1e-4, 0.1, 0.7, 1.0, 5.0, 40.0] {
            assert!((softplus(softplus_inv(y)) - y).abs() < 1e-12 * y.max(1.0));
        }
    }

    proptest! {
        #[test]
        fn sigmoid_logit_mutual_inverse(z in -5.0f64..5.0) {
            // 1 - sigmoid(z) loses relative precision as |z| grows
            let back = logit(sigmoid(z));
            prop_assert!((back - z).abs() < 1e-12);
        }

        #[test]
        fn logit_sigmoid_mutual_inverse(u in 1e-6f64..(1.0 - 1e-6)) {
            prop_assert!((sigmoid(logit(u)) - u).abs() < 1e-12);
        }
    }
}
