use std::ops::{Add, Div, Mul, Neg, Sub};

use super::Real;

/// Forward-mode dual number `v + d·ε` carrying one directional derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    v: f64,
    d: f64,
}

impl Dual {
    pub fn new(v: f64, d: f64) -> Self {
        Dual { v, d }
    }

    pub fn constant(v: f64) -> Self {
        Dual { v, d: 0.0 }
    }

    pub fn deriv(self) -> f64 {
        self.d
    }
}

impl Real for Dual {
    #[inline]
    fn value(self) -> f64 {
        self.v
    }
    #[inline]
    fn lift(self, c: f64) -> Self {
        Dual::constant(c)
    }
    #[inline]
    fn custom1(self, value: f64, d: f64) -> Self {
        Dual::new(value, d * self.d)
    }
    #[inline]
    fn custom2(self, other: Self, value: f64, da: f64, db: f64) -> Self {
        Dual::new(value, da * self.d + db * other.d)
    }
    #[inline]
    fn detach(self) -> Self {
        Dual::constant(self.v)
    }
}

impl Add for Dual {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Dual::new(self.v + o.v, self.d + o.d)
    }
}

impl Sub for Dual {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Dual::new(self.v - o.v, self.d - o.d)
    }
}

impl Mul for Dual {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Dual::new(self.v * o.v, self.d * o.v + self.v * o.d)
    }
}

impl Div for Dual {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let q = self.v / o.v;
        Dual::new(q, (self.d - q * o.d) / o.v)
    }
}

impl Neg for Dual {
    type Output = Self;
    fn neg(self) -> Self {
        Dual::new(-self.v, -self.d)
    }
}

impl Add<f64> for Dual {
    type Output = Self;
    fn add(self, c: f64) -> Self {
        Dual::new(self.v + c, self.d)
    }
}

impl Sub<f64> for Dual {
    type Output = Self;
    fn sub(self, c: f64) -> Self {
        Dual::new(self.v - c, self.d)
    }
}

impl Mul<f64> for Dual {
    type Output = Self;
    fn mul(self, c: f64) -> Self {
        Dual::new(self.v * c, self.d * c)
    }
}

impl Div<f64> for Dual {
    type Output = Self;
    fn div(self, c: f64) -> Self {
        Dual::new(self.v / c, self.d / c)
    }
}
