//! Double-double arithmetic (about 32 significant digits), real and complex.
//!
//! Used where orbits must be followed far below the double-precision floor:
//! strong stable contraction checks and cross-checks of long jet
//! compositions.

use core::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use crate::C64;

/// An unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DD {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, libm::fma(a, b, -p))
}

impl DD {
    pub const ZERO: DD = DD { hi: 0.0, lo: 0.0 };
    pub const ONE: DD = DD { hi: 1.0, lo: 0.0 };

    pub const fn from_f64(x: f64) -> Self {
        DD { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return DD::ZERO;
        }
        let x = libm::sqrt(self.hi);
        // one Newton step: x + (a - x^2) / (2x)
        let (p, e) = two_prod(x, x);
        let r = ((self.hi - p) - e + self.lo) / (2.0 * x);
        let (hi, lo) = quick_two_sum(x, r);
        DD { hi, lo }
    }
}

impl From<f64> for DD {
    fn from(x: f64) -> Self {
        DD::from_f64(x)
    }
}

impl Add for DD {
    type Output = DD;
    #[inline]
    fn add(self, o: DD) -> DD {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        DD { hi, lo }
    }
}

impl Neg for DD {
    type Output = DD;
    #[inline]
    fn neg(self) -> DD {
        DD { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for DD {
    type Output = DD;
    #[inline]
    fn sub(self, o: DD) -> DD {
        self + (-o)
    }
}

impl Mul for DD {
    type Output = DD;
    #[inline]
    fn mul(self, o: DD) -> DD {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        DD { hi, lo }
    }
}

impl Div for DD {
    type Output = DD;
    fn div(self, o: DD) -> DD {
        let q1 = self.hi / o.hi;
        let r = self - o * DD::from_f64(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * DD::from_f64(q2);
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        DD { hi, lo } + DD::from_f64(q3)
    }
}

impl AddAssign for DD {
    fn add_assign(&mut self, o: DD) {
        *self = *self + o;
    }
}

impl SubAssign for DD {
    fn sub_assign(&mut self, o: DD) {
        *self = *self - o;
    }
}

impl MulAssign for DD {
    fn mul_assign(&mut self, o: DD) {
        *self = *self * o;
    }
}

/// Complex double-double.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DDC {
    pub re: DD,
    pub im: DD,
}

impl DDC {
    pub const ZERO: DDC = DDC { re: DD::ZERO, im: DD::ZERO };
    pub const ONE: DDC = DDC { re: DD::ONE, im: DD::ZERO };

    pub fn new(re: DD, im: DD) -> Self {
        DDC { re, im }
    }

    pub fn to_c64(self) -> C64 {
        C64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn norm_sqr(self) -> DD {
        self.re * self.re + self.im * self.im
    }

    /// Modulus, rounded to double.
    pub fn norm(self) -> f64 {
        libm::hypot(self.re.to_f64(), self.im.to_f64())
    }

    pub fn conj(self) -> Self {
        DDC { re: self.re, im: -self.im }
    }

    pub fn scale(self, s: DD) -> Self {
        DDC { re: self.re * s, im: self.im * s }
    }
}

impl From<C64> for DDC {
    fn from(z: C64) -> Self {
        DDC { re: DD::from_f64(z.re), im: DD::from_f64(z.im) }
    }
}

impl From<f64> for DDC {
    fn from(x: f64) -> Self {
        DDC { re: DD::from_f64(x), im: DD::ZERO }
    }
}

impl Add for DDC {
    type Output = DDC;
    #[inline]
    fn add(self, o: DDC) -> DDC {
        DDC { re: self.re + o.re, im: self.im + o.im }
    }
}

impl Sub for DDC {
    type Output = DDC;
    #[inline]
    fn sub(self, o: DDC) -> DDC {
        DDC { re: self.re - o.re, im: self.im - o.im }
    }
}

impl Neg for DDC {
    type Output = DDC;
    fn neg(self) -> DDC {
        DDC { re: -self.re, im: -self.im }
    }
}

impl Mul for DDC {
    type Output = DDC;
    #[inline]
    fn mul(self, o: DDC) -> DDC {
        DDC { re: self.re * o.re - self.im * o.im, im: self.re * o.im + self.im * o.re }
    }
}

impl Div for DDC {
    type Output = DDC;
    fn div(self, o: DDC) -> DDC {
        let d = o.norm_sqr();
        let n = self * o.conj();
        DDC { re: n.re / d, im: n.im / d }
    }
}

impl AddAssign for DDC {
    fn add_assign(&mut self, o: DDC) {
        *self = *self + o;
    }
}

impl SubAssign for DDC {
    fn sub_assign(&mut self, o: DDC) {
        *self = *self - o;
    }
}

impl MulAssign for DDC {
    fn mul_assign(&mut self, o: DDC) {
        *self = *self * o;
    }
}

/// The operations the polynomial routines need from a coefficient field.
pub trait Ring:
    Copy
    + Default
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + From<C64>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn to_c64(self) -> C64;
    /// Modulus, rounded to double.
    fn modulus(self) -> f64;
    fn from_usize(n: usize) -> Self {
        Self::from(C64::new(n as f64, 0.0))
    }
}

impl Ring for C64 {
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    fn one() -> Self {
        C64::new(1.0, 0.0)
    }
    fn to_c64(self) -> C64 {
        self
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
}

impl Ring for DDC {
    fn zero() -> Self {
        DDC::ZERO
    }
    fn one() -> Self {
        DDC::ONE
    }
    fn to_c64(self) -> C64 {
        DDC::to_c64(self)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_third_round_trip() {
        let third = DD::ONE / DD::from_f64(3.0);
        let back = third * DD::from_f64(3.0) - DD::ONE;
        assert!(back.to_f64().abs() < 1e-31);
    }

    #[test]
    fn recovers_bits_lost_in_double() {
        let tiny = DD::from_f64(1e-20);
        let s = DD::ONE + tiny - DD::ONE;
        assert_eq!(s.to_f64(), 1e-20);
        assert_eq!(1.0 + 1e-20 - 1.0, 0.0);
    }

    #[test]
    fn sqrt_two() {
        let r = DD::from_f64(2.0).sqrt();
        let e = r * r - DD::from_f64(2.0);
        assert!(e.to_f64().abs() < 1e-30);
    }

    #[test]
    fn complex_division() {
        let a = DDC::from(C64::new(1.0, 2.0));
        let b = DDC::from(C64::new(-3.0, 0.5));
        let q = a / b;
        let e = q * b - a;
        assert!(e.norm() < 1e-30);
    }
}
