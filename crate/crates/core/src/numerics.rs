//! Extended-range complex arithmetic.
//!
//! `ExtComplex` stores a complex mantissa with modulus in `[1, 2)` and a
//! separate 64-bit binary exponent, so coefficient magnitudes such as
//! `n^{k/2} / sqrt(k!)` at `n = 5000` stay representable.  A small
//! double-double type is included for the root solver's precision retry.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("logarithm of zero")]
    LogOfZero,
}

const LN_2: f64 = std::f64::consts::LN_2;

/// Exact power of two for `k` in the normal exponent range; 0 or inf outside.
#[inline]
pub fn pow2(k: i64) -> f64 {
    if k < -1022 {
        if k < -1074 {
            0.0
        } else {
            // subnormal: go through two steps
            f64::from_bits(((k + 600 + 1023) as u64) << 52) * f64::from_bits(((-600 + 1023) as u64) << 52)
        }
    } else if k > 1023 {
        f64::INFINITY
    } else {
        f64::from_bits(((k + 1023) as u64) << 52)
    }
}

/// `x * 2^k` without intermediate overflow for any `k`.
pub fn ldexp(x: f64, k: i64) -> f64 {
    let mut x = x;
    let mut k = k;
    while k > 1000 {
        x *= pow2(1000);
        k -= 1000;
    }
    while k < -1000 {
        x *= pow2(-1000);
        k += 1000;
    }
    x * pow2(k)
}

/// Unbiased binary exponent of a positive finite double: `floor(log2(x))`.
#[inline]
fn ilogb(x: f64) -> i64 {
    let bits = x.to_bits();
    let e = ((bits >> 52) & 0x7ff) as i64;
    if e == 0 {
        // subnormal
        let y = x * pow2(600);
        (((y.to_bits() >> 52) & 0x7ff) as i64) - 1023 - 600
    } else {
        e - 1023
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtComplex {
    mantissa: Complex64,
    exponent: i64,
}

impl ExtComplex {
    pub const ZERO: ExtComplex = ExtComplex { mantissa: Complex64::new(0.0, 0.0), exponent: 0 };
    pub const ONE: ExtComplex = ExtComplex { mantissa: Complex64::new(1.0, 0.0), exponent: 0 };

    /// Builds `mantissa * 2^exponent` and normalizes.
    pub fn from_parts(mantissa: Complex64, exponent: i64) -> Self {
        let m = mantissa.re.hypot(mantissa.im);
        if m == 0.0 || !m.is_finite() {
            if m == 0.0 {
                return Self::ZERO;
            }
            return ExtComplex { mantissa, exponent };
        }
        let e = ilogb(m);
        let mut mant = mantissa * pow2(-e);
        let mut e = e;
        // hypot rounding may leave the modulus just outside [1,2)
        let r = mant.re.hypot(mant.im);
        if r >= 2.0 {
            mant *= 0.5;
            e += 1;
        } else if r < 1.0 {
            mant *= 2.0;
            e -= 1;
        }
        ExtComplex { mantissa: mant, exponent: exponent + e }
    }

    pub fn new(re: f64, im: f64) -> Self {
        Self::from_parts(Complex64::new(re, im), 0)
    }

    pub fn from_complex(z: Complex64) -> Self {
        Self::from_parts(z, 0)
    }

    pub fn from_real(x: f64) -> Self {
        Self::from_parts(Complex64::new(x, 0.0), 0)
    }

    /// Value `exp(ln_abs + i*arg)`.
    pub fn from_polar_ln(ln_abs: f64, arg: f64) -> Self {
        let e2 = ln_abs / LN_2;
        let e = e2.floor();
        let frac = (e2 - e) * LN_2;
        let r = frac.exp();
        Self::from_parts(Complex64::from_polar(r, arg), e as i64)
    }

    pub fn mantissa(&self) -> Complex64 {
        self.mantissa
    }

    pub fn exponent(&self) -> i64 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.re == 0.0 && self.mantissa.im == 0.0
    }

    /// Plain complex value (may overflow to inf or underflow to 0).
    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(ldexp(self.mantissa.re, self.exponent), ldexp(self.mantissa.im, self.exponent))
    }

    pub fn conj(&self) -> Self {
        ExtComplex { mantissa: self.mantissa.conj(), exponent: self.exponent }
    }

    /// `ln|self|`; errors on zero.
    pub fn log_abs(&self) -> Result<f64, NumericsError> {
        if self.is_zero() {
            return Err(NumericsError::LogOfZero);
        }
        Ok(self.mantissa.norm().ln() + self.exponent as f64 * LN_2)
    }

    /// Argument of the value.
    pub fn arg(&self) -> f64 {
        self.mantissa.arg()
    }

    pub fn mul_complex(&self, z: Complex64) -> Self {
        Self::from_parts(self.mantissa * z, self.exponent)
    }

    pub fn scale_real(&self, x: f64) -> Self {
        Self::from_parts(self.mantissa * x, self.exponent)
    }

    /// Multiplication by `2^k`, exact.
    pub fn mul_pow2(&self, k: i64) -> Self {
        if self.is_zero() {
            return *self;
        }
        ExtComplex { mantissa: self.mantissa, exponent: self.exponent + k }
    }

    /// Ratio as a plain complex number (overflows to inf when huge).
    pub fn ratio(&self, other: &ExtComplex) -> Complex64 {
        let q = self.mantissa / other.mantissa;
        q * ldexp(1.0, self.exponent - other.exponent)
    }

    pub fn abs_ext(&self) -> ExtComplex {
        ExtComplex { mantissa: Complex64::new(self.mantissa.norm(), 0.0), exponent: self.exponent }
    }
}

pub fn ext_mul(a: ExtComplex, b: ExtComplex) -> ExtComplex {
    if a.is_zero() || b.is_zero() {
        return ExtComplex::ZERO;
    }
    ExtComplex::from_parts(a.mantissa * b.mantissa, a.exponent + b.exponent)
}

pub fn ext_add(a: ExtComplex, b: ExtComplex) -> ExtComplex {
    if a.is_zero() {
        return b;
    }
    if b.is_zero() {
        return a;
    }
    let d = a.exponent - b.exponent;
    if d > 53 {
        return a;
    }
    if d < -53 {
        return b;
    }
    if d >= 0 {
        ExtComplex::from_parts(a.mantissa + b.mantissa * pow2(-d), a.exponent)
    } else {
        ExtComplex::from_parts(a.mantissa * pow2(d) + b.mantissa, b.exponent)
    }
}

pub fn ext_log_abs(a: ExtComplex) -> Result<f64, NumericsError> {
    a.log_abs()
}

impl Mul for ExtComplex {
    type Output = ExtComplex;
    fn mul(self, rhs: ExtComplex) -> ExtComplex {
        ext_mul(self, rhs)
    }
}

impl Add for ExtComplex {
    type Output = ExtComplex;
    fn add(self, rhs: ExtComplex) -> ExtComplex {
        ext_add(self, rhs)
    }
}

impl Neg for ExtComplex {
    type Output = ExtComplex;
    fn neg(self) -> ExtComplex {
        ExtComplex { mantissa: -self.mantissa, exponent: self.exponent }
    }
}

impl Sub for ExtComplex {
    type Output = ExtComplex;
    fn sub(self, rhs: ExtComplex) -> ExtComplex {
        ext_add(self, -rhs)
    }
}

impl Div for ExtComplex {
    type Output = ExtComplex;
    fn div(self, rhs: ExtComplex) -> ExtComplex {
        if self.is_zero() {
            return ExtComplex::ZERO;
        }
        ExtComplex::from_parts(self.mantissa / rhs.mantissa, self.exponent - rhs.exponent)
    }
}

impl From<Complex64> for ExtComplex {
    fn from(z: Complex64) -> Self {
        ExtComplex::from_complex(z)
    }
}

impl fmt::Display for ExtComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}{:+}i)*2^{}", self.mantissa.re, self.mantissa.im, self.exponent)
    }
}

impl Serialize for ExtComplex {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        (self.mantissa.re, self.mantissa.im, self.exponent).serialize(s)
    }
}

impl<'de> Deserialize<'de> for ExtComplex {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let (re, im, e): (f64, f64, i64) = Deserialize::deserialize(d)?;
        Ok(ExtComplex::from_parts(Complex64::new(re, im), e))
    }
}

/// Running sum of `mantissa * 2^exp` terms for inner loops.  The stored
/// exponent tracks the largest term seen, so nothing is normalized per step.
#[derive(Clone, Copy, Debug)]
pub struct ExtAccumulator {
    m: Complex64,
    e: i64,
}

impl Default for ExtAccumulator {
    fn default() -> Self {
        ExtAccumulator { m: Complex64::new(0.0, 0.0), e: i64::MIN / 4 }
    }
}

impl ExtAccumulator {
    #[inline]
    pub fn add(&mut self, mant: Complex64, exp: i64) {
        if mant.re == 0.0 && mant.im == 0.0 {
            return;
        }
        let d = exp - self.e;
        if d > 0 {
            self.m = if d > 1074 { mant } else { self.m * pow2(-d.min(1022)) * pow2(-(d - d.min(1022))) + mant };
            self.e = exp;
        } else if d >= -1074 {
            self.m += mant * pow2(d.max(-1022)) * pow2(d - d.max(-1022));
        }
    }

    pub fn value(&self) -> ExtComplex {
        ExtComplex::from_parts(self.m, if self.m == Complex64::new(0.0, 0.0) { 0 } else { self.e })
    }
}

/// Real counterpart of `ExtAccumulator`, used for absolute-value bounds.
#[derive(Clone, Copy, Debug)]
pub struct RealAccumulator {
    m: f64,
    e: i64,
}

impl Default for RealAccumulator {
    fn default() -> Self {
        RealAccumulator { m: 0.0, e: i64::MIN / 4 }
    }
}

impl RealAccumulator {
    #[inline]
    pub fn add(&mut self, mant: f64, exp: i64) {
        if mant == 0.0 {
            return;
        }
        let d = exp - self.e;
        if d > 0 {
            self.m = if d > 1074 { mant } else { self.m * pow2(-d.min(1022)) * pow2(-(d - d.min(1022))) + mant };
            self.e = exp;
        } else if d >= -1074 {
            self.m += mant * pow2(d.max(-1022)) * pow2(d - d.max(-1022));
        }
    }

    /// Natural log of the accumulated value, `-inf` if nothing was added.
    pub fn ln(&self) -> f64 {
        if self.m <= 0.0 {
            return f64::NEG_INFINITY;
        }
        self.m.ln() + self.e as f64 * LN_2
    }
}

// ---------------------------------------------------------------------------
// double-double

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

impl Dd {
    pub const fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn mul_f64(self, b: f64) -> Dd {
        let (p, e) = two_prod(self.hi, b);
        let (hi, lo) = quick_two_sum(p, e + self.lo * b);
        Dd { hi, lo }
    }

    #[inline]
    pub fn scale_pow2(self, f: f64) -> Dd {
        Dd { hi: self.hi * f, lo: self.lo * f }
    }
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DdComplex {
    pub re: Dd,
    pub im: Dd,
}

impl DdComplex {
    pub fn from_complex(z: Complex64) -> DdComplex {
        DdComplex { re: Dd::from_f64(z.re), im: Dd::from_f64(z.im) }
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    #[inline]
    pub fn scale_pow2(self, f: f64) -> DdComplex {
        DdComplex { re: self.re.scale_pow2(f), im: self.im.scale_pow2(f) }
    }

    #[inline]
    pub fn mul_f64(self, x: f64) -> DdComplex {
        DdComplex { re: self.re.mul_f64(x), im: self.im.mul_f64(x) }
    }

    pub fn l1(self) -> f64 {
        self.re.hi.abs() + self.im.hi.abs()
    }
}

impl Add for DdComplex {
    type Output = DdComplex;
    #[inline]
    fn add(self, b: DdComplex) -> DdComplex {
        DdComplex { re: self.re + b.re, im: self.im + b.im }
    }
}

impl Sub for DdComplex {
    type Output = DdComplex;
    #[inline]
    fn sub(self, b: DdComplex) -> DdComplex {
        DdComplex { re: self.re - b.re, im: self.im - b.im }
    }
}

impl Mul for DdComplex {
    type Output = DdComplex;
    #[inline]
    fn mul(self, b: DdComplex) -> DdComplex {
        DdComplex { re: self.re * b.re - self.im * b.im, im: self.re * b.im + self.im * b.re }
    }
}

/// Double-double analogue of `ExtAccumulator`.
#[derive(Clone, Copy, Debug)]
pub struct DdAccumulator {
    m: DdComplex,
    e: i64,
}

impl Default for DdAccumulator {
    fn default() -> Self {
        DdAccumulator { m: DdComplex::default(), e: i64::MIN / 4 }
    }
}

impl DdAccumulator {
    #[inline]
    pub fn add(&mut self, mant: DdComplex, exp: i64) {
        if mant.re.hi == 0.0 && mant.im.hi == 0.0 {
            return;
        }
        let d = exp - self.e;
        if d > 0 {
            self.m = if d > 1000 { mant } else { self.m.scale_pow2(pow2(-d)) + mant };
            self.e = exp;
        } else if d >= -1000 {
            self.m = self.m + mant.scale_pow2(pow2(d));
        }
    }

    pub fn value(&self) -> ExtComplex {
        let z = self.m.to_complex();
        ExtComplex::from_parts(z, if z == Complex64::new(0.0, 0.0) { 0 } else { self.e })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn mul_examples() {
        assert_eq!(ExtComplex::ONE * ExtComplex::ONE, ExtComplex::ONE);
        let a = ExtComplex::from_parts(c(1.5, 0.0), 1000);
        let p = a * a;
        assert_eq!(p.mantissa(), c(1.125, 0.0));
        assert_eq!(p.exponent(), 2001);
        assert!((a * ExtComplex::ZERO).is_zero());
    }

    #[test]
    fn add_examples() {
        let a = ExtComplex::new(0.3, -2.0);
        assert_eq!(a + ExtComplex::ZERO, a);
        let two = ExtComplex::ONE + ExtComplex::ONE;
        assert_eq!(two.mantissa(), c(1.0, 0.0));
        assert_eq!(two.exponent(), 1);
        let big = ExtComplex::from_parts(c(1.0, 0.0), 2000);
        assert_eq!(big + ExtComplex::ONE, big);
    }

    #[test]
    fn log_abs_examples() {
        assert_eq!(ExtComplex::ONE.log_abs().unwrap(), 0.0);
        let v = ExtComplex::from_parts(c(1.0, 0.0), 10).log_abs().unwrap();
        assert!((v - 6.931471805599453).abs() < 1e-14);
        let v = ExtComplex::new(1.5, 0.0).log_abs().unwrap();
        assert!((v - 0.4054651081081644).abs() < 1e-15);
        assert_eq!(ExtComplex::ZERO.log_abs(), Err(NumericsError::LogOfZero));
    }

    #[test]
    fn round_trip_exact() {
        for &z in &[c(3.0, -4.0), c(1e-300, 2e-301), c(1e300, -1e299), c(0.1, 0.7)] {
            assert_eq!(ExtComplex::from_complex(z).to_complex(), z);
        }
    }

    #[test]
    fn polar_ln_matches() {
        let v = ExtComplex::from_polar_ln(1000.0, 0.3);
        assert!((v.log_abs().unwrap() - 1000.0).abs() < 1e-12);
        assert!((v.arg() - 0.3).abs() < 1e-14);
    }

    #[test]
    fn accumulator_sums() {
        let mut acc = ExtAccumulator::default();
        acc.add(c(1.0, 0.0), 3000);
        acc.add(c(1.0, 0.0), 3000);
        acc.add(c(1.0, 0.0), 0);
        let v = acc.value();
        assert_eq!(v.exponent(), 3001);
        assert_eq!(v.mantissa(), c(1.0, 0.0));
        let mut acc = ExtAccumulator::default();
        acc.add(c(1.0, 0.0), -5);
        acc.add(c(3.0, 0.0), -4);
        assert_eq!(acc.value().to_complex(), c(1.0 / 32.0 + 3.0 / 16.0, 0.0));
    }

    #[test]
    fn dd_recovers_lost_bits() {
        let a = Dd::from_f64(1.0);
        let b = Dd::from_f64(1e-20);
        let s = (a + b) - a;
        assert_eq!(s.to_f64(), 1e-20);
        let third = Dd::from_f64(1.0 / 3.0);
        let p = third.mul_f64(3.0) - Dd::from_f64(1.0);
        assert!(p.to_f64().abs() < 1e-16 && p.to_f64() != 0.0);
    }

    fn finite() -> impl Strategy<Value = f64> {
        prop_oneof![-1e6..1e6f64, -1.0..1.0f64]
    }

    proptest! {
        #[test]
        fn ops_agree_with_plain(ar in finite(), ai in finite(), br in finite(), bi in finite()) {
            let a = c(ar, ai);
            let b = c(br, bi);
            let eps = f64::EPSILON;
            let p = (ExtComplex::from(a) * ExtComplex::from(b)).to_complex();
            let pe = a * b;
            prop_assert!((p - pe).norm() <= 4.0 * eps * a.norm() * b.norm() + 1e-300);
            let s = (ExtComplex::from(a) + ExtComplex::from(b)).to_complex();
            let se = a + b;
            prop_assert!((s - se).norm() <= 4.0 * eps * (a.norm() + b.norm()) + 1e-300);
        }

        #[test]
        fn normalized_after_ops(ar in finite(), ai in finite(), br in finite(), bi in finite(), e in -5000i64..5000) {
            let a = ExtComplex::from_parts(c(ar, ai), e);
            let b = ExtComplex::from_parts(c(br, bi), -e / 3);
            for v in [a, b, a * b, a + b, a - b] {
                let m = v.mantissa().norm();
                prop_assert!(v.is_zero() || (1.0..2.0).contains(&m), "modulus {}", m);
            }
        }
    }
}
