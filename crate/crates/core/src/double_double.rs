//! Unevaluated sum of two `f64`s, about 106 bits of significand.
//!
//! Only what the coding path needs: field operations, floor, square root and
//! sine/cosine measured in turns. Trigonometry reduces exactly to the nearest
//! quarter turn and then sums the Taylor series, which keeps the result near
//! full double-double accuracy (about `1e-32`) on the whole circle.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Rem, Sub};

use num_traits::{Num, One, Zero};

use crate::real::{rotate_quarters, Real};

/// 2π split into a leading double and its rounding error.
const TAU_HI: f64 = 6.283185307179586;
const TAU_LO: f64 = 2.4492935982947064e-16;

#[derive(Clone, Copy, Default, PartialEq)]
pub struct DoubleDouble {
    hi: f64,
    lo: f64,
}

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

impl DoubleDouble {
    pub const fn from_parts(hi: f64, lo: f64) -> Self {
        DoubleDouble { hi, lo }
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn lo(self) -> f64 {
        self.lo
    }

    fn renormalized(hi: f64, lo: f64) -> Self {
        let (hi, lo) = quick_two_sum(hi, lo);
        DoubleDouble { hi, lo }
    }

    fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        Self::renormalized(p, e + self.lo * b)
    }

    fn div_f64(self, b: f64) -> Self {
        let q1 = self.hi / b;
        let r = self - DoubleDouble::from(b).mul_f64(q1);
        let q2 = r.hi / b;
        let r = r - DoubleDouble::from(b).mul_f64(q2);
        let q3 = r.hi / b;
        let (q1, q2) = quick_two_sum(q1, q2);
        DoubleDouble { hi: q1, lo: q2 } + DoubleDouble::from(q3)
    }

    fn tau() -> Self {
        DoubleDouble { hi: TAU_HI, lo: TAU_LO }
    }

    /// Sine and cosine of `a` for `|a| <= π/4`.
    fn sin_cos_small(a: Self) -> (Self, Self) {
        let a2 = a * a;
        let tiny = 1e-36;

        let mut sin = a;
        let mut term = a;
        let mut k = 1.0;
        while term.hi.abs() > tiny && k < 40.0 {
            term = -(term * a2).div_f64((2.0 * k) * (2.0 * k + 1.0));
            sin = sin + term;
            k += 1.0;
        }

        let mut cos = DoubleDouble::one();
        let mut term = DoubleDouble::one();
        let mut k = 1.0;
        while term.hi.abs() > tiny && k < 40.0 {
            term = -(term * a2).div_f64((2.0 * k - 1.0) * (2.0 * k));
            cos = cos + term;
            k += 1.0;
        }
        (sin, cos)
    }
}

impl From<f64> for DoubleDouble {
    fn from(x: f64) -> Self {
        DoubleDouble { hi: x, lo: 0.0 }
    }
}

impl fmt::Debug for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DoubleDouble({:e} + {:e})", self.hi, self.lo)
    }
}

impl fmt::Display for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.hi + self.lo)
    }
}

impl PartialOrd for DoubleDouble {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi)? {
            Ordering::Equal => self.lo.partial_cmp(&other.lo),
            ord => Some(ord),
        }
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    fn neg(self) -> Self {
        DoubleDouble { hi: -self.hi, lo: -self.lo }
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    fn add(self, b: Self) -> Self {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        Self::renormalized(s, e + f)
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    fn sub(self, b: Self) -> Self {
        self + (-b)
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    fn mul(self, b: Self) -> Self {
        let (p, e) = two_prod(self.hi, b.hi);
        Self::renormalized(p, e + (self.hi * b.lo + self.lo * b.hi))
    }
}

impl Div for DoubleDouble {
    type Output = Self;
    fn div(self, b: Self) -> Self {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (q1, q2) = quick_two_sum(q1, q2);
        DoubleDouble { hi: q1, lo: q2 } + DoubleDouble::from(q3)
    }
}

impl Rem for DoubleDouble {
    type Output = Self;
    fn rem(self, b: Self) -> Self {
        let q = self / b;
        let n = if q < Self::zero() { -(-q).floor() } else { q.floor() };
        self - n * b
    }
}

impl Zero for DoubleDouble {
    fn zero() -> Self {
        DoubleDouble { hi: 0.0, lo: 0.0 }
    }
    fn is_zero(&self) -> bool {
        self.hi == 0.0 && self.lo == 0.0
    }
}

impl One for DoubleDouble {
    fn one() -> Self {
        DoubleDouble { hi: 1.0, lo: 0.0 }
    }
}

impl Num for DoubleDouble {
    type FromStrRadixErr = std::num::ParseFloatError;

    /// Parses through `f64`; the low word is always zero.
    fn from_str_radix(s: &str, _radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        s.parse::<f64>().map(DoubleDouble::from)
    }
}

impl Real for DoubleDouble {
    const RESOLUTION: f64 = 1.0 / (1u128 << 107) as f64;

    fn from_f64(x: f64) -> Self {
        DoubleDouble::from(x)
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    fn floor(self) -> Self {
        let fh = self.hi.floor();
        if fh == self.hi {
            Self::renormalized(fh, self.lo.floor())
        } else {
            DoubleDouble { hi: fh, lo: 0.0 }
        }
    }

    fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return Self::zero();
        }
        let y = DoubleDouble::from(self.hi.sqrt());
        y + (self - y * y) / (y + y)
    }

    fn sin_cos_turns(self) -> (Self, Self) {
        let r = self - (self + Self::half()).floor();
        let quarter = (4.0 * r.to_f64()).round();
        let f = r - DoubleDouble::from(0.25 * quarter);
        let (s, c) = Self::sin_cos_small(f * Self::tau());
        rotate_quarters(s, c, quarter as i64)
    }
}
