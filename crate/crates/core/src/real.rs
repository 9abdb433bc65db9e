//! Scalar abstraction shared by the `f64` fast path and the extended
//! precision path used for deep symbolic coding.
//!
//! Nested fiber disks shrink like `λ^n`; at depth 30 with `λ = 0.2` they are
//! about `1e-21` across, below what an `f64` fiber coordinate near `0.6` can
//! resolve. Everything that walks preimage chains is generic over [`Real`] so
//! it can run on [`DoubleDouble`](crate::DoubleDouble) when needed.

use std::fmt::Debug;
use std::ops::Neg;

use num_complex::Complex;
use num_traits::Num;

pub trait Real: Copy + Debug + PartialOrd + Send + Sync + 'static + Num + Neg<Output = Self> {
    /// Absolute resolution of numbers in `[0, 1]`; bisection stops below it.
    const RESOLUTION: f64;

    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn floor(self) -> Self;
    fn sqrt(self) -> Self;

    /// `(sin 2πx, cos 2πx)`, exact at multiples of a quarter turn.
    fn sin_cos_turns(self) -> (Self, Self);

    fn abs(self) -> Self {
        if self < Self::zero() {
            -self
        } else {
            self
        }
    }

    fn half() -> Self {
        Self::from_f64(0.5)
    }
}

impl Real for f64 {
    const RESOLUTION: f64 = 1.0 / (1u64 << 54) as f64;

    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn floor(self) -> Self {
        f64::floor(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }

    fn sin_cos_turns(self) -> (f64, f64) {
        let r = self - (self + 0.5).floor();
        let quarter = (4.0 * r).round();
        let f = r - 0.25 * quarter;
        let (s, c) = (std::f64::consts::TAU * f).sin_cos();
        rotate_quarters(s, c, quarter as i64)
    }
}

/// Rotates `(sin a, cos a)` by `k` quarter turns.
pub(crate) fn rotate_quarters<R: Real>(s: R, c: R, k: i64) -> (R, R) {
    match k.rem_euclid(4) {
        0 => (s, c),
        1 => (c, -s),
        2 => (-s, -c),
        _ => (-c, s),
    }
}

/// Fractional part in `[0, 1)`.
pub fn frac<R: Real>(x: R) -> R {
    let f = x - x.floor();
    if f >= R::one() || f < R::zero() {
        R::zero()
    } else {
        f
    }
}

/// `e^{2πit}`.
pub fn unit_phase<R: Real>(t: R) -> Complex<R> {
    let (s, c) = t.sin_cos_turns();
    Complex::new(c, s)
}

/// `½e^{2πit}`, the center of the fiber-image disk of the fiber over `t`.
pub fn half_phase<R: Real>(t: R) -> Complex<R> {
    unit_phase(t).scale(R::half())
}

pub fn modulus<R: Real>(z: Complex<R>) -> R {
    z.norm_sqr().sqrt()
}

pub fn complex_to_f64<R: Real>(z: Complex<R>) -> num_complex::Complex64 {
    num_complex::Complex64::new(z.re.to_f64(), z.im.to_f64())
}

pub fn complex_from_f64<R: Real>(z: num_complex::Complex64) -> Complex<R> {
    Complex::new(R::from_f64(z.re), R::from_f64(z.im))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_turns_are_exact() {
        assert_eq!(0.0f64.sin_cos_turns(), (0.0, 1.0));
        assert_eq!(0.25f64.sin_cos_turns(), (1.0, 0.0));
        assert_eq!(0.5f64.sin_cos_turns(), (0.0, -1.0));
        assert_eq!(0.75f64.sin_cos_turns(), (-1.0, 0.0));
        assert_eq!((-0.25f64).sin_cos_turns(), (-1.0, 0.0));
    }

    #[test]
    fn sin_cos_matches_std() {
        for i in 0..1000 {
            let t = i as f64 / 997.0 - 0.3;
            let (s, c) = t.sin_cos_turns();
            let (s0, c0) = (std::f64::consts::TAU * t).sin_cos();
            assert!((s - s0).abs() < 1e-14 && (c - c0).abs() < 1e-14, "t={t}");
        }
    }

    #[test]
    fn frac_stays_in_unit_interval() {
        assert_eq!(frac(-1e-20f64), 0.0);
        assert_eq!(frac(2.75f64), 0.75);
        assert_eq!(frac(-0.25f64), 0.75);
    }
}
