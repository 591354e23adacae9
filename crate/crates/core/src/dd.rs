//! Double-double ("compensated") arithmetic for phases taken modulo one.
//!
//! Every quantity fed to `e(θ) = exp(2πiθ)` only matters modulo one, but the
//! raw products `n·α`, `α·n(n−1)/2` and `c·n^j` grow far past the point where a
//! single `f64` keeps any fractional bits. The helpers here carry the
//! rounding error of each product in a second word so the reduction to
//! `[0, 1)` stays accurate to a few ulps of one.

use num_complex::Complex64;
use std::f64::consts::TAU;
use std::ops::{Add, Neg};

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2` after normalization.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    #[inline]
    pub fn new(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn from_parts(hi: f64, lo: f64) -> Dd {
        let (s, e) = two_sum(hi, lo);
        Dd { hi: s, lo: e }
    }

    /// Exact product of two floats.
    #[inline]
    pub fn mul_exact(a: f64, b: f64) -> Dd {
        let (p, e) = two_prod(a, b);
        Dd { hi: p, lo: e }
    }

    /// Integer split into two floats; exact for `|m| < 2^106`.
    #[inline]
    pub fn from_i128(m: i128) -> Dd {
        let hi = m as f64;
        let rem = m - hi as i128;
        Dd::from_parts(hi, rem as f64)
    }

    #[inline]
    pub fn add_f64(self, x: f64) -> Dd {
        let (s, e) = two_sum(self.hi, x);
        Dd::from_parts(s, e + self.lo)
    }

    #[inline]
    pub fn mul_f64(self, x: f64) -> Dd {
        let (p, e) = two_prod(self.hi, x);
        Dd::from_parts(p, e + self.lo * x)
    }

    #[inline]
    pub fn floor(self) -> f64 {
        let f = self.hi.floor();
        if f == self.hi {
            // hi is an integer; lo decides whether we sit just below it.
            if self.lo < 0.0 {
                f - 1.0
            } else {
                f
            }
        } else {
            f
        }
    }

    /// Representative of `self mod 1` in `[0, 1)`, still in double-double form.
    #[inline]
    pub fn frac(self) -> Dd {
        let f = self.floor();
        let mut r = self.add_f64(-f);
        if r.hi < 0.0 {
            r = r.add_f64(1.0);
        } else if r.hi > 1.0 || (r.hi == 1.0 && r.lo >= 0.0) {
            r = r.add_f64(-1.0);
        }
        r
    }

    /// `self mod 1` rounded to a single float in `[0, 1)`.
    #[inline]
    pub fn frac_f64(self) -> f64 {
        let r = self.frac();
        let v = r.hi + r.lo;
        if v >= 1.0 {
            // rounding pushed the sum up to one
            ONE_MINUS_ULP
        } else if v < 0.0 {
            0.0
        } else {
            v
        }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

impl Add for Dd {
    type Output = Dd;

    #[inline]
    fn add(self, other: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, other.hi);
        let e = e + self.lo + other.lo;
        Dd::from_parts(s, e)
    }
}

impl Neg for Dd {
    type Output = Dd;

    #[inline]
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

/// Largest double strictly below one.
pub const ONE_MINUS_ULP: f64 = 1.0 - f64::EPSILON / 2.0;

/// `frac(c · m)` for an integer multiplier, keeping full precision of the
/// product. Exact in the product for `|m| < 2^106`.
#[inline]
pub fn frac_mul_int(c: f64, m: i128) -> Dd {
    let md = Dd::from_i128(m);
    let a = Dd::mul_exact(c, md.hi).frac();
    let b = Dd::mul_exact(c, md.lo).frac();
    a.add(b).frac()
}

/// `frac(d · m)` for a double-double factor and integer multiplier.
#[inline]
pub fn frac_mul_dd_int(d: Dd, m: i128) -> Dd {
    frac_mul_int(d.hi, m).add(frac_mul_int(d.lo, m)).frac()
}

/// `e(θ) = exp(2πiθ)`.
///
/// The argument is reduced to the nearest quarter turn first, so multiples of
/// `1/4` map to exactly `1, i, −1, −i`.
#[inline]
pub fn expi(theta: f64) -> Complex64 {
    let t = theta - theta.floor();
    let quarter = (t * 4.0).round();
    let r = t - quarter * 0.25;
    let (s, c) = (TAU * r).sin_cos();
    match (quarter as i64).rem_euclid(4) {
        0 => Complex64::new(c, s),
        1 => Complex64::new(-s, c),
        2 => Complex64::new(-c, -s),
        _ => Complex64::new(s, -c),
    }
}

#[inline]
pub fn expi_dd(theta: Dd) -> Complex64 {
    expi(theta.frac_f64())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expi_exact_on_quarters() {
        assert_eq!(expi(0.0), Complex64::new(1.0, 0.0));
        assert_eq!(expi(0.25), Complex64::new(0.0, 1.0));
        assert_eq!(expi(0.5), Complex64::new(-1.0, 0.0));
        assert_eq!(expi(0.75), Complex64::new(0.0, -1.0));
        assert_eq!(expi(-0.5), Complex64::new(-1.0, 0.0));
        assert_eq!(expi(3.0), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn expi_matches_libm() {
        for i in 0..1000 {
            let t = i as f64 * 0.001_234_567 - 0.4;
            let want = Complex64::from_polar(1.0, TAU * t);
            assert!((expi(t) - want).norm() < 1e-14, "t = {t}");
        }
    }

    #[test]
    fn frac_mul_int_large_multiplier() {
        // 0.1 as a double is 3602879701896397 / 2^55; times 2^40 the fractional
        // part is exactly (3602879701896397 mod 2^15) / 2^15.
        let c = 0.1_f64;
        let m: i128 = 1 << 40;
        let want = (3602879701896397_i64 % (1 << 15)) as f64 / (1 << 15) as f64;
        assert_eq!(frac_mul_int(c, m).frac_f64(), want);
    }

    #[test]
    fn frac_mul_int_negative() {
        let c = 0.375;
        assert_eq!(frac_mul_int(c, -3).frac_f64(), 0.875);
        assert_eq!(frac_mul_int(c, 0).frac_f64(), 0.0);
    }

    #[test]
    fn frac_is_in_unit_interval() {
        let vals = [
            Dd::from_parts(1.0, -1e-30),
            Dd::from_parts(-1.0, 1e-30),
            Dd::from_parts(5.0, 0.0),
            Dd::from_parts(-1e-300, 0.0),
            Dd::from_parts(123456.75, 1e-12),
        ];
        for v in vals {
            let f = v.frac_f64();
            assert!((0.0..1.0).contains(&f), "{v:?} -> {f}");
        }
    }

    #[test]
    fn floor_respects_low_word() {
        assert_eq!(Dd::from_parts(2.0, -1e-20).floor(), 1.0);
        assert_eq!(Dd::from_parts(2.0, 1e-20).floor(), 2.0);
        assert_eq!(Dd::new(-0.5).floor(), -1.0);
    }
}
