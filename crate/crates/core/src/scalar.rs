//! Scalar abstractions.
//!
//! Signal-processing code is generic over [`Real`] (implemented for `f32` and
//! `f64`). Rate arithmetic in the tradeoff calculators is generic over
//! [`RateScalar`], which also has an exact rational implementation so that
//! floor discontinuities can be located without rounding error.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_rational::Ratio;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar used by every numeric routine in the crate.
pub trait Real: Float + FloatConst + FromPrimitive + ToPrimitive + NumAssign + Sum + Default + Debug + Display + Send + Sync + 'static {
    /// Converts an `f64` constant into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Converts a count into `Self`.
    #[inline]
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Tolerance used for Hermitian symmetry checks.
    fn symmetry_tol() -> Self;
}

impl Real for f32 {
    fn symmetry_tol() -> Self {
        1e-4
    }
}

impl Real for f64 {
    fn symmetry_tol() -> Self {
        1e-10
    }
}

/// Exact first-round rate in bits per channel use.
pub type Rate = Ratio<i64>;

/// Numbers that rates can be expressed in: `f64` or an exact [`Rate`].
pub trait RateScalar: Copy + PartialOrd + Debug + Display {
    fn from_int(n: i64) -> Self;
    fn add(self, rhs: Self) -> Self;
    fn sub(self, rhs: Self) -> Self;
    fn mul(self, rhs: Self) -> Self;
    fn div(self, rhs: Self) -> Self;
    fn floor_int(self) -> i64;
    fn is_integral(self) -> bool;
    fn to_f64(self) -> f64;
}

impl RateScalar for f64 {
    fn from_int(n: i64) -> Self {
        n as f64
    }
    fn add(self, rhs: Self) -> Self {
        self + rhs
    }
    fn sub(self, rhs: Self) -> Self {
        self - rhs
    }
    fn mul(self, rhs: Self) -> Self {
        self * rhs
    }
    fn div(self, rhs: Self) -> Self {
        self / rhs
    }
    fn floor_int(self) -> i64 {
        self.floor() as i64
    }
    fn is_integral(self) -> bool {
        self.fract() == 0.0
    }
    fn to_f64(self) -> f64 {
        self
    }
}

impl RateScalar for Rate {
    fn from_int(n: i64) -> Self {
        Ratio::from_integer(n)
    }
    fn add(self, rhs: Self) -> Self {
        self + rhs
    }
    fn sub(self, rhs: Self) -> Self {
        self - rhs
    }
    fn mul(self, rhs: Self) -> Self {
        self * rhs
    }
    fn div(self, rhs: Self) -> Self {
        self / rhs
    }
    fn floor_int(self) -> i64 {
        self.floor().to_integer()
    }
    fn is_integral(self) -> bool {
        self.is_integer()
    }
    fn to_f64(self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
}

/// `10^(db/10)`.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Parses a rate written either as a fraction (`3/8`) or a finite decimal
/// (`0.375`) into an exact [`Rate`].
pub fn parse_rate(s: &str) -> Option<Rate> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n.trim().parse().ok()?;
        let d: i64 = d.trim().parse().ok()?;
        if d == 0 {
            return None;
        }
        return Some(Ratio::new(n, d));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    if frac_part.len() > 15 {
        return None;
    }
    let scale = 10i64.checked_pow(frac_part.len() as u32)?;
    let int_val: i64 = if int_part.is_empty() { 0 } else { int_part.parse().ok()? };
    let frac_val: i64 = if frac_part.is_empty() { 0 } else { frac_part.parse().ok()? };
    let numer = int_val.checked_mul(scale)?.checked_add(frac_val)?;
    Some(Ratio::new(if neg { -numer } else { numer }, scale))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals_exactly() {
        assert_eq!(parse_rate("3/8"), Some(Ratio::new(3, 8)));
        assert_eq!(parse_rate("0.375"), Some(Ratio::new(3, 8)));
        assert_eq!(parse_rate("2"), Some(Ratio::from_integer(2)));
        assert_eq!(parse_rate(".5"), Some(Ratio::new(1, 2)));
        assert_eq!(parse_rate("1/0"), None);
        assert_eq!(parse_rate("abc"), None);
    }

    #[test]
    fn rational_floor_is_exact() {
        let x = Rate::new(98, 100).mul(Rate::from_int(100));
        assert!(x.is_integral());
        assert_eq!(x.floor_int(), 98);
        assert_eq!(Rate::new(-1, 3).floor_int(), -1);
    }
}
