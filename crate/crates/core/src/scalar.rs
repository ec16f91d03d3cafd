//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! Floating types (`f32`, `f64`) run the production paths; the rational
//! types let the same factorizations and closed forms run in exact
//! arithmetic on small instances, which is how several formulas are pinned
//! in the test suite.

use std::fmt::{Debug, Display};
use std::ops::Neg;

use num_rational::Ratio;
use num_traits::{Num, ToPrimitive};

/// Field element usable by the graph, linear-algebra and closed-form code.
pub trait Scalar:
    Num + Neg<Output = Self> + Copy + PartialOrd + Debug + Display + Send + Sync + 'static
{
    /// True for exact (rational) arithmetic.
    const EXACT: bool;

    fn from_i64(v: i64) -> Self;

    /// Lossy conversion for floats; best rational approximation otherwise.
    fn from_f64(v: f64) -> Option<Self>;

    fn to_f64(self) -> f64;

    /// Parses a decimal literal (`"2"`, `"0.25"`, `"1e-3"`); rational types
    /// also accept `"p/q"`.
    fn parse_literal(s: &str) -> Option<Self>;

    /// Smallest admissible pivot relative to `scale` in an SPD factorization.
    fn pivot_floor(scale: Self) -> Self;

    /// Width of the window within which two objective values count as tied.
    fn tie_window(value: Self) -> Self;

    fn abs(self) -> Self {
        if self < Self::zero() {
            -self
        } else {
            self
        }
    }

    fn from_usize(v: usize) -> Self {
        Self::from_i64(v as i64)
    }

    /// `self^e` for any integer exponent; `self` must be non-zero when `e < 0`.
    fn powi(self, e: i32) -> Self {
        let mut acc = Self::one();
        for _ in 0..e.unsigned_abs() {
            acc = acc * self;
        }
        if e < 0 {
            Self::one() / acc
        } else {
            acc
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

macro_rules! float_scalar {
    ($t:ty, $eps:expr) => {
        impl Scalar for $t {
            const EXACT: bool = false;

            fn from_i64(v: i64) -> Self {
                v as $t
            }

            fn from_f64(v: f64) -> Option<Self> {
                v.is_finite().then_some(v as $t)
            }

            fn to_f64(self) -> f64 {
                self as f64
            }

            fn parse_literal(s: &str) -> Option<Self> {
                s.trim().parse::<$t>().ok().filter(|v| v.is_finite())
            }

            fn pivot_floor(scale: Self) -> Self {
                scale.abs() * $eps
            }

            fn tie_window(value: Self) -> Self {
                value.abs().max(1.0) * 1e3 * <$t>::EPSILON
            }
        }
    };
}

float_scalar!(f64, 1e-13);
float_scalar!(f32, 1e-6);

macro_rules! ratio_scalar {
    ($int:ty) => {
        impl Scalar for Ratio<$int> {
            const EXACT: bool = true;

            fn from_i64(v: i64) -> Self {
                Ratio::from_integer(v as $int)
            }

            fn from_f64(v: f64) -> Option<Self> {
                Ratio::<$int>::approximate_float(v)
            }

            fn to_f64(self) -> f64 {
                ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
            }

            fn parse_literal(s: &str) -> Option<Self> {
                parse_rational(s.trim())
            }

            fn pivot_floor(_scale: Self) -> Self {
                Self::from_i64(0)
            }

            fn tie_window(_value: Self) -> Self {
                Self::from_i64(0)
            }
        }
    };
}

ratio_scalar!(i64);
ratio_scalar!(i128);

/// Parses `p/q`, an integer, or a plain decimal with optional exponent
/// exactly into a ratio.
fn parse_rational<I>(s: &str) -> Option<Ratio<I>>
where
    I: num_traits::PrimInt + num_traits::Signed + num_integer::Integer + std::str::FromStr,
{
    if let Some((p, q)) = s.split_once('/') {
        let p: I = p.trim().parse().ok()?;
        let q: I = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(Ratio::new(p, q));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part
        .chars()
        .chain(frac_part.chars())
        .all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let ten = I::from(10)?;
    let mut numer = I::zero();
    for c in int_part.chars().chain(frac_part.chars()) {
        numer = numer
            .checked_mul(&ten)?
            .checked_add(&I::from(c.to_digit(10)?)?)?;
    }
    let scale = exp - frac_part.len() as i32;
    let mut denom = I::one();
    for _ in 0..scale.unsigned_abs() {
        if scale > 0 {
            numer = numer.checked_mul(&ten)?;
        } else {
            denom = denom.checked_mul(&ten)?;
        }
    }
    if neg {
        numer = -numer;
    }
    Some(Ratio::new(numer, denom))
}
