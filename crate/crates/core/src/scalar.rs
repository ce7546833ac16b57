//! Scalar types: exact rationals for algebra, binary floats for analysis.
//!
//! Conversion only goes one way, from [`Rational`] to `f64`.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::graded_algebra::BracketPair;
use crate::error::ParseError;

/// Arbitrary precision rational number.
pub type Rational = BigRational;

/// Common arithmetic interface of the two scalar modes.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// Whether arithmetic in this type is exact.
    const EXACT: bool;

    fn from_rational(q: &Rational) -> Self;

    fn from_i64(v: i64) -> Self;

    fn to_f64(&self) -> f64;

    /// Zero test; exact for rationals, literal comparison for floats.
    fn is_zero_value(&self) -> bool {
        self.is_zero()
    }

    /// Picks the structure table matching the scalar type.
    fn pick_table<'a>(
        exact: &'a [BracketPair<Rational>],
        float: &'a [BracketPair<f64>],
    ) -> &'a [BracketPair<Self>];
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_rational(q: &Rational) -> Self {
        q.clone()
    }

    fn from_i64(v: i64) -> Self {
        Rational::from_integer(BigInt::from(v))
    }

    fn to_f64(&self) -> f64 {
        rational_to_f64(self)
    }

    fn pick_table<'a>(
        exact: &'a [BracketPair<Rational>],
        _float: &'a [BracketPair<f64>],
    ) -> &'a [BracketPair<Self>] {
        exact
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_rational(q: &Rational) -> Self {
        rational_to_f64(q)
    }

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn pick_table<'a>(
        _exact: &'a [BracketPair<Rational>],
        float: &'a [BracketPair<f64>],
    ) -> &'a [BracketPair<Self>] {
        float
    }
}

/// Builds `num/den` as a rational. Panics if `den == 0`.
pub fn q(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Integer as a rational.
pub fn qi(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// Nearest float to a rational, correct also for huge numerators and denominators.
pub fn rational_to_f64(x: &Rational) -> f64 {
    if let (Some(n), Some(d)) = (x.numer().to_f64(), x.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    // Scale both parts down to a representable range.
    let nb = x.numer().bits() as i64;
    let db = x.denom().bits() as i64;
    let shift = (nb - db) - 60;
    let scaled = if shift >= 0 {
        x / Rational::from_integer(BigInt::one() << shift as usize)
    } else {
        x * Rational::from_integer(BigInt::one() << (-shift) as usize)
    };
    let base = scaled.numer().to_f64().unwrap_or(0.0) / scaled.denom().to_f64().unwrap_or(1.0);
    base * 2f64.powi(shift as i32)
}

/// Exact binary value of a finite float.
pub fn f64_to_rational(x: f64) -> Option<Rational> {
    Rational::from_float(x)
}

/// Parses `p`, `-p`, `p/q` or a finite decimal such as `0.25` into a rational.
pub fn parse_rational(s: &str) -> Result<Rational, ParseError> {
    let t = s.trim();
    if t.is_empty() {
        return Err(ParseError::Rational(s.to_string()));
    }
    if let Some((a, b)) = t.split_once('/') {
        let n: BigInt = a.trim().parse().map_err(|_| ParseError::Rational(s.to_string()))?;
        let d: BigInt = b.trim().parse().map_err(|_| ParseError::Rational(s.to_string()))?;
        if d.is_zero() {
            return Err(ParseError::Rational(s.to_string()));
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((ip, fp)) = t.split_once('.') {
        let neg = ip.trim_start().starts_with('-');
        let ip_digits = ip.trim_start_matches(['-', '+']);
        if !fp.chars().all(|c| c.is_ascii_digit())
            || !ip_digits.chars().all(|c| c.is_ascii_digit())
        {
            return Err(ParseError::Rational(s.to_string()));
        }
        let digits = format!("{}{}", if ip_digits.is_empty() { "0" } else { ip_digits }, fp);
        let n: BigInt = digits.parse().map_err(|_| ParseError::Rational(s.to_string()))?;
        let d = num_traits::pow(BigInt::from(10), fp.len());
        let v = Rational::new(n, d);
        return Ok(if neg { -v } else { v });
    }
    let n: BigInt = t.parse().map_err(|_| ParseError::Rational(s.to_string()))?;
    Ok(Rational::from_integer(n))
}

/// Parses a comma separated list of rationals.
pub fn parse_rational_vector(s: &str) -> Result<Vec<Rational>, ParseError> {
    s.split(',').map(parse_rational).collect()
}

/// Formats as `p` or `p/q`.
pub fn format_rational(x: &Rational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn format_rational_vector(v: &[Rational]) -> String {
    v.iter().map(format_rational).collect::<Vec<_>>().join(",")
}

/// Float with 17 significant digits, enough to round-trip.
pub fn format_f64(x: f64) -> String {
    format!("{:.16e}", x)
}

/// Converts a rational vector to floats.
pub fn to_f64_vec(v: &[Rational]) -> Vec<f64> {
    v.iter().map(rational_to_f64).collect()
}

/// Euclidean norm of a float vector.
pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Squared Euclidean norm, exact for rationals.
pub fn norm_sq<S: Scalar>(v: &[S]) -> S {
    v.iter().fold(S::zero(), |acc, x| acc + x.clone() * x.clone())
}

/// Absolute value of a rational.
pub fn qabs(x: &Rational) -> Rational {
    x.abs()
}
