//! Arithmetic backends.
//!
//! Every algorithm in the crate is generic over [`Scalar`]. Two backends are
//! provided: [`Rational`] (exact, arbitrary precision, canonical) and `f64`
//! (fast, tolerance-based). Zero tests and sign tests always go through
//! [`Scalar::is_zero_tol`] / [`Scalar::is_pos_tol`] so that the same code
//! path is exact for rationals and tolerant for floats.

use std::fmt::{Debug, Display};
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::ParseNumberError;

/// Exact rational number used by the canonical arithmetic mode.
pub type Rational = BigRational;

/// Arithmetic mode selected on the command line and in reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Rational,
    Float,
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "rational" => Ok(Mode::Rational),
            "float" => Ok(Mode::Float),
            other => Err(format!("unknown mode `{other}` (expected rational|float)")),
        }
    }
}

/// Syntactic class of a numeric literal in a model file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LiteralKind {
    /// `3`, `-2`: valid in either family.
    Integer,
    /// `1/2`, `-1/18`.
    Fraction,
    /// `0.25`, `1e-3`.
    Decimal,
}

pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialEq
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    const MODE: Mode;

    fn from_rational(r: &Rational) -> Self;
    fn to_rational(&self) -> Rational;
    fn to_f64(&self) -> f64;

    /// Parses a model-file literal (`"1/2"`, `"0.25"`, `"-3"`).
    fn parse_literal(s: &str) -> Result<Self, ParseNumberError>;

    /// Rendering used in reports and model files. Round-trips through
    /// [`Scalar::parse_literal`].
    fn render(&self) -> String;

    /// Zero test: exact for rationals, `|x| <= tol` for floats.
    fn is_zero_tol(&self, tol: f64) -> bool;

    /// Strict positivity: exact for rationals, `x > tol` for floats.
    fn is_pos_tol(&self, tol: f64) -> bool;

    fn from_i64(v: i64) -> Self {
        Self::from_rational(&Rational::from_integer(BigInt::from(v)))
    }

    fn ratio(num: i64, den: i64) -> Self {
        Self::from_rational(&Rational::new(BigInt::from(num), BigInt::from(den)))
    }

    fn is_neg_tol(&self, tol: f64) -> bool {
        (-self.clone()).is_pos_tol(tol)
    }

    fn abs_val(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// Positive part `max(x, 0)`.
    /// `self - f * p`, overridable to avoid temporaries.
    fn sub_mul(&mut self, f: &Self, p: &Self) {
        *self = self.clone() - f.clone() * p.clone();
    }

    fn pos_part(&self) -> Self {
        if *self > Self::zero() {
            self.clone()
        } else {
            Self::zero()
        }
    }

    /// Negative part `max(-x, 0)`.
    fn neg_part(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            Self::zero()
        }
    }
}

pub fn classify_literal(s: &str) -> Result<LiteralKind, ParseNumberError> {
    let t = s.trim();
    if t.is_empty() {
        return Err(ParseNumberError::new(s, "empty literal"));
    }
    if t.contains('/') {
        Ok(LiteralKind::Fraction)
    } else if t.contains(['.', 'e', 'E']) {
        Ok(LiteralKind::Decimal)
    } else {
        Ok(LiteralKind::Integer)
    }
}

fn parse_bigint(s: &str, whole: &str) -> Result<BigInt, ParseNumberError> {
    let t = s.trim();
    let t = t.strip_prefix('+').unwrap_or(t);
    BigInt::from_str(t).map_err(|_| ParseNumberError::new(whole, "not an integer"))
}

/// Parses a literal exactly. Decimal literals (including exponents) are
/// converted to the rational they denote, not to the nearest double.
pub fn parse_rational(s: &str) -> Result<Rational, ParseNumberError> {
    let t = s.trim();
    match classify_literal(t)? {
        LiteralKind::Integer => Ok(Rational::from_integer(parse_bigint(t, s)?)),
        LiteralKind::Fraction => {
            let (n, d) = t.split_once('/').expect("fraction has a slash");
            let num = parse_bigint(n, s)?;
            let den = parse_bigint(d, s)?;
            if den.is_zero() {
                return Err(ParseNumberError::new(s, "zero denominator"));
            }
            Ok(Rational::new(num, den))
        }
        LiteralKind::Decimal => {
            let (mantissa, exp) = match t.find(['e', 'E']) {
                Some(i) => {
                    let e: i64 = t[i + 1..]
                        .trim_start_matches('+')
                        .parse()
                        .map_err(|_| ParseNumberError::new(s, "bad exponent"))?;
                    (&t[..i], e)
                }
                None => (t, 0),
            };
            let (neg, body) = match mantissa.strip_prefix('-') {
                Some(rest) => (true, rest),
                None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
            };
            let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
            if int_part.is_empty() && frac_part.is_empty() {
                return Err(ParseNumberError::new(s, "no digits"));
            }
            if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
                return Err(ParseNumberError::new(s, "invalid digit"));
            }
            let digits = format!("{int_part}{frac_part}");
            let mut num = BigInt::from_str(&digits).map_err(|_| ParseNumberError::new(s, "no digits"))?;
            if neg {
                num = -num;
            }
            let scale = exp - frac_part.len() as i64;
            let ten = BigInt::from(10);
            let r = if scale >= 0 {
                Rational::from_integer(num * num_traits::pow(ten, scale as usize))
            } else {
                Rational::new(num, num_traits::pow(ten, (-scale) as usize))
            };
            Ok(r)
        }
    }
}

impl Scalar for Rational {
    const MODE: Mode = Mode::Rational;

    fn sub_mul(&mut self, f: &Self, p: &Self) {
        *self -= f * p;
    }

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
    fn to_rational(&self) -> Rational {
        self.clone()
    }
    fn to_f64(&self) -> f64 {
        // Ratio<BigInt>::to_f64 is correctly rounded for huge numerators and
        // denominators, unlike dividing two separately converted parts.
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn parse_literal(s: &str) -> Result<Self, ParseNumberError> {
        parse_rational(s)
    }
    fn render(&self) -> String {
        if self.is_integer() {
            self.numer().to_string()
        } else {
            format!("{}/{}", self.numer(), self.denom())
        }
    }
    fn is_zero_tol(&self, _tol: f64) -> bool {
        self.is_zero()
    }
    fn is_pos_tol(&self, _tol: f64) -> bool {
        self.is_positive()
    }
}

impl Scalar for f64 {
    const MODE: Mode = Mode::Float;

    fn sub_mul(&mut self, f: &Self, p: &Self) {
        *self -= f * p;
    }

    fn from_rational(r: &Rational) -> Self {
        Scalar::to_f64(r)
    }
    fn to_rational(&self) -> Rational {
        Rational::from_float(*self).unwrap_or_else(Rational::zero)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn parse_literal(s: &str) -> Result<Self, ParseNumberError> {
        let t = s.trim();
        match classify_literal(t)? {
            LiteralKind::Fraction => Ok(Scalar::to_f64(&parse_rational(t)?)),
            _ => t
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| ParseNumberError::new(s, "not a finite number")),
        }
    }
    fn render(&self) -> String {
        format!("{self:?}")
    }
    fn is_zero_tol(&self, tol: f64) -> bool {
        self.abs() <= tol
    }
    fn is_pos_tol(&self, tol: f64) -> bool {
        *self > tol
    }
}

/// Sum of an iterator of scalars.
pub fn sum<S: Scalar, I: IntoIterator<Item = S>>(it: I) -> S {
    it.into_iter().fold(S::zero(), |acc, x| acc + x)
}

/// Exact power of two `2^-k` as a scalar.
pub fn half_pow<S: Scalar>(k: u32) -> S {
    S::from_rational(&Rational::new(BigInt::one(), BigInt::one() << k))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn parses_fractions_and_decimals_exactly() {
        assert_eq!(parse_rational("1/2").unwrap(), q(1, 2));
        assert_eq!(parse_rational("-1/18").unwrap(), q(-1, 18));
        assert_eq!(parse_rational("0.1").unwrap(), q(1, 10));
        assert_eq!(parse_rational("-2.5e-1").unwrap(), q(-1, 4));
        assert_eq!(parse_rational("3E2").unwrap(), q(300, 1));
        assert_eq!(parse_rational(" 7 ").unwrap(), q(7, 1));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1.2.3").is_err());
    }

    #[test]
    fn float_parse_accepts_fractions() {
        assert_eq!(<f64 as Scalar>::parse_literal("1/4").unwrap(), 0.25);
        assert_eq!(<f64 as Scalar>::parse_literal("0.125").unwrap(), 0.125);
        assert!(<f64 as Scalar>::parse_literal("inf").is_err());
    }

    #[test]
    fn render_round_trips() {
        for r in [q(13, 40), q(-1, 18), q(5, 1), q(0, 1)] {
            assert_eq!(parse_rational(&r.render()).unwrap(), r);
        }
        for x in [0.1_f64, -1.0 / 3.0, 1e-300, 12345.0] {
            assert_eq!(<f64 as Scalar>::parse_literal(&x.render()).unwrap(), x);
        }
    }

    #[test]
    fn parts_split_sign() {
        let x = q(-3, 4);
        assert_eq!(x.pos_part(), q(0, 1));
        assert_eq!(x.neg_part(), q(3, 4));
        assert_eq!(half_pow::<Rational>(3), q(1, 8));
    }
}
