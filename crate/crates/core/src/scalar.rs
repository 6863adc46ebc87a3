//! Scalar backends: a configurable-precision decimal float and an exact
//! rational, behind one arithmetic trait.
//!
//! The float backend carries `precision` decimal digits through every
//! operation. The rational backend is exact and is used to certify the
//! identities that are rational in `q` and `theta^2` (no square roots).

use std::fmt::{self, Debug, Display};
use std::ops::{Add, Div, Mul, Neg, Sub};

use dashu_float::ops::Abs;
use dashu_float::DBig;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero as NumZero};

use crate::error::{QError, Result};

/// Arithmetic interface shared by the two backends.
///
/// Constructors take the working precision in decimal digits; the exact
/// backend ignores it.
pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialEq
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    const EXACT: bool;

    fn from_int(n: i64, precision: u32) -> Self;
    fn from_ratio(num: i64, den: i64, precision: u32) -> Self;
    fn from_f64(v: f64, precision: u32) -> Self;
    /// Parses either a fraction "a/b" or a decimal literal.
    fn parse(s: &str, precision: u32) -> Result<Self>;

    fn zero(precision: u32) -> Self;
    fn one(precision: u32) -> Self;
    /// 10^exp at the working precision (exact in the rational backend).
    fn pow10(exp: i64, precision: u32) -> Self;

    fn is_zero(&self) -> bool;
    fn abs(&self) -> Self;
    /// Integer power; negative exponents require a nonzero base.
    fn powi(&self, k: i64) -> Self;
    /// Square root; errors on negative radicands, and in the exact backend
    /// on radicands that are not perfect squares.
    fn sqrt(&self) -> Result<Self>;

    fn to_f64(&self) -> f64;
    /// Decimal string at full precision, or reduced "num/den".
    fn serialize(&self) -> String;
    /// Same value carried at a different working precision (extending is
    /// exact; shrinking rounds). Identity in the exact backend.
    fn with_precision(&self, precision: u32) -> Self;
}

// ---- float backend ----

/// Decimal floating-point number at a configured precision.
#[derive(Clone, PartialEq, PartialOrd)]
pub struct BigFloat(pub(crate) DBig);

impl BigFloat {
    pub fn inner(&self) -> &DBig {
        &self.0
    }
}

impl Debug for BigFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Display for BigFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Display::fmt(&self.0, f)
    }
}

macro_rules! float_ops {
    ($($trait:ident, $method:ident);*) => {$(
        impl $trait for BigFloat {
            type Output = BigFloat;
            fn $method(self, rhs: BigFloat) -> BigFloat {
                BigFloat($trait::$method(self.0, rhs.0))
            }
        }
    )*};
}
float_ops!(Add, add; Sub, sub; Mul, mul; Div, div);

impl Neg for BigFloat {
    type Output = BigFloat;
    fn neg(self) -> BigFloat {
        BigFloat(-self.0)
    }
}

impl Scalar for BigFloat {
    const EXACT: bool = false;

    fn from_int(n: i64, precision: u32) -> Self {
        BigFloat(DBig::from(n).with_precision(precision as usize).value())
    }

    fn from_ratio(num: i64, den: i64, precision: u32) -> Self {
        assert!(den != 0, "zero denominator");
        BigFloat(DBig::from(num).with_precision(precision as usize).value() / DBig::from(den))
    }

    fn from_f64(v: f64, precision: u32) -> Self {
        let s = format!("{:e}", v);
        let d: DBig = s.parse().expect("f64 formats as a valid decimal");
        BigFloat(d.with_precision(precision as usize).value())
    }

    fn parse(s: &str, precision: u32) -> Result<Self> {
        let s = s.trim();
        if let Some((num, den)) = s.split_once('/') {
            let n: DBig = num
                .trim()
                .parse()
                .map_err(|_| QError::Parse(format!("bad numerator in {s:?}")))?;
            let d: DBig = den
                .trim()
                .parse()
                .map_err(|_| QError::Parse(format!("bad denominator in {s:?}")))?;
            if d == DBig::ZERO {
                return Err(QError::Parse(format!("zero denominator in {s:?}")));
            }
            Ok(BigFloat(n.with_precision(precision as usize).value() / d))
        } else {
            let d: DBig = s
                .parse()
                .map_err(|_| QError::Parse(format!("bad decimal literal {s:?}")))?;
            Ok(BigFloat(d.with_precision(precision as usize).value()))
        }
    }

    fn zero(precision: u32) -> Self {
        BigFloat(DBig::ZERO.with_precision(precision as usize).value())
    }

    fn one(precision: u32) -> Self {
        BigFloat(DBig::ONE.with_precision(precision as usize).value())
    }

    fn pow10(exp: i64, precision: u32) -> Self {
        BigFloat(
            DBig::from(10)
                .with_precision(precision as usize)
                .value()
                .powi(exp.into()),
        )
    }

    fn is_zero(&self) -> bool {
        self.0 == DBig::ZERO
    }

    fn abs(&self) -> Self {
        BigFloat(self.0.clone().abs())
    }

    fn powi(&self, k: i64) -> Self {
        // k = 0 would otherwise produce an exact (precision-0) ONE, which
        // later precision-demanding operations reject
        if k == 0 {
            return BigFloat(DBig::ONE.with_precision(self.0.precision()).value());
        }
        BigFloat(self.0.powi(k.into()))
    }

    fn sqrt(&self) -> Result<Self> {
        if self.0 < DBig::ZERO {
            return Err(QError::NegativeRadicand(format!("sqrt({})", self.0)));
        }
        let v = if self.0.precision() == 0 {
            self.0.clone().with_precision(DEFAULT_PRECISION as usize).value()
        } else {
            self.0.clone()
        };
        Ok(BigFloat(v.sqrt()))
    }

    fn to_f64(&self) -> f64 {
        self.0.to_f64().value()
    }

    fn serialize(&self) -> String {
        format!("{}", self.0)
    }

    fn with_precision(&self, precision: u32) -> Self {
        BigFloat(self.0.clone().with_precision(precision as usize).value())
    }
}

// ---- exact backend ----

/// Exact rational number (reduced, arbitrary-size integers).
#[derive(Clone, PartialEq, PartialOrd)]
pub struct Rational(pub(crate) BigRational);

impl Rational {
    pub fn inner(&self) -> &BigRational {
        &self.0
    }
}

impl Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Display::fmt(&self.0, f)
    }
}

macro_rules! rat_ops {
    ($($trait:ident, $method:ident);*) => {$(
        impl $trait for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational($trait::$method(self.0, rhs.0))
            }
        }
    )*};
}
rat_ops!(Add, add; Sub, sub; Mul, mul; Div, div);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

fn parse_decimal_rational(s: &str) -> Result<BigRational> {
    // "-1.25" -> -125/100; "3" -> 3/1
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1i64, rest),
        None => (1i64, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(QError::Parse(format!("bad decimal literal {s:?}")));
    }
    let digits: String = format!("{}{}", int_part, frac_part);
    if !digits.chars().all(|c| c.is_ascii_digit()) {
        return Err(QError::Parse(format!("bad decimal literal {s:?}")));
    }
    let num: BigInt = digits
        .parse()
        .map_err(|_| QError::Parse(format!("bad decimal literal {s:?}")))?;
    let den = BigInt::from(10u32).pow(frac_part.len() as u32);
    Ok(BigRational::new(BigInt::from(sign) * num, den))
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_int(n: i64, _precision: u32) -> Self {
        Rational(BigRational::from_integer(BigInt::from(n)))
    }

    fn from_ratio(num: i64, den: i64, _precision: u32) -> Self {
        assert!(den != 0, "zero denominator");
        Rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    fn from_f64(v: f64, _precision: u32) -> Self {
        Rational(BigRational::from_float(v).expect("finite f64"))
    }

    fn parse(s: &str, _precision: u32) -> Result<Self> {
        let s = s.trim();
        if let Some((num, den)) = s.split_once('/') {
            let n: BigInt = num
                .trim()
                .parse()
                .map_err(|_| QError::Parse(format!("bad numerator in {s:?}")))?;
            let d: BigInt = den
                .trim()
                .parse()
                .map_err(|_| QError::Parse(format!("bad denominator in {s:?}")))?;
            if d.is_zero() {
                return Err(QError::Parse(format!("zero denominator in {s:?}")));
            }
            Ok(Rational(BigRational::new(n, d)))
        } else {
            parse_decimal_rational(s).map(Rational)
        }
    }

    fn zero(_precision: u32) -> Self {
        Rational(BigRational::zero())
    }

    fn one(_precision: u32) -> Self {
        Rational(BigRational::from_integer(BigInt::from(1)))
    }

    fn pow10(exp: i64, _precision: u32) -> Self {
        Rational(BigRational::from_integer(BigInt::from(10))).powi(exp)
    }

    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    fn powi(&self, k: i64) -> Self {
        if k >= 0 {
            Rational(self.0.pow(k as i32))
        } else {
            assert!(!self.0.is_zero(), "negative power of zero");
            Rational(self.0.pow(k as i32))
        }
    }

    fn sqrt(&self) -> Result<Self> {
        if self.0.is_negative() {
            return Err(QError::NegativeRadicand(format!("sqrt({})", self.0)));
        }
        let num = self.0.numer().sqrt();
        let den = self.0.denom().sqrt();
        if &(&num * &num) == self.0.numer() && &(&den * &den) == self.0.denom() {
            Ok(Rational(BigRational::new(num, den)))
        } else {
            Err(QError::ExactUnsupported(format!(
                "sqrt({}) is irrational",
                self.0
            )))
        }
    }

    fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    fn serialize(&self) -> String {
        format!("{}", self.0)
    }

    fn with_precision(&self, _precision: u32) -> Self {
        self.clone()
    }
}

// ---- context ----

pub const DEFAULT_PRECISION: u32 = 100;
/// Guard digits reserved for cancellation in alternating q-series.
pub const GUARD_DIGITS: u32 = 20;

/// The deformation parameter together with the precision/tolerance policy.
#[derive(Clone, Debug)]
pub struct QContext<S: Scalar> {
    pub q: S,
    pub precision: u32,
    /// Relative tolerance 10^-(P-20); zero in the exact backend.
    pub tol: S,
}

impl<S: Scalar> QContext<S> {
    pub fn new(q: S, precision: u32) -> Result<Self> {
        if q <= S::zero(precision) || q >= S::one(precision) {
            return Err(QError::Domain(format!("q = {q} must lie strictly in (0,1)")));
        }
        let tol = if S::EXACT {
            S::zero(precision)
        } else {
            S::pow10(-((precision.saturating_sub(GUARD_DIGITS)) as i64), precision)
        };
        Ok(QContext { q, precision, tol })
    }

    pub fn int(&self, n: i64) -> S {
        S::from_int(n, self.precision)
    }

    pub fn ratio(&self, num: i64, den: i64) -> S {
        S::from_ratio(num, den, self.precision)
    }

    pub fn zero(&self) -> S {
        S::zero(self.precision)
    }

    pub fn one(&self) -> S {
        S::one(self.precision)
    }

    /// q^k for any integer k.
    pub fn q_pow(&self, k: i64) -> S {
        self.q.powi(k)
    }

    /// Context with base 1/q (> 1). Only terminating finite sums may be
    /// evaluated against it; infinite products and non-terminating series
    /// are out of its domain.
    pub fn inverted(&self) -> QContext<S> {
        QContext {
            q: self.one() / self.q.clone(),
            precision: self.precision,
            tol: self.tol.clone(),
        }
    }

    /// Same q carried at `extra` additional digits (tolerance tightens to
    /// match). Extending a float is exact, so derived quantities stay
    /// consistent with the original context. No-op in the exact backend.
    pub fn boosted(&self, extra: u32) -> QContext<S> {
        if S::EXACT || extra == 0 {
            return self.clone();
        }
        let precision = self.precision + extra;
        QContext {
            q: self.q.with_precision(precision),
            precision,
            tol: S::pow10(
                -((precision.saturating_sub(GUARD_DIGITS)) as i64),
                precision,
            ),
        }
    }

    /// Residual acceptance: exactly zero (exact backend) or <= tol.
    pub fn within_tol(&self, residual: &S) -> bool {
        if S::EXACT {
            residual.is_zero()
        } else {
            residual.abs() <= self.tol
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_roundtrip_and_ops() {
        let a = BigFloat::from_ratio(1, 3, 50);
        let b = BigFloat::parse("1/3", 50).unwrap();
        assert!((a.clone() - b).abs() < BigFloat::pow10(-45, 50));
        let c = BigFloat::parse("0.25", 50).unwrap();
        assert_eq!(c.sqrt().unwrap().serialize(), "0.5");
        assert!(BigFloat::from_int(-1, 50).sqrt().is_err());
    }

    #[test]
    fn rational_parse_and_sqrt() {
        let a = Rational::parse("0.3", 0).unwrap();
        assert_eq!(a, Rational::from_ratio(3, 10, 0));
        let b = Rational::from_ratio(9, 16, 0);
        assert_eq!(b.sqrt().unwrap(), Rational::from_ratio(3, 4, 0));
        assert!(Rational::from_ratio(1, 2, 0).sqrt().is_err());
        assert_eq!(Rational::from_ratio(1, 2, 0).powi(-2), Rational::from_int(4, 0));
    }

    #[test]
    fn context_validates_q() {
        assert!(QContext::new(BigFloat::from_ratio(1, 2, 100), 100).is_ok());
        assert!(QContext::new(BigFloat::from_int(1, 100), 100).is_err());
        assert!(QContext::new(BigFloat::from_int(0, 100), 100).is_err());
        let ctx = QContext::new(BigFloat::from_ratio(1, 2, 100), 100).unwrap();
        assert_eq!(ctx.tol, BigFloat::pow10(-80, 100));
    }
}
