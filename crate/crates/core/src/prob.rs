//! Probability values in two numeric modes.
//!
//! `ProbValue` is either an exact arbitrary-precision fraction or an `f64`.
//! Arithmetic between two rationals stays exact; any operation touching a
//! float produces a float. Hot loops do not go through the enum: they are
//! written against the [`Scalar`] trait and instantiated for `BigRational`
//! or `f64`, then wrapped back into a `ProbValue` at the boundary.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

/// Numeric mode of a computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NumMode {
    Rational,
    Float,
}

impl fmt::Display for NumMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NumMode::Rational => f.write_str("rational"),
            NumMode::Float => f.write_str("float"),
        }
    }
}

impl FromStr for NumMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rational" => Ok(NumMode::Rational),
            "float" => Ok(NumMode::Float),
            other => Err(Error::invalid(format!("unknown numeric mode `{other}`"))),
        }
    }
}

#[derive(Clone, Debug)]
pub enum ProbValue {
    Rational(BigRational),
    Float(f64),
}

impl ProbValue {
    pub fn zero(mode: NumMode) -> Self {
        match mode {
            NumMode::Rational => ProbValue::Rational(<BigRational as Zero>::zero()),
            NumMode::Float => ProbValue::Float(0.0),
        }
    }

    pub fn one(mode: NumMode) -> Self {
        match mode {
            NumMode::Rational => ProbValue::Rational(<BigRational as One>::one()),
            NumMode::Float => ProbValue::Float(1.0),
        }
    }

    /// Exact fraction `num/den`. Panics on a zero denominator.
    pub fn ratio(num: i64, den: i64) -> Self {
        ProbValue::Rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn float(x: f64) -> Self {
        ProbValue::Float(x)
    }

    pub fn mode(&self) -> NumMode {
        match self {
            ProbValue::Rational(_) => NumMode::Rational,
            ProbValue::Float(_) => NumMode::Float,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            ProbValue::Rational(r) => rational_to_f64(r),
            ProbValue::Float(x) => *x,
        }
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            ProbValue::Rational(r) => Some(r),
            ProbValue::Float(_) => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            ProbValue::Rational(r) => Zero::is_zero(r),
            ProbValue::Float(x) => *x == 0.0,
        }
    }

    pub fn is_negative(&self) -> bool {
        match self {
            ProbValue::Rational(r) => r.is_negative(),
            ProbValue::Float(x) => *x < 0.0,
        }
    }

    pub fn abs(&self) -> Self {
        match self {
            ProbValue::Rational(r) => ProbValue::Rational(Signed::abs(r)),
            ProbValue::Float(x) => ProbValue::Float(f64::abs(*x)),
        }
    }

    /// Converts to the requested mode. Float to rational is refused: rational
    /// mode only accepts parameters that were rational to begin with.
    pub fn in_mode(&self, mode: NumMode) -> Result<Self> {
        match (self, mode) {
            (ProbValue::Rational(_), NumMode::Rational) | (ProbValue::Float(_), NumMode::Float) => {
                Ok(self.clone())
            }
            (ProbValue::Rational(r), NumMode::Float) => Ok(ProbValue::Float(rational_to_f64(r))),
            (ProbValue::Float(x), NumMode::Rational) => Err(Error::NonRational(format!(
                "float value {x} cannot be used in rational mode"
            ))),
        }
    }

    /// Exact equality when both sides are rational, bitwise `==` otherwise.
    pub fn exactly_equals(&self, other: &ProbValue) -> bool {
        match (self, other) {
            (ProbValue::Rational(a), ProbValue::Rational(b)) => a == b,
            _ => self.to_f64() == other.to_f64(),
        }
    }

    /// Sum in the mode of the first element (or `mode` for an empty input).
    pub fn sum<'a, I: IntoIterator<Item = &'a ProbValue>>(mode: NumMode, items: I) -> ProbValue {
        items.into_iter().fold(ProbValue::zero(mode), |acc, x| &acc + x)
    }

    /// Formats with `digits` significant digits for floats; rationals are
    /// always printed exactly.
    pub fn format(&self, digits: Option<usize>) -> String {
        match (self, digits) {
            (ProbValue::Float(x), Some(d)) => format_float_digits(*x, d),
            _ => self.to_string(),
        }
    }
}

/// Correctly rounded conversion; `Ratio::to_f64` handles big operands without
/// overflowing the intermediate numerator/denominator.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
}

pub fn format_float_digits(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let d = digits.max(1);
    format!("{:.*e}", d - 1, x)
}

impl fmt::Display for ProbValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProbValue::Rational(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            // Shortest round-trip digits, exponent form for extreme magnitudes.
            ProbValue::Float(x) => write!(f, "{x:?}"),
        }
    }
}

impl FromStr for ProbValue {
    type Err = Error;

    /// `"a/b"`, `"a"` and plain decimals such as `"0.125"` parse as exact
    /// rationals. Use [`ProbValue::float`] for floating-point input.
    fn from_str(s: &str) -> Result<Self> {
        parse_rational(s.trim()).map(ProbValue::Rational)
    }
}

fn parse_rational(s: &str) -> Result<BigRational> {
    let bad = || Error::invalid(format!("cannot parse `{s}` as an exact fraction"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(Error::invalid(format!("zero denominator in `{s}`")));
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = int.starts_with('-');
        let int_part: BigInt = if int.is_empty() || int == "-" {
            BigInt::zero()
        } else {
            int.parse().map_err(|_| bad())?
        };
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let frac_part: BigInt = frac.parse().map_err(|_| bad())?;
        let mag = int_part.abs() * &scale + frac_part;
        let num = if negative { -mag } else { mag };
        return Ok(BigRational::new(num, scale));
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(BigRational::from_integer(n))
}

impl PartialEq for ProbValue {
    fn eq(&self, other: &Self) -> bool {
        self.exactly_equals(other)
    }
}

impl PartialOrd for ProbValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (ProbValue::Rational(a), ProbValue::Rational(b)) => Some(a.cmp(b)),
            _ => self.to_f64().partial_cmp(&other.to_f64()),
        }
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $op:tt) => {
        impl<'a> $tr<&'a ProbValue> for &'a ProbValue {
            type Output = ProbValue;
            fn $method(self, rhs: &'a ProbValue) -> ProbValue {
                match (self, rhs) {
                    (ProbValue::Rational(a), ProbValue::Rational(b)) => ProbValue::Rational(a $op b),
                    _ => ProbValue::Float(self.to_f64() $op rhs.to_f64()),
                }
            }
        }

        impl $tr for ProbValue {
            type Output = ProbValue;
            fn $method(self, rhs: ProbValue) -> ProbValue {
                (&self).$method(&rhs)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

impl<'a> Div<&'a ProbValue> for &'a ProbValue {
    type Output = ProbValue;

    /// Panics on an exact zero divisor; callers check for zero-probability
    /// conditioning before dividing.
    fn div(self, rhs: &'a ProbValue) -> ProbValue {
        match (self, rhs) {
            (ProbValue::Rational(a), ProbValue::Rational(b)) => ProbValue::Rational(a / b),
            _ => ProbValue::Float(self.to_f64() / rhs.to_f64()),
        }
    }
}

impl Div for ProbValue {
    type Output = ProbValue;
    fn div(self, rhs: ProbValue) -> ProbValue {
        &self / &rhs
    }
}

impl Neg for ProbValue {
    type Output = ProbValue;
    fn neg(self) -> ProbValue {
        match self {
            ProbValue::Rational(r) => ProbValue::Rational(-r),
            ProbValue::Float(x) => ProbValue::Float(-x),
        }
    }
}

impl Serialize for ProbValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ProbValue::Rational(_) => serializer.serialize_str(&self.to_string()),
            ProbValue::Float(x) => serializer.serialize_f64(*x),
        }
    }
}

impl<'de> Deserialize<'de> for ProbValue {
    /// JSON strings are exact rationals, JSON numbers are floats.
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct PV;
        impl Visitor<'_> for PV {
            type Value = ProbValue;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or a fraction string such as \"1/3\"")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<ProbValue, E> {
                v.parse().map_err(|e: Error| E::custom(e.to_string()))
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<ProbValue, E> {
                Ok(ProbValue::Float(v))
            }
            // JSON integers are exact.
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<ProbValue, E> {
                Ok(ProbValue::Rational(BigRational::from_integer(v.into())))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<ProbValue, E> {
                Ok(ProbValue::Rational(BigRational::from_integer(v.into())))
            }
        }
        deserializer.deserialize_any(PV)
    }
}

/// Field operations needed by the exact and floating-point kernels.
pub trait Scalar: Clone + Send + Sync + PartialOrd + fmt::Debug + 'static {
    const MODE: NumMode;

    fn zero() -> Self;
    fn one() -> Self;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn div(&self, rhs: &Self) -> Self;
    fn is_zero(&self) -> bool;
    fn abs(&self) -> Self;
    fn to_f64(&self) -> f64;
    fn from_prob(p: &ProbValue) -> Result<Self>;
    fn into_prob(self) -> ProbValue;

    fn from_ratio(num: i64, den: i64) -> Self;
}

impl Scalar for BigRational {
    const MODE: NumMode = NumMode::Rational;

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn div(&self, rhs: &Self) -> Self {
        self / rhs
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
    fn to_f64(&self) -> f64 {
        rational_to_f64(self)
    }
    fn from_prob(p: &ProbValue) -> Result<Self> {
        match p {
            ProbValue::Rational(r) => Ok(r.clone()),
            ProbValue::Float(x) => Err(Error::NonRational(format!(
                "float value {x} cannot be used in rational mode"
            ))),
        }
    }
    fn into_prob(self) -> ProbValue {
        ProbValue::Rational(self)
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(num.into(), den.into())
    }
}

impl Scalar for f64 {
    const MODE: NumMode = NumMode::Float;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn div(&self, rhs: &Self) -> Self {
        self / rhs
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn from_prob(p: &ProbValue) -> Result<Self> {
        Ok(p.to_f64())
    }
    fn into_prob(self) -> ProbValue {
        ProbValue::Float(self)
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
}

/// Neumaier-compensated running sum. Summation order is fixed by the caller,
/// so results are reproducible bit for bit.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_display_is_lowest_terms() {
        assert_eq!(ProbValue::ratio(2, 8).to_string(), "1/4");
        assert_eq!(ProbValue::ratio(0, 5).to_string(), "0/1");
        assert_eq!(ProbValue::ratio(3, 3).to_string(), "1/1");
    }

    #[test]
    fn float_display_round_trips() {
        for x in [0.1, 1.0 / 3.0, 2.5e-300, 0.0] {
            let s = ProbValue::float(x).to_string();
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn parses_fraction_integer_and_decimal() {
        assert_eq!("3/12".parse::<ProbValue>().unwrap(), ProbValue::ratio(1, 4));
        assert_eq!("1".parse::<ProbValue>().unwrap(), ProbValue::ratio(1, 1));
        assert_eq!("0.125".parse::<ProbValue>().unwrap(), ProbValue::ratio(1, 8));
        assert_eq!("-0.5".parse::<ProbValue>().unwrap(), ProbValue::ratio(-1, 2));
        assert!("1/0".parse::<ProbValue>().is_err());
        assert!("abc".parse::<ProbValue>().is_err());
    }

    #[test]
    fn mixed_arithmetic_degrades_to_float() {
        let a = ProbValue::ratio(1, 2);
        let b = ProbValue::float(0.25);
        assert_eq!((&a * &b).mode(), NumMode::Float);
        assert_eq!((&a + &a).mode(), NumMode::Rational);
        assert_eq!(&a / &ProbValue::ratio(1, 4), ProbValue::ratio(2, 1));
    }

    #[test]
    fn serde_distinguishes_modes() {
        let r = ProbValue::ratio(1, 3);
        let f = ProbValue::float(0.5);
        assert_eq!(serde_json::to_string(&r).unwrap(), "\"1/3\"");
        assert_eq!(serde_json::to_string(&f).unwrap(), "0.5");
        let back: ProbValue = serde_json::from_str("\"1/3\"").unwrap();
        assert_eq!(back, r);
        let back: ProbValue = serde_json::from_str("0.5").unwrap();
        assert_eq!(back.mode(), NumMode::Float);
    }

    #[test]
    fn float_refuses_rational_mode() {
        assert!(ProbValue::float(0.5).in_mode(NumMode::Rational).is_err());
        assert_eq!(
            ProbValue::ratio(1, 4).in_mode(NumMode::Float).unwrap().to_f64(),
            0.25
        );
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let mut s = CompensatedSum::new();
        s.add(1.0);
        for _ in 0..10 {
            s.add(1e-16);
        }
        assert!((s.value() - (1.0 + 1e-15)).abs() < 1e-18);
    }
}
