//! Exact rational numbers.
//!
//! `Rat` wraps an arbitrary-precision `BigRational` and fixes the textual
//! form used by every file format in the crate: `"p/q"`, or `"p"` when the
//! denominator is one.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rat(BigRational);

impl Rat {
    pub fn new(numer: i64, denom: i64) -> Self {
        assert!(denom != 0, "zero denominator");
        Rat(BigRational::new(numer.into(), denom.into()))
    }

    pub fn from_bigints(numer: BigInt, denom: BigInt) -> Result<Self, Error> {
        if denom.is_zero() {
            return Err(Error::Parse("zero denominator".into()));
        }
        Ok(Rat(BigRational::new(numer, denom)))
    }

    pub fn integer(n: i64) -> Self {
        Rat(BigRational::from_integer(n.into()))
    }

    pub fn zero() -> Self {
        Rat(BigRational::zero())
    }

    pub fn one() -> Self {
        Rat(BigRational::one())
    }

    /// `2^-n`.
    pub fn dyadic_unit(n: u32) -> Self {
        Rat(BigRational::new(BigInt::one(), BigInt::one() << n))
    }

    /// `2^n` for any integer exponent.
    pub fn pow2(n: i32) -> Self {
        if n >= 0 {
            Rat(BigRational::from_integer(BigInt::one() << n as u32))
        } else {
            Self::dyadic_unit(n.unsigned_abs())
        }
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn abs(&self) -> Self {
        Rat(self.0.abs())
    }

    pub fn recip(&self) -> Self {
        Rat(self.0.recip())
    }

    pub fn floor(&self) -> BigInt {
        self.0.floor().to_integer()
    }

    pub fn ceil(&self) -> BigInt {
        self.0.ceil().to_integer()
    }

    /// Representative of `self` modulo 1 in `[0, 1)`.
    pub fn frac(&self) -> Self {
        Rat(&self.0 - self.0.floor())
    }

    /// True when the reduced denominator is a power of two.
    pub fn is_dyadic(&self) -> bool {
        let d = self.denom();
        d.sign() == Sign::Plus && (d & (d - BigInt::one())).is_zero()
    }

    /// Exponent `e` with denominator `2^e`, if dyadic.
    pub fn dyadic_exponent(&self) -> Option<u64> {
        if self.is_dyadic() {
            Some(self.denom().bits() - 1)
        } else {
            None
        }
    }

    pub fn mul_pow2(&self, n: i32) -> Self {
        self * &Self::pow2(n)
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn as_big(&self) -> &BigRational {
        &self.0
    }

    /// Decimal rendering rounded to `digits` significant digits
    /// (round half away from zero). Display only; never compared.
    pub fn to_decimal(&self, digits: u32) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let neg = self.is_negative();
        let x = self.0.abs();
        let ten = BigRational::from_integer(10.into());
        // Find e with 10^e <= x < 10^(e+1).
        let mut e: i32 = 0;
        let mut scaled = x.clone();
        while scaled >= ten {
            scaled /= &ten;
            e += 1;
        }
        while scaled < BigRational::one() {
            scaled *= &ten;
            e -= 1;
        }
        let shift = digits as i32 - 1 - e;
        let factor = BigRational::from_integer(BigInt::from(10).pow(shift.unsigned_abs()));
        let y = if shift >= 0 { &x * &factor } else { &x / &factor };
        let half = BigRational::new(1.into(), 2.into());
        let mut m = (y + half).floor().to_integer();
        let mut shift = shift;
        if m.to_string().len() > digits as usize {
            m /= 10;
            shift -= 1;
        }
        let mut digits_str = m.to_string();
        let body = if shift <= 0 {
            digits_str.push_str(&"0".repeat(shift.unsigned_abs() as usize));
            digits_str
        } else {
            let shift = shift as usize;
            if digits_str.len() <= shift {
                let pad = "0".repeat(shift - digits_str.len());
                format!("0.{pad}{digits_str}")
            } else {
                let split = digits_str.len() - shift;
                format!("{}.{}", &digits_str[..split], &digits_str[split..])
            }
        };
        let body = if body.contains('.') {
            body.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            body
        };
        if neg {
            format!("-{body}")
        } else {
            body
        }
    }
}

/// Least common multiple of the denominators.
pub fn common_denominator<'a, I: IntoIterator<Item = &'a Rat>>(values: I) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, r| acc.lcm(r.denom()))
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Rat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let s = s.trim();
        let bad = || Error::Parse(format!("invalid rational {s:?}"));
        let (p, q) = match s.split_once('/') {
            Some((p, q)) => (p.trim(), q.trim()),
            None => (s, "1"),
        };
        let p: BigInt = p.parse().map_err(|_| bad())?;
        let q: BigInt = q.parse().map_err(|_| bad())?;
        Rat::from_bigints(p, q)
    }
}

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl From<i64> for Rat {
    fn from(n: i64) -> Self {
        Rat::integer(n)
    }
}

impl From<BigInt> for Rat {
    fn from(n: BigInt) -> Self {
        Rat(BigRational::from_integer(n))
    }
}

impl From<BigRational> for Rat {
    fn from(r: BigRational) -> Self {
        Rat(r)
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident) => {
        impl $tr<&Rat> for &Rat {
            type Output = Rat;
            fn $method(self, rhs: &Rat) -> Rat {
                Rat($tr::$method(&self.0, &rhs.0))
            }
        }
        impl $tr<Rat> for Rat {
            type Output = Rat;
            fn $method(self, rhs: Rat) -> Rat {
                Rat($tr::$method(self.0, rhs.0))
            }
        }
        impl $tr<&Rat> for Rat {
            type Output = Rat;
            fn $method(self, rhs: &Rat) -> Rat {
                Rat($tr::$method(self.0, &rhs.0))
            }
        }
        impl $tr<Rat> for &Rat {
            type Output = Rat;
            fn $method(self, rhs: Rat) -> Rat {
                Rat($tr::$method(&self.0, rhs.0))
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);
binop!(Div, div);

impl AddAssign<&Rat> for Rat {
    fn add_assign(&mut self, rhs: &Rat) {
        self.0 += &rhs.0;
    }
}

impl SubAssign<&Rat> for Rat {
    fn sub_assign(&mut self, rhs: &Rat) {
        self.0 -= &rhs.0;
    }
}

impl Neg for Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        Rat(-self.0)
    }
}

impl Neg for &Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        Rat(-&self.0)
    }
}

impl Sum for Rat {
    fn sum<I: Iterator<Item = Rat>>(iter: I) -> Rat {
        iter.fold(Rat::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a Rat> for Rat {
    fn sum<I: Iterator<Item = &'a Rat>>(iter: I) -> Rat {
        iter.fold(Rat::zero(), |acc, x| acc + x)
    }
}

/// Compare `a/b` and `c/d` for positive `b`, `d` without allocating when
/// the cross products fit in `i128`.
pub(crate) fn cmp_fractions(a: i128, b: i128, c: i128, d: i128) -> Ordering {
    match (a.checked_mul(d), c.checked_mul(b)) {
        (Some(x), Some(y)) => x.cmp(&y),
        _ => (BigInt::from(a) * BigInt::from(d)).cmp(&(BigInt::from(c) * BigInt::from(b))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        let r: Rat = "6/8".parse().unwrap();
        assert_eq!(r.to_string(), "3/4");
        assert_eq!("-4/2".parse::<Rat>().unwrap().to_string(), "-2");
        assert_eq!("7".parse::<Rat>().unwrap(), Rat::integer(7));
        assert_eq!("3/-6".parse::<Rat>().unwrap(), Rat::new(-1, 2));
        assert!("1/0".parse::<Rat>().is_err());
        assert!("x".parse::<Rat>().is_err());
        assert!("1/2/3".parse::<Rat>().is_err());
    }

    #[test]
    fn frac_wraps_negative_values() {
        assert_eq!(Rat::new(-1, 3).frac(), Rat::new(2, 3));
        assert_eq!(Rat::new(7, 3).frac(), Rat::new(1, 3));
        assert_eq!(Rat::integer(-2).frac(), Rat::zero());
    }

    #[test]
    fn dyadic_detection() {
        assert!(Rat::new(3, 8).is_dyadic());
        assert!(Rat::zero().is_dyadic());
        assert!(!Rat::new(1, 3).is_dyadic());
        assert_eq!(Rat::new(3, 8).dyadic_exponent(), Some(3));
        assert_eq!(Rat::integer(5).dyadic_exponent(), Some(0));
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(Rat::new(1, 3).to_decimal(12), "0.333333333333");
        assert_eq!(Rat::new(2, 3).to_decimal(12), "0.666666666667");
        assert_eq!(Rat::integer(12).to_decimal(12), "12");
        assert_eq!(Rat::new(-11, 2).to_decimal(12), "-5.5");
        assert_eq!(Rat::new(1, 3000).to_decimal(3), "0.000333");
        assert_eq!(Rat::new(999_999, 1000).to_decimal(3), "1000");
        assert_eq!(Rat::integer(123_456).to_decimal(2), "120000");
    }

    #[test]
    fn serde_as_string() {
        let r = Rat::new(-5, 12);
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(s, "\"-5/12\"");
        assert_eq!(serde_json::from_str::<Rat>(&s).unwrap(), r);
    }

    #[test]
    fn fraction_comparison_falls_back_on_overflow() {
        let big = i128::MAX / 3;
        assert_eq!(cmp_fractions(big, 7, big, 8), Ordering::Greater);
        assert_eq!(cmp_fractions(1, 3, 2, 6), Ordering::Equal);
    }
}
