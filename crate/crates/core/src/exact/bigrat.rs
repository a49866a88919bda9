use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Arbitrary-precision rational number. Always stored reduced with a
/// positive denominator; serializes as the string `"p/q"` with the
/// denominator always present (`"2/1"`, `"0/1"`, `"-7/3"`).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct BigRat(BigRational);

impl BigRat {
    pub fn new(numer: BigInt, denom: BigInt) -> Result<Self> {
        if denom.is_zero() {
            return Err(Error::Invalid("rational with zero denominator".into()));
        }
        Ok(BigRat(BigRational::new(numer, denom)))
    }

    pub fn from_int(n: impl Into<BigInt>) -> Self {
        BigRat(BigRational::from_integer(n.into()))
    }

    pub fn zero() -> Self {
        BigRat(BigRational::zero())
    }

    pub fn one() -> Self {
        BigRat(BigRational::one())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    /// Sign as -1, 0, or 1.
    pub fn signum(&self) -> i32 {
        match self.0.numer().sign() {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        }
    }

    pub fn abs(&self) -> Self {
        BigRat(self.0.abs())
    }

    pub fn recip(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::Invalid("reciprocal of zero".into()));
        }
        Ok(BigRat(self.0.recip()))
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    /// Integer part of `self`, rounding toward negative infinity.
    pub fn floor_int(&self) -> BigInt {
        self.0.floor().to_integer()
    }

    pub fn pow(&self, exp: i32) -> Result<Self> {
        if exp < 0 && self.is_zero() {
            return Err(Error::Invalid("negative power of zero".into()));
        }
        Ok(BigRat(self.0.pow(exp)))
    }

    /// Best-effort conversion for display purposes only.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or_else(|| {
            // Fall back to a quotient of lossy conversions for huge operands.
            let n = self.0.numer().to_f64().unwrap_or(f64::NAN);
            let d = self.0.denom().to_f64().unwrap_or(f64::NAN);
            n / d
        })
    }
}

impl From<BigInt> for BigRat {
    fn from(n: BigInt) -> Self {
        BigRat::from_int(n)
    }
}

impl From<i64> for BigRat {
    fn from(n: i64) -> Self {
        BigRat::from_int(n)
    }
}

impl From<u64> for BigRat {
    fn from(n: u64) -> Self {
        BigRat::from_int(BigInt::from(n))
    }
}

impl fmt::Display for BigRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl fmt::Debug for BigRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BigRat({})", self)
    }
}

impl FromStr for BigRat {
    type Err = Error;

    /// Accepts `"p/q"` or a bare integer `"p"`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Invalid(format!("malformed rational {s:?}"));
        match s.split_once('/') {
            Some((n, d)) => {
                let numer = BigInt::from_str(n.trim()).map_err(|_| bad())?;
                let denom = BigInt::from_str(d.trim()).map_err(|_| bad())?;
                BigRat::new(numer, denom)
            }
            None => {
                let numer = BigInt::from_str(s.trim()).map_err(|_| bad())?;
                Ok(BigRat::from_int(numer))
            }
        }
    }
}

impl Serialize for BigRat {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BigRat {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        BigRat::from_str(&s).map_err(de::Error::custom)
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for BigRat {
            type Output = BigRat;
            fn $method(self, rhs: BigRat) -> BigRat {
                BigRat((self.0).$method(rhs.0))
            }
        }
        impl<'a> $trait<&'a BigRat> for &BigRat {
            type Output = BigRat;
            fn $method(self, rhs: &'a BigRat) -> BigRat {
                BigRat((&self.0).$method(&rhs.0))
            }
        }
        impl $trait<&BigRat> for BigRat {
            type Output = BigRat;
            fn $method(self, rhs: &BigRat) -> BigRat {
                BigRat((self.0).$method(&rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);

impl Div for BigRat {
    type Output = BigRat;
    fn div(self, rhs: BigRat) -> BigRat {
        assert!(!rhs.is_zero(), "division by zero rational");
        BigRat(self.0 / rhs.0)
    }
}

impl Div<&BigRat> for &BigRat {
    type Output = BigRat;
    fn div(self, rhs: &BigRat) -> BigRat {
        assert!(!rhs.is_zero(), "division by zero rational");
        BigRat(&self.0 / &rhs.0)
    }
}

impl Neg for BigRat {
    type Output = BigRat;
    fn neg(self) -> BigRat {
        BigRat(-self.0)
    }
}

impl Neg for &BigRat {
    type Output = BigRat;
    fn neg(self) -> BigRat {
        BigRat(-&self.0)
    }
}

impl AddAssign<&BigRat> for BigRat {
    fn add_assign(&mut self, rhs: &BigRat) {
        self.0 += &rhs.0;
    }
}

impl AddAssign for BigRat {
    fn add_assign(&mut self, rhs: BigRat) {
        self.0 += rhs.0;
    }
}

impl SubAssign<&BigRat> for BigRat {
    fn sub_assign(&mut self, rhs: &BigRat) {
        self.0 -= &rhs.0;
    }
}

impl MulAssign<&BigRat> for BigRat {
    fn mul_assign(&mut self, rhs: &BigRat) {
        self.0 *= &rhs.0;
    }
}

impl Sum for BigRat {
    fn sum<I: Iterator<Item = BigRat>>(iter: I) -> BigRat {
        iter.fold(BigRat::zero(), |acc, x| acc + x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_always_includes_denominator() {
        assert_eq!(BigRat::from(2i64).to_string(), "2/1");
        assert_eq!(BigRat::zero().to_string(), "0/1");
        assert_eq!(
            BigRat::new(BigInt::from(4), BigInt::from(-6)).unwrap().to_string(),
            "-2/3"
        );
    }

    #[test]
    fn parse_round_trip() {
        for s in ["0/1", "2/1", "-7/3", "355/113"] {
            let r: BigRat = s.parse().unwrap();
            assert_eq!(r.to_string(), s);
        }
        let bare: BigRat = "42".parse().unwrap();
        assert_eq!(bare, BigRat::from(42i64));
        assert!("1/0".parse::<BigRat>().is_err());
        assert!("x/2".parse::<BigRat>().is_err());
    }

    #[test]
    fn serde_uses_string_form() {
        let r = BigRat::new(BigInt::from(3), BigInt::from(4)).unwrap();
        assert_eq!(serde_json::to_string(&r).unwrap(), "\"3/4\"");
        let back: BigRat = serde_json::from_str("\"3/4\"").unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn arithmetic_is_exact() {
        let third: BigRat = "1/3".parse().unwrap();
        let sum = (0..3).map(|_| third.clone()).sum::<BigRat>();
        assert_eq!(sum, BigRat::one());
        assert_eq!((&third * &third).to_string(), "1/9");
        assert_eq!(third.recip().unwrap(), BigRat::from(3i64));
    }
}
