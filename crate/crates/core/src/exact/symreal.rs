//! Symbolic reals of the form `c * pi^m` with exact rational `c`.
//!
//! Values coming out of the continuous lattice are always single monomials
//! in pi, so products and quotients stay closed. Sums of monomials with
//! different powers are held in [`PiExpr`]. Order comparisons between
//! monomials of different powers cannot be decided by rational arithmetic
//! alone; they walk a precision ladder of pi enclosures and give a definite
//! answer unless the ladder is exhausted, which no exact equality short of
//! `c1 * pi^d = c2` (impossible for nonzero rationals) can trigger.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Div, Mul, Neg};

use num_bigint::BigInt;
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use super::bigrat::BigRat;
use super::pi::{pi_pow_enclosure, PRECISION_LADDER};
use crate::error::{Error, Result};

/// A single monomial `coeff * pi^pi_power`. Zero is normalized to power 0.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SymReal {
    coeff: BigRat,
    pi_power: i64,
}

impl SymReal {
    pub fn new(coeff: BigRat, pi_power: i64) -> Self {
        if coeff.is_zero() {
            SymReal { coeff, pi_power: 0 }
        } else {
            SymReal { coeff, pi_power }
        }
    }

    pub fn from_rat(coeff: BigRat) -> Self {
        SymReal::new(coeff, 0)
    }

    pub fn from_int(n: impl Into<BigInt>) -> Self {
        SymReal::from_rat(BigRat::from_int(n))
    }

    pub fn zero() -> Self {
        SymReal::from_int(0)
    }

    pub fn one() -> Self {
        SymReal::from_int(1)
    }

    pub fn pi() -> Self {
        SymReal::new(BigRat::one(), 1)
    }

    pub fn coeff(&self) -> &BigRat {
        &self.coeff
    }

    pub fn pi_power(&self) -> i64 {
        self.pi_power
    }

    pub fn is_zero(&self) -> bool {
        self.coeff.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.pi_power == 0
    }

    pub fn signum(&self) -> i32 {
        self.coeff.signum()
    }

    pub fn recip(&self) -> Result<Self> {
        Ok(SymReal::new(self.coeff.recip()?, -self.pi_power))
    }

    /// Exact comparison through the enclosure ladder. Errs with
    /// [`Error::PrecisionExhausted`] only if the operands are closer than
    /// the finest enclosure can separate.
    pub fn try_cmp(&self, other: &SymReal) -> Result<Ordering> {
        let ls = self.signum();
        let rs = other.signum();
        if ls != rs {
            return Ok(ls.cmp(&rs));
        }
        if ls == 0 {
            return Ok(Ordering::Equal);
        }
        if self.pi_power == other.pi_power {
            return Ok(self.coeff.cmp(&other.coeff));
        }
        // Same nonzero sign, different powers. Reduce to comparing
        // a * pi^d against b with d > 0 and a, b of that sign.
        let (a, b, d) = if self.pi_power > other.pi_power {
            (&self.coeff, &other.coeff, self.pi_power - other.pi_power)
        } else {
            (&other.coeff, &self.coeff, other.pi_power - self.pi_power)
        };
        let flip = self.pi_power < other.pi_power;
        let d = u32::try_from(d).map_err(|_| Error::Invalid("pi power delta too large".into()))?;
        for bits in PRECISION_LADDER {
            let (lo, hi) = pi_pow_enclosure(d, bits);
            // For negative a the product interval endpoints swap.
            let (prod_lo, prod_hi) = if ls > 0 {
                (a * &lo, a * &hi)
            } else {
                (a * &hi, a * &lo)
            };
            let ord = if prod_lo > *b {
                Some(Ordering::Greater)
            } else if prod_hi < *b {
                Some(Ordering::Less)
            } else {
                None
            };
            if let Some(ord) = ord {
                return Ok(if flip { ord.reverse() } else { ord });
            }
        }
        Err(Error::PrecisionExhausted(*PRECISION_LADDER.last().unwrap()))
    }

    /// Best-effort float value for display only.
    pub fn approx_f64(&self) -> f64 {
        self.coeff.to_f64() * std::f64::consts::PI.powi(self.pi_power as i32)
    }
}

impl Mul for SymReal {
    type Output = SymReal;
    fn mul(self, rhs: SymReal) -> SymReal {
        SymReal::new(self.coeff * rhs.coeff, self.pi_power + rhs.pi_power)
    }
}

impl Mul<&SymReal> for &SymReal {
    type Output = SymReal;
    fn mul(self, rhs: &SymReal) -> SymReal {
        SymReal::new(&self.coeff * &rhs.coeff, self.pi_power + rhs.pi_power)
    }
}

impl Div<&SymReal> for &SymReal {
    type Output = SymReal;
    fn div(self, rhs: &SymReal) -> SymReal {
        assert!(!rhs.is_zero(), "division by zero symbolic real");
        SymReal::new(
            &self.coeff * &rhs.coeff.recip().expect("nonzero"),
            self.pi_power - rhs.pi_power,
        )
    }
}

impl Div for SymReal {
    type Output = SymReal;
    fn div(self, rhs: SymReal) -> SymReal {
        (&self).div(&rhs)
    }
}

impl Neg for SymReal {
    type Output = SymReal;
    fn neg(self) -> SymReal {
        SymReal::new(-self.coeff, self.pi_power)
    }
}

impl fmt::Display for SymReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() || self.pi_power == 0 {
            return write!(f, "{}", self.coeff);
        }
        match self.pi_power {
            1 => write!(f, "{}·π", self.coeff),
            p => write!(f, "{}·π^{}", self.coeff, p),
        }
    }
}

impl fmt::Debug for SymReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SymReal({})", self)
    }
}

#[derive(Serialize, Deserialize)]
struct SymRealWire {
    coeff: BigRat,
    pi_power: i64,
}

impl Serialize for SymReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        SymRealWire {
            coeff: self.coeff.clone(),
            pi_power: self.pi_power,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SymReal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let wire = SymRealWire::deserialize(deserializer)?;
        if wire.coeff.is_zero() && wire.pi_power != 0 {
            return Err(de::Error::custom("zero coefficient with nonzero pi power"));
        }
        Ok(SymReal::new(wire.coeff, wire.pi_power))
    }
}

/// A finite sum of monomials in pi with distinct powers. Needed because a
/// sum of selected coefficients can mix powers (for instance `3 + 3/4·π`).
#[derive(Clone, PartialEq, Eq, Default)]
pub struct PiExpr {
    // power -> nonzero coefficient
    terms: BTreeMap<i64, BigRat>,
}

impl PiExpr {
    pub fn zero() -> Self {
        PiExpr::default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_monomial(&mut self, m: &SymReal) {
        if m.is_zero() {
            return;
        }
        let slot = self.terms.entry(m.pi_power).or_insert_with(BigRat::zero);
        *slot += m.coeff();
        if slot.is_zero() {
            self.terms.remove(&m.pi_power);
        }
    }

    /// Monomials in descending pi power.
    pub fn monomials(&self) -> Vec<SymReal> {
        self.terms
            .iter()
            .rev()
            .map(|(&p, c)| SymReal::new(c.clone(), p))
            .collect()
    }

    /// The monomial value if the sum has at most one term.
    pub fn as_monomial(&self) -> Option<SymReal> {
        match self.terms.len() {
            0 => Some(SymReal::zero()),
            1 => {
                let (&p, c) = self.terms.iter().next().unwrap();
                Some(SymReal::new(c.clone(), p))
            }
            _ => None,
        }
    }

    pub fn approx_f64(&self) -> f64 {
        self.terms
            .iter()
            .map(|(&p, c)| c.to_f64() * std::f64::consts::PI.powi(p as i32))
            .sum()
    }
}

impl From<SymReal> for PiExpr {
    fn from(m: SymReal) -> Self {
        let mut e = PiExpr::zero();
        e.add_monomial(&m);
        e
    }
}

impl fmt::Display for PiExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0/1");
        }
        for (i, m) in self.monomials().iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{}", m)?;
        }
        Ok(())
    }
}

impl fmt::Debug for PiExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PiExpr({})", self)
    }
}

impl Serialize for PiExpr {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Wire {
            terms: Vec<SymReal>,
        }
        Wire {
            terms: self.monomials(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PiExpr {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Wire {
            terms: Vec<SymReal>,
        }
        let wire = Wire::deserialize(deserializer)?;
        let mut e = PiExpr::zero();
        for m in &wire.terms {
            e.add_monomial(m);
        }
        Ok(e)
    }
}

/// Exact volume of the unit ball in the given dimension: a rational
/// multiple of an integer power of pi. Dimension 0 yields 1.
pub fn ball_volume(dim: u32) -> SymReal {
    if dim % 2 == 0 {
        // 1/m! * pi^m for dimension 2m
        let m = dim / 2;
        let mut fact = BigInt::from(1);
        for i in 2..=m {
            fact *= BigInt::from(i);
        }
        SymReal::new(BigRat::new(1.into(), fact).unwrap(), m as i64)
    } else {
        // 2^((n+1)/2) / n!! * pi^((n-1)/2) for odd dimension n
        let mut odd_fact = BigInt::from(1);
        let mut i = dim as u64;
        while i > 1 {
            odd_fact *= BigInt::from(i);
            i -= 2;
        }
        let two_pow = BigInt::from(1) << ((dim + 1) / 2);
        SymReal::new(BigRat::new(two_pow, odd_fact).unwrap(), ((dim - 1) / 2) as i64)
    }
}
