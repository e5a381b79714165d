//! Numeric modes.
//!
//! Interval algebra is written once against [`Scalar`] and runs either in
//! `f64` (the continuum layer) or in exact [`BigRational`] arithmetic.
//!
//! Long simulations only ever multiply `k` by ratios `(N+1)/N` or their
//! inverses. [`FactoredRatio`] keeps such products exact as a map from prime
//! to signed exponent, so an update costs a handful of small factorizations
//! instead of big-integer gcds.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Div, Mul};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive};

use crate::error::{Error, Result};

/// Relative tolerance used when comparing floating point values in float mode.
pub const FLOAT_REL_TOL: f64 = 1e-12;

/// A field element usable by the interval algebra.
pub trait Scalar: Clone + PartialOrd + Num + Signed + fmt::Debug + fmt::Display {
    fn from_count(n: u64) -> Self;

    /// Lossy conversion for reporting and for the continuum layer.
    fn as_f64(&self) -> f64;

    /// Equality for this mode: exact for rationals, relative `1e-12` for floats.
    fn matches(&self, other: &Self) -> bool;
}

impl Scalar for f64 {
    fn from_count(n: u64) -> Self {
        n as f64
    }

    fn as_f64(&self) -> f64 {
        *self
    }

    fn matches(&self, other: &Self) -> bool {
        let scale = self.abs().max(other.abs());
        (self - other).abs() <= FLOAT_REL_TOL * scale
    }
}

impl Scalar for BigRational {
    fn from_count(n: u64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn as_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn matches(&self, other: &Self) -> bool {
        self == other
    }
}

/// Shorthand for an exact rational `num/den`.
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Prime factorization by trial division; `n` must be at least 1.
fn factorize(mut n: u64) -> Vec<(u64, i64)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n.is_multiple_of(p) {
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Exact positive rational stored as prime exponents.
///
/// The empty map is 1. Zero is not representable, which matches every use
/// in this crate (`k > 0`, positive interval lengths).
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct FactoredRatio {
    exponents: BTreeMap<u64, i64>,
}

impl FactoredRatio {
    pub fn one() -> Self {
        Self::default()
    }

    /// `num / den` for positive integers.
    pub fn from_ratio(num: u64, den: u64) -> Result<Self> {
        if num == 0 || den == 0 {
            return Err(Error::NonPositiveK(format!("{num}/{den}")));
        }
        let mut out = Self::one();
        out.accumulate(num, 1);
        out.accumulate(den, -1);
        Ok(out)
    }

    pub fn from_integer(n: u64) -> Result<Self> {
        Self::from_ratio(n, 1)
    }

    fn accumulate(&mut self, n: u64, sign: i64) {
        for (p, e) in factorize(n) {
            let slot = self.exponents.entry(p).or_insert(0);
            *slot += sign * e;
            if *slot == 0 {
                self.exponents.remove(&p);
            }
        }
    }

    fn combine(&self, other: &Self, sign: i64) -> Self {
        let mut out = self.clone();
        for (&p, &e) in &other.exponents {
            let slot = out.exponents.entry(p).or_insert(0);
            *slot += sign * e;
            if *slot == 0 {
                out.exponents.remove(&p);
            }
        }
        out
    }

    pub fn recip(&self) -> Self {
        Self {
            exponents: self.exponents.iter().map(|(&p, &e)| (p, -e)).collect(),
        }
    }

    pub fn pow(&self, n: i64) -> Self {
        if n == 0 {
            return Self::one();
        }
        Self {
            exponents: self.exponents.iter().map(|(&p, &e)| (p, e * n)).collect(),
        }
    }

    pub fn is_one(&self) -> bool {
        self.exponents.is_empty()
    }

    /// Natural logarithm, summed over the factorization.
    pub fn ln(&self) -> f64 {
        self.exponents
            .iter()
            // Folding from +0.0: an empty f64 sum is -0.0.
            .fold(0.0, |acc, (&p, &e)| acc + e as f64 * (p as f64).ln())
    }

    /// Nearest `f64` while the ratio is small enough to expand; beyond that
    /// `exp(ln)`, which saturates to `inf` or `0` outside the float range.
    pub fn to_f64(&self) -> f64 {
        if self.bit_size() < 2048.0 {
            if let Some(v) = self.to_big_rational().to_f64() {
                return v;
            }
        }
        self.ln().exp()
    }

    pub fn to_big_rational(&self) -> BigRational {
        let mut num = BigInt::one();
        let mut den = BigInt::one();
        for (&p, &e) in &self.exponents {
            let base = BigInt::from(p);
            let power = num_traits::pow(base, e.unsigned_abs() as usize);
            if e > 0 {
                num *= power;
            } else {
                den *= power;
            }
        }
        BigRational::new(num, den)
    }

    /// Number of bits needed for numerator plus denominator; a size probe.
    pub fn bit_size(&self) -> f64 {
        self.exponents
            .iter()
            .map(|(&p, &e)| e.unsigned_abs() as f64 * (p as f64).log2())
            .sum()
    }
}

impl fmt::Debug for FactoredRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FactoredRatio(")?;
        if self.exponents.is_empty() {
            write!(f, "1")?;
        }
        for (i, (p, e)) in self.exponents.iter().enumerate() {
            if i > 0 {
                write!(f, "·")?;
            }
            write!(f, "{p}^{e}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for FactoredRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.bit_size() <= 256.0 {
            write!(f, "{}", self.to_big_rational())
        } else {
            write!(f, "exp({})", self.ln())
        }
    }
}

impl Mul for &FactoredRatio {
    type Output = FactoredRatio;
    fn mul(self, rhs: &FactoredRatio) -> FactoredRatio {
        self.combine(rhs, 1)
    }
}

impl Mul for FactoredRatio {
    type Output = FactoredRatio;
    fn mul(self, rhs: FactoredRatio) -> FactoredRatio {
        self.combine(&rhs, 1)
    }
}

impl Div for &FactoredRatio {
    type Output = FactoredRatio;
    fn div(self, rhs: &FactoredRatio) -> FactoredRatio {
        self.combine(rhs, -1)
    }
}

impl Div for FactoredRatio {
    type Output = FactoredRatio;
    fn div(self, rhs: FactoredRatio) -> FactoredRatio {
        self.combine(&rhs, -1)
    }
}
