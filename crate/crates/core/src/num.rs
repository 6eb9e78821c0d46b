//! Numeric plumbing: the energy exponent, mixed exact/float scalars, vertex value
//! vectors with a shared denominator, and deterministic compensated summation.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Chunk length for parallel reductions. Fixed so that the grouping of
/// floating-point additions never depends on the number of worker threads.
pub const REDUCTION_CHUNK: usize = 4096;

/// The exponent `p > 1`, kept both as a float and as an exact rational.
#[derive(Clone, Debug, PartialEq)]
pub struct Exponent {
    value: f64,
    exact: BigRational,
}

impl Exponent {
    pub fn new(p: f64) -> Result<Self> {
        if !p.is_finite() || p <= 1.0 {
            return Err(Error::InvalidExponent(p));
        }
        let exact = BigRational::from_float(p).ok_or(Error::InvalidExponent(p))?;
        Ok(Self { value: p, exact })
    }

    /// `num/den`, e.g. `Exponent::ratio(3, 2)` for p = 3/2.
    pub fn ratio(num: i64, den: i64) -> Result<Self> {
        if den <= 0 {
            return Err(Error::arg("exponent denominator must be positive"));
        }
        let exact = BigRational::new(BigInt::from(num), BigInt::from(den));
        let value = ratio_to_f64(&exact);
        if value <= 1.0 {
            return Err(Error::InvalidExponent(value));
        }
        Ok(Self { value, exact })
    }

    #[must_use]
    pub fn value(&self) -> f64 {
        self.value
    }

    #[must_use]
    pub fn exact(&self) -> &BigRational {
        &self.exact
    }

    /// `Some(p)` when p is a (small) integer, which is what exact powers need.
    #[must_use]
    pub fn integer(&self) -> Option<u32> {
        if self.exact.is_integer() {
            self.exact.to_integer().to_u32().filter(|&k| k <= 64)
        } else {
            None
        }
    }

    /// `p - 1` as an integer when it is one.
    #[must_use]
    pub fn integer_minus_one(&self) -> Option<u32> {
        self.integer().map(|k| k - 1)
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.value)
    }
}

#[must_use]
pub fn ratio_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[must_use]
pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// A real number that stays an exact rational as long as the arithmetic allows.
#[derive(Clone, Debug, PartialEq)]
pub enum Scalar {
    Exact(BigRational),
    Float(f64),
}

impl Scalar {
    #[must_use]
    pub fn zero() -> Self {
        Scalar::Exact(BigRational::zero())
    }

    #[must_use]
    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(r) => ratio_to_f64(r),
            Scalar::Float(x) => *x,
        }
    }

    #[must_use]
    pub fn exact(&self) -> Option<&BigRational> {
        match self {
            Scalar::Exact(r) => Some(r),
            Scalar::Float(_) => None,
        }
    }

    #[must_use]
    pub fn is_exact(&self) -> bool {
        matches!(self, Scalar::Exact(_))
    }

    #[must_use]
    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Exact(r) => r.is_zero(),
            Scalar::Float(x) => *x == 0.0,
        }
    }

    #[must_use]
    pub fn abs(&self) -> Scalar {
        match self {
            Scalar::Exact(r) => Scalar::Exact(r.abs()),
            Scalar::Float(x) => Scalar::Float(x.abs()),
        }
    }

    /// Relative gap `|a-b| / max(|a|,|b|)`, zero when both vanish.
    #[must_use]
    pub fn relative_gap(&self, other: &Scalar) -> f64 {
        if let (Scalar::Exact(a), Scalar::Exact(b)) = (self, other) {
            if a == b {
                return 0.0;
            }
        }
        let (a, b) = (self.to_f64(), other.to_f64());
        let scale = a.abs().max(b.abs());
        if scale == 0.0 {
            0.0
        } else {
            (a - b).abs() / scale
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(r) => write!(f, "{r}"),
            Scalar::Float(x) => write!(f, "{x}"),
        }
    }
}

impl From<f64> for Scalar {
    fn from(x: f64) -> Self {
        Scalar::Float(x)
    }
}

impl From<BigRational> for Scalar {
    fn from(r: BigRational) -> Self {
        Scalar::Exact(r)
    }
}

macro_rules! scalar_binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<&Scalar> for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                match (self, rhs) {
                    (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a $op b),
                    _ => Scalar::Float(self.to_f64() $op rhs.to_f64()),
                }
            }
        }
        impl $trait for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                &self $op &rhs
            }
        }
    };
}
scalar_binop!(Add, add, +);
scalar_binop!(Sub, sub, -);
scalar_binop!(Mul, mul, *);

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Some(a.cmp(b)),
            _ => self.to_f64().partial_cmp(&other.to_f64()),
        }
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            value: f64,
            #[serde(skip_serializing_if = "Option::is_none")]
            exact: Option<String>,
        }
        Repr {
            value: self.to_f64(),
            exact: self.exact().map(ToString::to_string),
        }
        .serialize(s)
    }
}

/// One value per vertex (or per edge): either exact numerators over a common
/// positive denominator, or plain floats.
#[derive(Clone, Debug, PartialEq)]
pub enum NodeValues {
    Exact { num: Vec<BigInt>, den: BigInt },
    Float(Vec<f64>),
}

impl NodeValues {
    #[must_use]
    pub fn from_rationals(values: &[BigRational]) -> Self {
        let den = values
            .iter()
            .fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
        let num = values
            .iter()
            .map(|r| r.numer() * (&den / r.denom()))
            .collect();
        NodeValues::Exact { num, den }
    }

    #[must_use]
    pub fn from_integers(values: &[i64], den: i64) -> Self {
        assert!(den > 0, "denominator must be positive");
        NodeValues::Exact {
            num: values.iter().map(|&v| BigInt::from(v)).collect(),
            den: BigInt::from(den),
        }
    }

    #[must_use]
    pub fn len(&self) -> usize {
        match self {
            NodeValues::Exact { num, .. } => num.len(),
            NodeValues::Float(v) => v.len(),
        }
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[must_use]
    pub fn is_exact(&self) -> bool {
        matches!(self, NodeValues::Exact { .. })
    }

    #[must_use]
    pub fn get(&self, i: usize) -> Scalar {
        match self {
            NodeValues::Exact { num, den } => {
                Scalar::Exact(BigRational::new(num[i].clone(), den.clone()))
            }
            NodeValues::Float(v) => Scalar::Float(v[i]),
        }
    }

    #[must_use]
    pub fn get_f64(&self, i: usize) -> f64 {
        match self {
            NodeValues::Exact { num, den } => {
                ratio_to_f64(&BigRational::new(num[i].clone(), den.clone()))
            }
            NodeValues::Float(v) => v[i],
        }
    }

    #[must_use]
    pub fn to_f64_vec(&self) -> Vec<f64> {
        match self {
            NodeValues::Exact { num, den } => {
                // Converting through the rational keeps each entry correctly rounded.
                num.par_iter()
                    .map(|n| ratio_to_f64(&BigRational::new(n.clone(), den.clone())))
                    .collect()
            }
            NodeValues::Float(v) => v.clone(),
        }
    }

    #[must_use]
    pub fn to_float(&self) -> NodeValues {
        NodeValues::Float(self.to_f64_vec())
    }

    /// Keep exact values only when an exact computation is wanted.
    #[must_use]
    pub fn in_mode(&self, exact: bool) -> NodeValues {
        if exact || !self.is_exact() {
            self.clone()
        } else {
            self.to_float()
        }
    }

    /// Largest absolute value.
    #[must_use]
    pub fn max_abs(&self) -> Scalar {
        match self {
            NodeValues::Exact { num, den } => {
                let m = num.iter().map(Signed::abs).max().unwrap_or_default();
                Scalar::Exact(BigRational::new(m, den.clone()))
            }
            NodeValues::Float(v) => Scalar::Float(v.iter().fold(0.0_f64, |a, x| a.max(x.abs()))),
        }
    }

    #[must_use]
    pub fn min_max(&self) -> (Scalar, Scalar) {
        match self {
            NodeValues::Exact { num, den } => {
                let lo = num.iter().min().cloned().unwrap_or_default();
                let hi = num.iter().max().cloned().unwrap_or_default();
                (
                    Scalar::Exact(BigRational::new(lo, den.clone())),
                    Scalar::Exact(BigRational::new(hi, den.clone())),
                )
            }
            NodeValues::Float(v) => {
                let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (Scalar::Float(lo), Scalar::Float(hi))
            }
        }
    }

    /// `c * self + d`, exact when everything is exact.
    #[must_use]
    pub fn affine_map(&self, c: &Scalar, d: &Scalar) -> NodeValues {
        match (self, c, d) {
            (NodeValues::Exact { num, den }, Scalar::Exact(c), Scalar::Exact(d)) => {
                let values: Vec<BigRational> = num
                    .iter()
                    .map(|n| BigRational::new(n.clone(), den.clone()) * c + d)
                    .collect();
                NodeValues::from_rationals(&values)
            }
            _ => {
                let (c, d) = (c.to_f64(), d.to_f64());
                NodeValues::Float(self.to_f64_vec().iter().map(|x| c * x + d).collect())
            }
        }
    }

    /// Pointwise combination `self + other` (or `-`), exact when both are.
    pub fn combine(&self, other: &NodeValues, subtract: bool) -> Result<NodeValues> {
        if self.len() != other.len() {
            return Err(Error::arg("value vectors have different lengths"));
        }
        Ok(match (self, other) {
            (NodeValues::Exact { num: a, den: da }, NodeValues::Exact { num: b, den: db }) => {
                let den = da.lcm(db);
                let (fa, fb) = (&den / da, &den / db);
                let num = a
                    .iter()
                    .zip(b)
                    .map(|(x, y)| {
                        if subtract {
                            x * &fa - y * &fb
                        } else {
                            x * &fa + y * &fb
                        }
                    })
                    .collect();
                NodeValues::Exact { num, den }
            }
            _ => {
                let (a, b) = (self.to_f64_vec(), other.to_f64_vec());
                NodeValues::Float(
                    a.iter()
                        .zip(&b)
                        .map(|(x, y)| if subtract { x - y } else { x + y })
                        .collect(),
                )
            }
        })
    }

    /// Pointwise product, exact when both are.
    pub fn product(&self, other: &NodeValues) -> Result<NodeValues> {
        if self.len() != other.len() {
            return Err(Error::arg("value vectors have different lengths"));
        }
        Ok(match (self, other) {
            (NodeValues::Exact { num: a, den: da }, NodeValues::Exact { num: b, den: db }) => {
                NodeValues::Exact {
                    num: a.iter().zip(b).map(|(x, y)| x * y).collect(),
                    den: da * db,
                }
            }
            _ => {
                let (a, b) = (self.to_f64_vec(), other.to_f64_vec());
                NodeValues::Float(a.iter().zip(&b).map(|(x, y)| x * y).collect())
            }
        })
    }
}

/// `|x|^p` in floating point, with the common integer cases kept exact-ish.
#[inline]
#[must_use]
pub fn abs_pow(x: f64, p: f64) -> f64 {
    let a = x.abs();
    if p == 2.0 {
        a * a
    } else if p == 3.0 {
        a * a * a
    } else {
        a.powf(p)
    }
}

/// Neumaier's compensated summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[must_use]
    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Compensated sum of a sequence, in sequence order.
pub fn ordered_sum<I: IntoIterator<Item = f64>>(items: I) -> f64 {
    let mut acc = Compensated::default();
    for x in items {
        acc.add(x);
    }
    acc.value()
}

/// Sum of `term(i)` for `i < n`, bit-identical for any worker count.
pub fn par_sum<F>(n: usize, term: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let chunks = n.div_ceil(REDUCTION_CHUNK);
    let partial: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * REDUCTION_CHUNK;
            let hi = (lo + REDUCTION_CHUNK).min(n);
            ordered_sum((lo..hi).map(&term))
        })
        .collect();
    ordered_sum(partial)
}

/// Exact integer sum of `term(i)` for `i < n`.
pub fn par_sum_big<F>(n: usize, term: F) -> BigInt
where
    F: Fn(usize) -> BigInt + Sync,
{
    let chunks = n.div_ceil(REDUCTION_CHUNK);
    let partial: Vec<BigInt> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * REDUCTION_CHUNK;
            let hi = (lo + REDUCTION_CHUNK).min(n);
            (lo..hi).map(&term).fold(BigInt::zero(), |a, b| a + b)
        })
        .collect();
    partial.into_iter().fold(BigInt::zero(), |a, b| a + b)
}
