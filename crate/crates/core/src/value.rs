//! Scalar type for preference weights and scores.
//!
//! Weights such as `1/k` and `1/(l-1)` are kept as exact rationals so that
//! small worked examples reproduce bit-exactly. Arithmetic degrades to `f64`
//! as soon as one operand is approximate, and aggregation may force the
//! degradation when a denominator grows past a configured bound.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::ser::{Serialize, Serializer};

/// A preference weight or score: exact rational or binary floating point.
#[derive(Clone, Debug)]
pub enum Value {
    Exact(BigRational),
    Approx(f64),
}

impl Value {
    pub fn zero() -> Self {
        Value::Exact(BigRational::zero())
    }

    pub fn from_int(n: i64) -> Self {
        Value::Exact(BigRational::from_integer(BigInt::from(n)))
    }

    /// Exact fraction `numer/denom`. Panics if `denom == 0`.
    pub fn ratio(numer: i64, denom: i64) -> Self {
        Value::Exact(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Value::Exact(_))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Value::Exact(r) => r.is_zero(),
            Value::Approx(x) => *x == 0.0,
        }
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Value::Exact(r) => r.is_negative(),
            Value::Approx(x) => *x < 0.0,
        }
    }

    pub fn is_positive(&self) -> bool {
        match self {
            Value::Exact(r) => r.is_positive(),
            Value::Approx(x) => *x > 0.0,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Value::Approx(x) => *x,
        }
    }

    /// Forgets exactness.
    pub fn to_approx(&self) -> Value {
        Value::Approx(self.to_f64())
    }

    pub fn as_exact(&self) -> Option<&BigRational> {
        match self {
            Value::Exact(r) => Some(r),
            Value::Approx(_) => None,
        }
    }

    /// True if the value is exact and its reduced denominator is at most
    /// `bound`. Approximate values never exceed a bound.
    pub fn denominator_within(&self, bound: u64) -> bool {
        match self {
            Value::Exact(r) => r.denom() <= &BigInt::from(bound),
            Value::Approx(_) => true,
        }
    }

    pub fn abs(&self) -> Value {
        match self {
            Value::Exact(r) => Value::Exact(r.abs()),
            Value::Approx(x) => Value::Approx(x.abs()),
        }
    }

    /// Equality up to `tol` when either side is approximate; exact equality
    /// when both sides are rational.
    pub fn approx_eq(&self, other: &Value, tol: f64) -> bool {
        match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => a == b,
            _ => (self.to_f64() - other.to_f64()).abs() <= tol,
        }
    }
}

impl Default for Value {
    fn default() -> Self {
        Value::zero()
    }
}

macro_rules! value_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for &Value {
            type Output = Value;
            fn $method(self, rhs: &Value) -> Value {
                match (self, rhs) {
                    (Value::Exact(a), Value::Exact(b)) => Value::Exact(a.$method(b)),
                    _ => Value::Approx(self.to_f64().$method(rhs.to_f64())),
                }
            }
        }
        impl $trait for Value {
            type Output = Value;
            fn $method(self, rhs: Value) -> Value {
                (&self).$method(&rhs)
            }
        }
    };
}

value_binop!(Add, add);
value_binop!(Sub, sub);
value_binop!(Mul, mul);
value_binop!(Div, div);

impl AddAssign<&Value> for Value {
    fn add_assign(&mut self, rhs: &Value) {
        match (self, rhs) {
            (Value::Exact(a), Value::Exact(b)) => *a += b,
            (Value::Approx(a), Value::Approx(b)) => *a += b,
            (slot, rhs) => *slot = Value::Approx(slot.to_f64() + rhs.to_f64()),
        }
    }
}

impl Neg for &Value {
    type Output = Value;
    fn neg(self) -> Value {
        match self {
            Value::Exact(r) => Value::Exact(-r),
            Value::Approx(x) => Value::Approx(-x),
        }
    }
}

impl Neg for Value {
    type Output = Value;
    fn neg(self) -> Value {
        -&self
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Value {}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Value {
    /// Exact comparison when both sides are rational; `f64` total order
    /// otherwise. Mixing exact and approximate values in one comparison set
    /// is therefore only as precise as `f64`.
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => a.cmp(b),
            _ => self.to_f64().total_cmp(&other.to_f64()),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Exact(r) if r.is_integer() => write!(f, "{}", r.numer()),
            Value::Exact(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Value::Approx(x) => write!(f, "{x}"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("cannot parse {0:?} as a number")]
pub struct ParseValueError(String);

impl FromStr for Value {
    type Err = ParseValueError;

    /// `"p/q"` and plain integers parse as exact rationals; anything with a
    /// decimal point or exponent parses as `f64`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some((num, den)) = s.split_once('/') {
            let num = BigInt::from_str(num.trim()).map_err(|_| ParseValueError(s.into()))?;
            let den = BigInt::from_str(den.trim()).map_err(|_| ParseValueError(s.into()))?;
            if den.is_zero() {
                return Err(ParseValueError(s.into()));
            }
            return Ok(Value::Exact(BigRational::new(num, den)));
        }
        if let Ok(int) = BigInt::from_str(s) {
            return Ok(Value::Exact(BigRational::from_integer(int)));
        }
        s.parse::<f64>()
            .map(Value::Approx)
            .map_err(|_| ParseValueError(s.into()))
    }
}

impl Serialize for Value {
    /// Exact values serialize as `"p/q"` strings (lossless); approximate
    /// values as JSON numbers.
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Exact(_) => serializer.serialize_str(&self.to_string()),
            Value::Approx(x) => serializer.serialize_f64(*x),
        }
    }
}
