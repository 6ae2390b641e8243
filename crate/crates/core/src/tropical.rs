//! The min-plus carrier `R ∪ {+∞}`.
//!
//! Tropical addition is `min`, tropical multiplication is ordinary `+`,
//! `+∞` is the additive identity and `0` the multiplicative one. The
//! max-times picture `R_{≥0}` is reached through `x ↦ e^{-x}`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An extended real in `R ∪ {+∞}`; never NaN, never `-∞`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct TropicalValue(f64);

impl TropicalValue {
    /// Additive identity.
    pub const INFINITY: TropicalValue = TropicalValue(f64::INFINITY);
    /// Multiplicative identity.
    pub const ONE: TropicalValue = TropicalValue(0.0);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() {
            Err(Error::NotANumber)
        } else if value == f64::NEG_INFINITY {
            Err(Error::NegativeInfinity)
        } else {
            Ok(TropicalValue(value))
        }
    }

    /// Caller guarantees the value is neither NaN nor `-∞`.
    pub(crate) fn from_raw(value: f64) -> Self {
        debug_assert!(!value.is_nan() && value != f64::NEG_INFINITY);
        TropicalValue(value)
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn is_infinite(self) -> bool {
        self.0 == f64::INFINITY
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }
}

impl TryFrom<f64> for TropicalValue {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        TropicalValue::new(value)
    }
}

impl From<TropicalValue> for f64 {
    fn from(v: TropicalValue) -> f64 {
        v.0
    }
}

impl Eq for TropicalValue {}

impl PartialOrd for TropicalValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// Numeric order of the underlying reals. The semiring order is the reverse;
// see `semiring_leq`.
impl Ord for TropicalValue {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl fmt::Display for TropicalValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// `x ⊕ y = min(x, y)`.
#[inline]
pub fn tropical_add(x: TropicalValue, y: TropicalValue) -> TropicalValue {
    if y.0 < x.0 {
        y
    } else {
        x
    }
}

/// `x ⊙ y = x + y`, with `+∞` absorbing. Finite overflow is an error.
pub fn tropical_mul(x: TropicalValue, y: TropicalValue) -> Result<TropicalValue> {
    if x.is_infinite() || y.is_infinite() {
        return Ok(TropicalValue::INFINITY);
    }
    let sum = x.0 + y.0;
    if sum.is_finite() {
        Ok(TropicalValue(sum))
    } else {
        Err(Error::Overflow("tropical_mul"))
    }
}

/// The `r`-th Frobenius power, `r·x` in min-plus notation.
///
/// `frobenius(∞, 0) = 0`: the zeroth power of anything is the unit.
pub fn frobenius(x: TropicalValue, r: f64) -> Result<TropicalValue> {
    if r.is_nan() || r < 0.0 || r.is_infinite() {
        return Err(Error::domain("r", r, "[0, ∞)"));
    }
    if r == 0.0 {
        return Ok(TropicalValue::ONE);
    }
    if x.is_infinite() {
        return Ok(TropicalValue::INFINITY);
    }
    let scaled = r * x.0;
    if scaled.is_finite() {
        Ok(TropicalValue(scaled))
    } else {
        Err(Error::Overflow("frobenius"))
    }
}

/// Semiring order: `x ≤ y ⇔ x ⊕ y = y`, i.e. `y ≤ x` as reals.
#[inline]
pub fn semiring_leq(x: TropicalValue, y: TropicalValue) -> bool {
    tropical_add(x, y) == y
}

/// The `-log` isomorphism read backwards: `x ↦ e^{-x}`, `∞ ↦ 0`.
#[inline]
pub fn to_max_times(x: TropicalValue) -> f64 {
    (-x.0).exp()
}

/// Inverse of [`to_max_times`] on `[0, ∞)`.
pub fn from_max_times(y: f64) -> Result<TropicalValue> {
    if y.is_nan() || y < 0.0 {
        return Err(Error::domain("y", y, "[0, ∞)"));
    }
    let x = -y.ln();
    TropicalValue::new(x)
}
