//! Probabilities, odds and the logit scale.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// A real number in the closed unit interval.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct Probability<T>(T);

impl<T: Real> Probability<T> {
    /// Validates `value` against `[0, 1]`. NaN is rejected.
    pub fn new(value: T) -> Result<Self> {
        Self::named("probability", value)
    }

    /// Like [`Probability::new`], reporting `field` in the error.
    pub fn named(field: &'static str, value: T) -> Result<Self> {
        if value >= T::zero() && value <= T::one() {
            Ok(Self(value))
        } else {
            Err(Error::out_of_range(field, value.as_f64(), "expected a value in [0, 1]"))
        }
    }

    /// Clamps into `[0, 1]`. NaN maps to 0.
    pub fn saturating(value: T) -> Self {
        Self(crate::scalar::clamp_unit(value))
    }

    pub fn zero() -> Self {
        Self(T::zero())
    }

    pub fn one() -> Self {
        Self(T::one())
    }

    #[inline]
    pub fn value(self) -> T {
        self.0
    }

    pub fn complement(self) -> Self {
        Self(T::one() - self.0)
    }

    pub fn is_interior(self) -> bool {
        self.0 > T::zero() && self.0 < T::one()
    }

    pub fn odds(self) -> Odds<T> {
        Odds::from_probability(self)
    }
}

impl<T: Real> fmt::Display for Probability<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

/// Odds `p / (1 - p)`; infinite at `p = 1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Odds<T>(T);

impl<T: Real> Odds<T> {
    pub fn new(value: T) -> Result<Self> {
        if value >= T::zero() {
            Ok(Self(value))
        } else {
            Err(Error::out_of_range("odds", value.as_f64(), "expected non-negative odds"))
        }
    }

    pub fn from_probability(p: Probability<T>) -> Self {
        let p = p.value();
        if p == T::one() {
            Self(T::infinity())
        } else {
            Self(p / (T::one() - p))
        }
    }

    pub fn to_probability(self) -> Probability<T> {
        if self.0.is_infinite() {
            Probability::one()
        } else {
            Probability::saturating(self.0 / (T::one() + self.0))
        }
    }

    #[inline]
    pub fn value(self) -> T {
        self.0
    }
}

/// Log-odds `ln(p / (1 - p))`. Undefined at 0 and 1.
pub fn logit<T: Real>(p: Probability<T>) -> Result<T> {
    if !p.is_interior() {
        return Err(Error::BoundaryLogit(p.value().as_f64()));
    }
    let p = p.value();
    // ln(p) - ln1p(-p) keeps precision for p near 0 or 1.
    Ok(p.ln() - (-p).ln_1p())
}

/// Inverse of [`logit`]; infinite arguments map to the interval ends.
pub fn inv_logit<T: Real>(x: T) -> Probability<T> {
    let one = T::one();
    let v = if x >= T::zero() {
        one / (one + (-x).exp())
    } else {
        let e = x.exp();
        e / (one + e)
    };
    Probability::saturating(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn p(x: f64) -> Probability<f64> {
        Probability::new(x).unwrap()
    }

    #[test]
    fn rejects_outside_unit_interval() {
        assert!(Probability::new(-1e-12_f64).is_err());
        assert!(Probability::new(1.0000001_f64).is_err());
        assert!(Probability::new(f64::NAN).is_err());
        let err = Probability::named("sens", 2.0_f64).unwrap_err();
        assert_eq!(err.field(), Some("sens"));
    }

    #[test]
    fn logit_midpoint_and_symmetry() {
        assert_eq!(logit(p(0.5)).unwrap(), 0.0);
        assert_eq!(inv_logit(0.0_f64).value(), 0.5);
        assert_abs_diff_eq!(logit(p(0.55)).unwrap(), -logit(p(0.45)).unwrap(), epsilon = 1e-15);
        assert!(logit(p(0.3)).unwrap() < 0.0);
        // paper-quoted pair: logits of about +-0.2 for 0.55 / 0.45
        assert_abs_diff_eq!(logit(p(0.55)).unwrap(), 0.2007, epsilon = 1e-4);
    }

    #[test]
    fn logit_rejects_boundaries() {
        assert_eq!(logit(p(0.0)), Err(Error::BoundaryLogit(0.0)));
        assert_eq!(logit(p(1.0)), Err(Error::BoundaryLogit(1.0)));
    }

    #[test]
    fn odds_edges() {
        assert!(p(1.0).odds().value().is_infinite());
        assert_eq!(p(0.0).odds().value(), 0.0);
        assert_eq!(Odds::new(f64::INFINITY).unwrap().to_probability().value(), 1.0);
        assert_abs_diff_eq!(p(0.2).odds().value(), 0.25, epsilon = 1e-15);
        assert!(Odds::new(-1.0_f64).is_err());
    }

    #[test]
    fn inv_logit_extremes() {
        assert_eq!(inv_logit(f64::INFINITY).value(), 1.0);
        assert_eq!(inv_logit(f64::NEG_INFINITY).value(), 0.0);
        assert!(inv_logit(-800.0_f64).value() >= 0.0);
    }

    #[test]
    fn works_in_f32() {
        let q = Probability::new(0.25_f32).unwrap();
        let back = inv_logit(logit(q).unwrap());
        assert!((back.value() - 0.25).abs() < 1e-6);
    }
}
