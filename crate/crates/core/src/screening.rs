//! Closed-form screening algebra: predictive values, likelihood ratios,
//! the prevalence threshold, exact Bayes updates and the coordinates of the
//! PPV curve and Fagan nomogram.
//!
//! Conventions at the degenerate corners:
//!
//! * a test with specificity 1 and positive sensitivity has an infinite
//!   positive likelihood ratio ([`LikelihoodRatio::Infinite`]);
//! * sensitivity 0 with specificity 1 never produces a positive result and
//!   is rejected wherever it would be used;
//! * `ppv` at zero pretest probability is 0 even when the formula reads 0/0.

use std::fmt;
use std::ops::Mul;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::probability::{inv_logit, logit, Probability};
use crate::scalar::Real;

/// Sensitivity/specificity pair of a binary test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestCharacteristics<T> {
    pub sensitivity: Probability<T>,
    pub specificity: Probability<T>,
}

impl<T: Real> TestCharacteristics<T> {
    pub fn new(sensitivity: T, specificity: T) -> Result<Self> {
        Ok(Self {
            sensitivity: Probability::named("sensitivity", sensitivity)?,
            specificity: Probability::named("specificity", specificity)?,
        })
    }

    /// The perfect test, `a = b = 1`.
    pub fn perfect() -> Self {
        Self {
            sensitivity: Probability::one(),
            specificity: Probability::one(),
        }
    }

    #[inline]
    pub fn sens(&self) -> T {
        self.sensitivity.value()
    }

    #[inline]
    pub fn spec(&self) -> T {
        self.specificity.value()
    }

    pub fn false_positive_rate(&self) -> T {
        T::one() - self.spec()
    }

    /// Youden's J, `a + b - 1`.
    pub fn youden_j(&self) -> T {
        self.sens() + self.spec() - T::one()
    }

    pub fn positive_lr(&self) -> Result<LikelihoodRatio<T>> {
        positive_lr(self)
    }

    fn is_silent(&self) -> bool {
        self.sens() == T::zero() && self.spec() == T::one()
    }
}

/// Positive likelihood ratio κ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LikelihoodRatio<T> {
    Finite(T),
    /// Specificity 1 with positive sensitivity: a positive result is conclusive.
    Infinite,
}

impl<T: Real> LikelihoodRatio<T> {
    /// Validates a user-supplied ratio: finite and strictly positive.
    pub fn new(value: T) -> Result<Self> {
        Self::named("kappa", value)
    }

    pub fn named(field: &'static str, value: T) -> Result<Self> {
        if value > T::zero() && value.is_finite() {
            Ok(Self::Finite(value))
        } else {
            Err(Error::out_of_range(field, value.as_f64(), "expected a finite likelihood ratio > 0"))
        }
    }

    pub fn one() -> Self {
        Self::Finite(T::one())
    }

    /// Numeric value; `+inf` for the infinite marker.
    pub fn value(self) -> T {
        match self {
            Self::Finite(v) => v,
            Self::Infinite => T::infinity(),
        }
    }

    pub fn finite(self) -> Option<T> {
        match self {
            Self::Finite(v) => Some(v),
            Self::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Self::Infinite)
    }

    pub fn ln(self) -> T {
        self.value().ln()
    }
}

impl<T: Real> Mul for LikelihoodRatio<T> {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        match (self, rhs) {
            (Self::Finite(a), Self::Finite(b)) => Self::Finite(a * b),
            _ => Self::Infinite,
        }
    }
}

impl<T: Real> fmt::Display for LikelihoodRatio<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(v) => fmt::Display::fmt(v, f),
            Self::Infinite => f.write_str("infinite"),
        }
    }
}

impl<T: Real + Serialize> Serialize for LikelihoodRatio<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Finite(v) => v.serialize(s),
            Self::Infinite => s.serialize_str("infinite"),
        }
    }
}

/// An ordered series of `(x, y)` points for plotting or export.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveSeries<T> {
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<(T, T)>,
}

impl<T: Real> CurveSeries<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Linear interpolation of `y` at `x`; `None` outside the x range.
    pub fn interpolate(&self, x: T) -> Option<T> {
        let i = self.points.partition_point(|&(px, _)| px < x);
        if i == self.points.len() {
            return None;
        }
        let (x1, y1) = self.points[i];
        if x1 == x {
            return Some(y1);
        }
        if i == 0 {
            return None;
        }
        let (x0, y0) = self.points[i - 1];
        Some(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
    }
}

/// Positive predictive value `aφ / (aφ + (1-b)(1-φ))`.
pub fn ppv<T: Real>(test: &TestCharacteristics<T>, pretest: Probability<T>) -> Result<Probability<T>> {
    if test.is_silent() {
        return Err(Error::DegenerateTest("sensitivity 0 and specificity 1 never yield a positive result"));
    }
    let phi = pretest.value();
    let true_pos = test.sens() * phi;
    let denom = true_pos + test.false_positive_rate() * (T::one() - phi);
    if denom == T::zero() {
        if phi == T::zero() {
            return Ok(Probability::zero());
        }
        return Err(Error::DegenerateTest("no positive results at this pretest probability"));
    }
    Ok(Probability::saturating(true_pos / denom))
}

/// Negative predictive value `b(1-φ) / (b(1-φ) + (1-a)φ)`.
pub fn npv<T: Real>(test: &TestCharacteristics<T>, pretest: Probability<T>) -> Result<Probability<T>> {
    let phi = pretest.value();
    let true_neg = test.spec() * (T::one() - phi);
    let denom = true_neg + (T::one() - test.sens()) * phi;
    if denom == T::zero() {
        if phi == T::zero() {
            return Ok(Probability::one());
        }
        return Err(Error::DegenerateTest("no negative results at this pretest probability"));
    }
    Ok(Probability::saturating(true_neg / denom))
}

/// Positive likelihood ratio `a / (1 - b)`.
pub fn positive_lr<T: Real>(test: &TestCharacteristics<T>) -> Result<LikelihoodRatio<T>> {
    if test.is_silent() {
        return Err(Error::UndefinedRatio);
    }
    let fpr = test.false_positive_rate();
    if fpr == T::zero() {
        Ok(LikelihoodRatio::Infinite)
    } else {
        // a = 0 gives κ = 0: a test that never fires on the diseased.
        Ok(LikelihoodRatio::Finite(test.sens() / fpr))
    }
}

/// Prevalence threshold `√(1-b) / (√a + √(1-b))`, the pretest probability
/// below which the PPV curve falls away steeply.
pub fn prevalence_threshold<T: Real>(test: &TestCharacteristics<T>) -> Result<Probability<T>> {
    let root_fpr = test.false_positive_rate().sqrt();
    let denom = test.sens().sqrt() + root_fpr;
    if denom == T::zero() {
        return Err(Error::DegenerateTest("prevalence threshold undefined for sensitivity 0 and specificity 1"));
    }
    Ok(Probability::saturating(root_fpr / denom))
}

/// PPV at the prevalence threshold, `√(a/(1-b)) · φe`.
pub fn ppv_at_threshold<T: Real>(test: &TestCharacteristics<T>) -> Result<Probability<T>> {
    if test.spec() == T::one() {
        return Err(Error::DegenerateTest("likelihood ratio is infinite at specificity 1"));
    }
    let threshold = prevalence_threshold(test)?.value();
    let root_kappa = (test.sens() / test.false_positive_rate()).sqrt();
    Ok(Probability::saturating(root_kappa * threshold))
}

/// Prevalence threshold written in terms of κ alone: `1 / (1 + √κ)`.
pub fn threshold_from_lr<T: Real>(kappa: LikelihoodRatio<T>) -> Probability<T> {
    match kappa {
        LikelihoodRatio::Finite(k) => Probability::saturating(T::one() / (T::one() + k.sqrt())),
        LikelihoodRatio::Infinite => Probability::zero(),
    }
}

/// Exact Bayes update of a pretest probability by a likelihood ratio,
/// `κφ / (1 + (κ-1)φ)`.
pub fn posttest_exact<T: Real>(pretest: Probability<T>, kappa: LikelihoodRatio<T>) -> Probability<T> {
    let phi = pretest.value();
    match kappa {
        LikelihoodRatio::Infinite => {
            if phi > T::zero() {
                Probability::one()
            } else {
                Probability::zero()
            }
        }
        LikelihoodRatio::Finite(k) => {
            if phi == T::one() {
                return Probability::one();
            }
            // (1-φ) + κφ avoids the cancellation in 1 + (κ-1)φ for small κ.
            let denom = (T::one() - phi) + k * phi;
            Probability::saturating(k * phi / denom)
        }
    }
}

/// Applies several likelihood ratios in sequence.
pub fn posttest_sequential<T: Real>(
    pretest: Probability<T>,
    kappas: impl IntoIterator<Item = LikelihoodRatio<T>>,
) -> Probability<T> {
    kappas.into_iter().fold(pretest, posttest_exact)
}

/// PPV against pretest probability on a uniform grid over `[0, 1]`
/// (both endpoints included).
pub fn ppv_curve<T: Real>(test: &TestCharacteristics<T>, grid_size: usize) -> Result<CurveSeries<T>> {
    if grid_size < 2 {
        return Err(Error::out_of_range("grid_size", grid_size as f64, "expected at least 2 points"));
    }
    let last = T::count(grid_size as u64 - 1);
    let points = (0..grid_size)
        .map(|i| {
            let phi = if i + 1 == grid_size {
                T::one()
            } else {
                T::count(i as u64) / last
            };
            ppv(test, Probability::saturating(phi)).map(|y| (phi, y.value()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CurveSeries {
        x_label: "pretest_probability".into(),
        y_label: "ppv".into(),
        points,
    })
}

/// Ordinates of the straight line drawn on a Fagan nomogram.
///
/// The left axis is inverted, as on the printed nomogram: it carries
/// `-logit(pretest)`. The middle axis carries `ln κ` and the right axis
/// `logit(posttest)`, so `right = -left + middle`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FaganLine<T> {
    pub left: T,
    pub middle: T,
    pub right: T,
    pub posttest: Probability<T>,
}

pub fn fagan_coordinates<T: Real>(pretest: Probability<T>, kappa: LikelihoodRatio<T>) -> Result<FaganLine<T>> {
    let k = match kappa {
        LikelihoodRatio::Finite(k) if k > T::zero() => k,
        _ => {
            return Err(Error::out_of_range(
                "kappa",
                kappa.value().as_f64(),
                "nomogram needs a finite likelihood ratio > 0",
            ))
        }
    };
    let pre_logit = logit(pretest)?;
    let posttest = posttest_exact(pretest, kappa);
    Ok(FaganLine {
        left: -pre_logit,
        middle: k.ln(),
        right: logit(posttest)?,
        posttest,
    })
}

/// One labelled tick on a nomogram axis, positioned on that axis' own scale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxisTick<T> {
    pub label: f64,
    pub position: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NomogramAxes<T> {
    pub pretest: Vec<AxisTick<T>>,
    pub likelihood_ratio: Vec<AxisTick<T>>,
    pub posttest: Vec<AxisTick<T>>,
}

const PROBABILITY_TICKS: [f64; 17] = [
    0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.8, 0.9, 0.95, 0.98, 0.99, 0.999,
];
const LR_TICKS: [f64; 19] = [
    0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0,
    500.0, 1000.0,
];

/// Standard tick marks for the three nomogram axes, on the same scales as
/// [`FaganLine`].
pub fn nomogram_axes<T: Real>() -> NomogramAxes<T> {
    let prob_axis = |sign: T| -> Vec<AxisTick<T>> {
        PROBABILITY_TICKS
            .iter()
            .map(|&p| AxisTick {
                label: p,
                position: sign * logit(Probability::saturating(T::lit(p))).expect("interior tick"),
            })
            .collect()
    };
    NomogramAxes {
        pretest: prob_axis(-T::one()),
        likelihood_ratio: LR_TICKS
            .iter()
            .map(|&k| AxisTick {
                label: k,
                position: T::lit(k).ln(),
            })
            .collect(),
        posttest: prob_axis(T::one()),
    }
}

/// Pretest probability recovered from a posttest value and a κ, by running
/// the odds update backwards.
pub fn pretest_from_posttest<T: Real>(posttest: Probability<T>, kappa: LikelihoodRatio<T>) -> Result<Probability<T>> {
    let k = kappa
        .finite()
        .filter(|k| *k > T::zero())
        .ok_or(Error::out_of_range("kappa", kappa.value().as_f64(), "expected a finite likelihood ratio > 0"))?;
    Ok(inv_logit(logit(posttest)? - k.ln()))
}
