//! Logit-scale heuristics for pretest and posttest probabilities.
//!
//! McGee's rule replaces the exact odds update by a straight line on the
//! probability scale, `Δp ≈ slope · ln κ`. The same slope, applied to the
//! product of the likelihood ratios of the findings already present (signs,
//! symptoms, risk factors), bounds the pretest probability from below.
//!
//! Two constants are carried side by side. The slope 0.22 (divisor ≈ 4.545)
//! reproduces the posttest table; the rounded divisor 5 reproduces the
//! pretest bound table. [`HeuristicConstant::default`] holds both.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probability::Probability;
use crate::roots::bisect;
use crate::scalar::{clamp_unit, Real};
use crate::screening::{posttest_exact, CurveSeries, LikelihoodRatio};

/// Slope of McGee's linear approximation.
pub const MCGEE_SLOPE: f64 = 0.22;
/// Rounded divisor used for pretest bounds.
pub const DISPLAY_DIVISOR: f64 = 5.0;

/// Lower edge of the pretest range where McGee's rule is considered usable.
pub const MCGEE_DOMAIN_LO: f64 = 0.1;
pub const MCGEE_DOMAIN_HI: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeuristicConstant<T> {
    /// Probability change per unit of `ln κ` in McGee's rule.
    pub slope: T,
    /// `1 / slope`.
    pub divisor: T,
    /// Divisor applied to `ln ∏κθ` for pretest bounds.
    pub display_divisor: T,
}

impl<T: Real> Default for HeuristicConstant<T> {
    fn default() -> Self {
        let slope = T::lit(MCGEE_SLOPE);
        Self {
            slope,
            divisor: T::one() / slope,
            display_divisor: T::lit(DISPLAY_DIVISOR),
        }
    }
}

impl<T: Real> HeuristicConstant<T> {
    /// One divisor for everything: slope `1/d`, divisor and display divisor `d`.
    pub fn single(divisor: T) -> Result<Self> {
        if !(divisor > T::zero() && divisor.is_finite()) {
            return Err(Error::out_of_range("constant", divisor.as_f64(), "expected a positive divisor"));
        }
        Ok(Self {
            slope: T::one() / divisor,
            divisor,
            display_divisor: divisor,
        })
    }

    /// Slope 0.22 everywhere (divisor ≈ 4.545).
    pub fn mcgee() -> Self {
        let slope = T::lit(MCGEE_SLOPE);
        Self {
            slope,
            divisor: T::one() / slope,
            display_divisor: T::one() / slope,
        }
    }

    /// Divisor 5 everywhere.
    pub fn rounded() -> Self {
        Self::single(T::lit(DISPLAY_DIVISOR)).expect("positive divisor")
    }
}

/// Named presets accepted on the command line and over HTTP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ConstantChoice {
    /// Slope 0.22 for posttest rules, divisor 5 for pretest bounds.
    #[default]
    #[serde(rename = "default")]
    Default,
    #[serde(rename = "4.54")]
    Mcgee,
    #[serde(rename = "5")]
    Rounded,
}

impl ConstantChoice {
    pub fn constant<T: Real>(self) -> HeuristicConstant<T> {
        match self {
            ConstantChoice::Default => HeuristicConstant::default(),
            ConstantChoice::Mcgee => HeuristicConstant::mcgee(),
            ConstantChoice::Rounded => HeuristicConstant::rounded(),
        }
    }
}

impl std::str::FromStr for ConstantChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "default" => Ok(Self::Default),
            "4.54" | "4.5454" | "0.22" => Ok(Self::Mcgee),
            "5" | "5.0" | "0.2" => Ok(Self::Rounded),
            other => Err(Error::out_of_range(
                "constant",
                other.parse().unwrap_or(f64::NAN),
                "expected 4.54, 5 or default",
            )),
        }
    }
}

/// A sign, symptom or risk factor with its likelihood ratio.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Finding<T> {
    pub label: String,
    pub kappa: T,
}

impl<T: Real> Finding<T> {
    pub fn new(label: impl Into<String>, kappa: T) -> Result<Self> {
        LikelihoodRatio::named("kappa", kappa)?;
        Ok(Self {
            label: label.into(),
            kappa,
        })
    }
}

/// Findings present in an encounter plus an optional baseline prevalence ε.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct FindingSet<T> {
    pub findings: Vec<Finding<T>>,
    pub baseline_prevalence: Option<Probability<T>>,
}

impl<T: Real> FindingSet<T> {
    pub fn new(findings: Vec<Finding<T>>) -> Self {
        Self {
            findings,
            baseline_prevalence: None,
        }
    }

    /// Findings with positional labels `f1, f2, ...`.
    pub fn from_kappas(kappas: &[T]) -> Result<Self> {
        let findings = kappas
            .iter()
            .enumerate()
            .map(|(i, &k)| Finding::new(format!("f{}", i + 1), k))
            .collect::<Result<_>>()?;
        Ok(Self::new(findings))
    }

    pub fn with_baseline(mut self, eps: Probability<T>) -> Self {
        self.baseline_prevalence = Some(eps);
        self
    }

    /// `ln ∏κθ`, summed in label order so permutations give identical bits.
    pub fn ln_product(&self) -> T {
        let mut ordered: Vec<&Finding<T>> = self.findings.iter().collect();
        ordered.sort_by(|x, y| {
            x.label
                .cmp(&y.label)
                .then_with(|| x.kappa.partial_cmp(&y.kappa).unwrap_or(std::cmp::Ordering::Equal))
        });
        ordered.iter().fold(T::zero(), |acc, f| acc + f.kappa.ln())
    }

    pub fn product(&self) -> T {
        self.ln_product().exp()
    }
}

/// A heuristic value clamped into `[0, 1]`, with the raw value kept.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Clamped<T> {
    pub value: Probability<T>,
    pub raw: T,
    pub clamped: bool,
}

impl<T: Real> Clamped<T> {
    fn from_raw(raw: T) -> Self {
        let value = Probability::saturating(raw);
        Self {
            value,
            raw,
            clamped: value.value() != raw,
        }
    }
}

/// McGee's approximation to a posttest probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McgeeEstimate<T> {
    pub posttest: Clamped<T>,
    /// Pretest probability outside `[0.1, 0.9]`, where the rule drifts.
    pub out_of_domain: bool,
}

/// Change in probability attributed to κ: `ln κ · slope`.
pub fn mcgee_delta<T: Real>(kappa: T, c: &HeuristicConstant<T>) -> T {
    kappa.ln() * c.slope
}

pub fn mcgee_posttest<T: Real>(pretest: Probability<T>, kappa: T, c: &HeuristicConstant<T>) -> McgeeEstimate<T> {
    let phi = pretest.value();
    McgeeEstimate {
        posttest: Clamped::from_raw(phi + mcgee_delta(kappa, c)),
        out_of_domain: phi < T::lit(MCGEE_DOMAIN_LO) || phi > T::lit(MCGEE_DOMAIN_HI),
    }
}

/// Lower bound on the pretest probability: `ln(∏κθ) / display_divisor + ε`.
pub fn pretest_min_bound<T: Real>(fs: &FindingSet<T>, c: &HeuristicConstant<T>) -> Clamped<T> {
    let eps = fs.baseline_prevalence.map_or(T::zero(), |e| e.value());
    Clamped::from_raw(fs.ln_product() / c.display_divisor + eps)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PretestEstimate<T> {
    pub min_bound: Probability<T>,
    pub max_bound: Probability<T>,
    /// Midpoint of the range, `(1 + min) / 2`.
    pub mean: Probability<T>,
    pub kappa_product: T,
    /// The lower bound before clamping.
    pub raw_min: T,
    pub clamped: bool,
    pub constant_used: HeuristicConstant<T>,
}

impl<T: Real> PretestEstimate<T> {
    /// Width of the range `[min, max]`.
    pub fn range(&self) -> T {
        self.max_bound.value() - self.min_bound.value()
    }
}

pub fn pretest_estimate<T: Real>(fs: &FindingSet<T>, c: &HeuristicConstant<T>) -> PretestEstimate<T> {
    let min = pretest_min_bound(fs, c);
    let mean = (T::one() + min.value.value()) / T::lit(2.0);
    PretestEstimate {
        min_bound: min.value,
        max_bound: Probability::one(),
        mean: Probability::saturating(mean),
        kappa_product: fs.product(),
        raw_min: min.raw,
        clamped: min.clamped,
        constant_used: *c,
    }
}

/// κ that McGee's rule needs to lift `pretest` to `target`:
/// `exp(divisor · (target - pretest))`.
pub fn required_lr<T: Real>(
    pretest: Probability<T>,
    target: Probability<T>,
    c: &HeuristicConstant<T>,
) -> Result<LikelihoodRatio<T>> {
    if target < pretest {
        return Err(Error::InvalidTarget {
            pretest: pretest.value().as_f64(),
            target: target.value().as_f64(),
        });
    }
    Ok(LikelihoodRatio::Finite((c.divisor * (target.value() - pretest.value())).exp()))
}

/// Pretest probability that McGee's rule lifts to 0.5, over a κ grid:
/// `0.5 - ln κ · slope`, clamped.
pub fn tipping_curve<T: Real>(c: &HeuristicConstant<T>, kappas: &[T]) -> Result<CurveSeries<T>> {
    if let Some(bad) = kappas.iter().find(|k| !(**k > T::zero() && k.is_finite())) {
        return Err(Error::out_of_range("kappa", bad.as_f64(), "expected finite likelihood ratios > 0"));
    }
    if kappas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::out_of_range("kappa", f64::NAN, "kappa grid must be strictly increasing"));
    }
    let half = T::lit(0.5);
    Ok(CurveSeries {
        x_label: "kappa".into(),
        y_label: "pretest_for_half".into(),
        points: kappas.iter().map(|&k| (k, clamp_unit(half - mcgee_delta(k, c)))).collect(),
    })
}

/// `ln κ / display_divisor - 1 / (1 + √κ)`: the pretest lower bound minus
/// the prevalence threshold of a test with the same κ.
pub fn threshold_crossing_objective<T: Real>(kappa: T, c: &HeuristicConstant<T>) -> T {
    kappa.ln() / c.display_divisor - T::one() / (T::one() + kappa.sqrt())
}

/// κ at which the pretest lower bound meets the prevalence threshold curve,
/// by bisection on `(1, 100)`.
pub fn threshold_crossing_kappa<T: Real>(c: &HeuristicConstant<T>) -> Result<T> {
    bisect(
        |k| threshold_crossing_objective(k, c),
        T::one(),
        T::lit(100.0),
        T::lit(1e-12),
        T::zero(),
    )
    .map(|r| r.x)
    .ok_or(Error::out_of_range("constant", c.display_divisor.as_f64(), "no crossing on (1, 100)"))
}

/// Medow–Lucey qualitative pretest categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskCategory {
    VeryUnlikely,
    Unlikely,
    Uncertain,
    Likely,
    VeryLikely,
}

impl RiskCategory {
    pub const ALL: [RiskCategory; 5] = [
        RiskCategory::VeryUnlikely,
        RiskCategory::Unlikely,
        RiskCategory::Uncertain,
        RiskCategory::Likely,
        RiskCategory::VeryLikely,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RiskCategory::VeryUnlikely => "very unlikely",
            RiskCategory::Unlikely => "unlikely",
            RiskCategory::Uncertain => "uncertain",
            RiskCategory::Likely => "likely",
            RiskCategory::VeryLikely => "very likely",
        }
    }

    /// Half-open bounds `[lo, hi)`; the top category is closed at 1.
    /// Printed gaps (33–34%, 66–67%, 90%) are split at their midpoints.
    pub fn bounds(self) -> (f64, f64) {
        match self {
            RiskCategory::VeryUnlikely => (0.0, 0.10),
            RiskCategory::Unlikely => (0.10, 0.335),
            RiskCategory::Uncertain => (0.335, 0.665),
            RiskCategory::Likely => (0.665, 0.905),
            RiskCategory::VeryLikely => (0.905, 1.0),
        }
    }

    fn index(self) -> usize {
        self as usize
    }

    pub fn shifted(self, up: bool) -> Self {
        let i = self.index();
        let j = if up { (i + 1).min(4) } else { i.saturating_sub(1) };
        Self::ALL[j]
    }
}

impl fmt::Display for RiskCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for RiskCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['_', '-'], " ");
        RiskCategory::ALL
            .into_iter()
            .find(|c| c.name() == key)
            .ok_or(Error::out_of_range("category", f64::NAN, "expected one of the five Medow-Lucey categories"))
    }
}

pub fn medow_lucey_category<T: Real>(p: Probability<T>) -> RiskCategory {
    let x = p.value().as_f64();
    RiskCategory::ALL
        .into_iter()
        .find(|c| x < c.bounds().1)
        .unwrap_or(RiskCategory::VeryLikely)
}

/// One category up after a positive result, one down after a negative.
pub fn medow_lucey_update(cat: RiskCategory, test_positive: bool) -> RiskCategory {
    cat.shifted(test_positive)
}

/// Van den Ende clinical power class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerClass {
    pub name: &'static str,
    pub kappa: f64,
    pub log10_kappa: f64,
}

/// Anchors ordered by `log10 κ`, strongest excluder first.
pub const POWER_CLASSES: [PowerClass; 9] = [
    PowerClass { name: "Very strong excluder", kappa: 0.01, log10_kappa: -2.0 },
    PowerClass { name: "Strong excluder", kappa: 0.03, log10_kappa: -1.5 },
    PowerClass { name: "Good excluder", kappa: 0.1, log10_kappa: -1.0 },
    PowerClass { name: "Weak excluder", kappa: 0.3, log10_kappa: -0.5 },
    PowerClass { name: "Useless", kappa: 1.0, log10_kappa: 0.0 },
    PowerClass { name: "Weak confirmer", kappa: 3.0, log10_kappa: 0.5 },
    PowerClass { name: "Good confirmer", kappa: 10.0, log10_kappa: 1.0 },
    PowerClass { name: "Strong confirmer", kappa: 33.0, log10_kappa: 1.5 },
    PowerClass { name: "Very strong confirmer", kappa: 100.0, log10_kappa: 2.0 },
];

/// Nearest anchor on the `log10 κ` scale; ties go to the anchor closer to
/// "Useless".
pub fn clinical_power_class<T: Real>(kappa: T) -> Result<PowerClass> {
    let k = LikelihoodRatio::named("kappa", kappa)?.value().as_f64();
    let x = k.log10();
    let mut best = POWER_CLASSES[4];
    let mut best_dist = (x - best.log10_kappa).abs();
    for class in POWER_CLASSES {
        let dist = (x - class.log10_kappa).abs();
        let closer_to_useless = class.log10_kappa.abs() < best.log10_kappa.abs();
        if dist < best_dist || (dist == best_dist && closer_to_useless) {
            best = class;
            best_dist = dist;
        }
    }
    Ok(best)
}

/// Where the audit found its largest gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuditPeak<T> {
    pub error: T,
    pub pretest: T,
    pub kappa: T,
}

/// `|McGee − exact|` over a (φ, κ) grid, row-major in φ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditSurface<T> {
    pub pretest: Vec<T>,
    pub kappa: Vec<T>,
    pub errors: Vec<T>,
    /// Largest error with φ inside `[0.1, 0.9]`, if any grid point is there.
    pub max_in_domain: Option<AuditPeak<T>>,
    pub max_overall: AuditPeak<T>,
}

impl<T: Real> AuditSurface<T> {
    pub fn error_at(&self, i: usize, j: usize) -> T {
        self.errors[i * self.kappa.len() + j]
    }
}

pub fn heuristic_error<T: Real>(pretest: Probability<T>, kappa: T, c: &HeuristicConstant<T>) -> T {
    let approx = mcgee_posttest(pretest, kappa, c).posttest.value.value();
    let exact = posttest_exact(pretest, LikelihoodRatio::Finite(kappa)).value();
    (approx - exact).abs()
}

pub fn heuristic_audit<T: Real>(pretest: &[T], kappa: &[T], c: &HeuristicConstant<T>) -> Result<AuditSurface<T>> {
    if pretest.is_empty() || kappa.is_empty() {
        return Err(Error::out_of_range("grid", 0.0, "audit grids must be non-empty"));
    }
    let phis = pretest
        .iter()
        .map(|&p| {
            let p = Probability::named("pretest", p)?;
            if p.is_interior() {
                Ok(p)
            } else {
                Err(Error::out_of_range("pretest", p.value().as_f64(), "audit grid must lie inside (0, 1)"))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    for &k in kappa {
        LikelihoodRatio::named("kappa", k)?;
    }
    let (lo, hi) = (T::lit(MCGEE_DOMAIN_LO), T::lit(MCGEE_DOMAIN_HI));
    let mut errors = Vec::with_capacity(phis.len() * kappa.len());
    let mut max_overall = AuditPeak {
        error: T::neg_infinity(),
        pretest: T::zero(),
        kappa: T::zero(),
    };
    let mut max_in_domain: Option<AuditPeak<T>> = None;
    for &phi in &phis {
        let in_domain = phi.value() >= lo && phi.value() <= hi;
        for &k in kappa {
            let e = heuristic_error(phi, k, c);
            errors.push(e);
            let peak = AuditPeak {
                error: e,
                pretest: phi.value(),
                kappa: k,
            };
            if e > max_overall.error {
                max_overall = peak;
            }
            if in_domain && max_in_domain.is_none_or(|m| e > m.error) {
                max_in_domain = Some(peak);
            }
        }
    }
    Ok(AuditSurface {
        pretest: pretest.to_vec(),
        kappa: kappa.to_vec(),
        errors,
        max_in_domain,
        max_overall,
    })
}

/// Inclusive arithmetic grid `lo, lo+step, ..., hi` with `round((hi-lo)/step)+1`
/// nodes computed by index (no accumulated drift).
pub fn stepped_grid<T: Real>(lo: T, hi: T, step: T) -> Result<Vec<T>> {
    if !(step > T::zero()) || !(hi >= lo) {
        return Err(Error::out_of_range("step", step.as_f64(), "expected step > 0 and hi >= lo"));
    }
    let count = ((hi - lo) / step).round().to_usize().unwrap_or(0) + 1;
    if count > 50_000_000 {
        return Err(Error::out_of_range("step", step.as_f64(), "grid too large"));
    }
    Ok((0..count)
        .map(|i| if i + 1 == count { hi } else { lo + step * T::count(i as u64) })
        .collect())
}
