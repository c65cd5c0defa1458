//! Request types and executors shared by the command line and HTTP front
//! ends, plus the JSON output envelope.
//!
//! Each request is a plain serde struct with raw `f64` fields; validation
//! happens when it runs, so range errors carry the engine's field names.
//! Both front ends build the same [`Envelope`] from the same executor, which
//! keeps their numbers identical.

use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::estimators::{
    baxter_posterior_known, baxter_posterior_unknown, beta_moments, beta_pdf, beta_update, rogan_gladen,
    rogan_gladen_at_level, validation_posteriors, BetaParams, CohortObservation, TestPriors, UnknownGrid,
    ValidationData, DEFAULT_AB_GRID, DEFAULT_LEVEL, DEFAULT_PHI_GRID,
};
use crate::heuristics::{
    clinical_power_class, heuristic_audit, mcgee_posttest, medow_lucey_category, medow_lucey_update, pretest_estimate,
    required_lr, stepped_grid, ConstantChoice, Finding, FindingSet, RiskCategory,
};
use crate::probability::Probability;
use crate::quadrature::{posterior_summary, DensityGrid};
use crate::screening::{
    fagan_coordinates, nomogram_axes, npv, posttest_exact, posttest_sequential, ppv, ppv_at_threshold, ppv_curve,
    prevalence_threshold, CurveSeries, LikelihoodRatio, TestCharacteristics,
};
use crate::simulator::{coverage_experiment, simulate, SimConfig};
use crate::tables::{render_table3, render_table4, table3, table4};

/// Version of the envelope layout.
pub const SCHEMA_VERSION: &str = "1.0";
/// Densities are decimated to at most this many points for transport.
pub const MAX_DENSITY_POINTS: usize = 512;

/// Machine-readable output of every command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub schema_version: String,
    pub command: String,
    pub version: String,
    pub inputs: Value,
    pub result: Value,
    pub warnings: Vec<String>,
}

impl Envelope {
    /// Pretty JSON with keys sorted at every level. Parsing this text and
    /// printing it again gives the same bytes.
    pub fn to_canonical_json(&self) -> String {
        canonical_json(&serde_json::to_value(self).expect("envelope is plain data"))
    }
}

/// Sorted-key pretty printing of any JSON value.
pub fn canonical_json(v: &Value) -> String {
    // serde_json's default map is ordered by key, so a Value round trip sorts.
    serde_json::to_string_pretty(v).expect("values always serialize")
}

/// Everything a front end needs to present one command run.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub envelope: Envelope,
    /// Curve, density or replicate table for `--csv`.
    pub csv: Option<String>,
    /// Preformatted text that replaces the generic rendering.
    pub text: Option<String>,
}

struct Outcome {
    result: Value,
    warnings: Vec<String>,
    csv: Option<String>,
    text: Option<String>,
}

impl Outcome {
    fn new(result: Value) -> Self {
        Self {
            result,
            warnings: Vec::new(),
            csv: None,
            text: None,
        }
    }

    fn warn(mut self, w: impl Into<String>) -> Self {
        self.warnings.push(w.into());
        self
    }

    fn warn_if(self, cond: bool, w: impl Into<String>) -> Self {
        if cond {
            self.warn(w)
        } else {
            self
        }
    }

    fn csv(mut self, csv: String) -> Self {
        self.csv = Some(csv);
        self
    }
}

/// A runnable request.
pub trait Command: Serialize {
    const NAME: &'static str;

    #[doc(hidden)]
    fn outcome(&self) -> Result<OutcomeHandle>;

    fn run(&self) -> Result<Report> {
        let OutcomeHandle(o) = self.outcome()?;
        Ok(Report {
            envelope: Envelope {
                schema_version: SCHEMA_VERSION.into(),
                command: Self::NAME.into(),
                version: crate::VERSION.into(),
                inputs: serde_json::to_value(self).expect("requests are plain data"),
                result: o.result,
                warnings: o.warnings,
            },
            csv: o.csv,
            text: o.text,
        })
    }
}

#[doc(hidden)]
pub struct OutcomeHandle(Outcome);

impl From<Outcome> for OutcomeHandle {
    fn from(o: Outcome) -> Self {
        OutcomeHandle(o)
    }
}

/// A likelihood ratio as it appears in requests: a number, or the string
/// `"infinite"` for a test with specificity 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KappaValue {
    Finite(f64),
    Infinite,
}

impl KappaValue {
    pub fn validate(self, field: &'static str) -> Result<LikelihoodRatio<f64>> {
        match self {
            KappaValue::Finite(k) => LikelihoodRatio::named(field, k),
            KappaValue::Infinite => Ok(LikelihoodRatio::Infinite),
        }
    }

    fn finite(self, field: &'static str) -> Result<f64> {
        match self {
            KappaValue::Finite(k) => LikelihoodRatio::named(field, k).map(|l| l.value()),
            KappaValue::Infinite => Err(Error::out_of_range(field, f64::INFINITY, "expected a finite likelihood ratio")),
        }
    }
}

impl std::str::FromStr for KappaValue {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinite" | "infinity" => Ok(KappaValue::Infinite),
            other => other
                .parse::<f64>()
                .map(KappaValue::Finite)
                .map_err(|_| format!("expected a number or \"infinite\", got {s:?}")),
        }
    }
}

impl Serialize for KappaValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            KappaValue::Finite(k) => s.serialize_f64(*k),
            KappaValue::Infinite => s.serialize_str("infinite"),
        }
    }
}

impl<'de> Deserialize<'de> for KappaValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(k) => Ok(KappaValue::Finite(k)),
            Raw::Text(s) => s.parse().map_err(de::Error::custom),
        }
    }
}

fn test_of(sensitivity: f64, specificity: f64) -> Result<TestCharacteristics<f64>> {
    TestCharacteristics::new(sensitivity, specificity)
}

fn prob(field: &'static str, v: f64) -> Result<Probability<f64>> {
    Probability::named(field, v)
}

fn level_of(level: f64) -> Result<f64> {
    if level > 0.0 && level < 1.0 {
        Ok(level)
    } else {
        Err(Error::out_of_range("level", level, "expected a value in (0, 1)"))
    }
}

fn to_value<S: Serialize>(s: &S) -> Value {
    serde_json::to_value(s).expect("results are plain data")
}

fn lr_value(k: LikelihoodRatio<f64>) -> Value {
    to_value(&k)
}

/// `{x: [...], y: [...]}` after max-preserving decimation.
fn density_value(d: &DensityGrid<f64>) -> Value {
    let pts = d.downsample(MAX_DENSITY_POINTS);
    json!({
        "points": pts.len(),
        "grid_size": d.len(),
        "x": pts.iter().map(|p| p.0).collect::<Vec<_>>(),
        "y": pts.iter().map(|p| p.1).collect::<Vec<_>>(),
    })
}

fn density_csv(d: &DensityGrid<f64>) -> String {
    series_csv("phi", "density", d.support.iter().copied().zip(d.values.iter().copied()))
}

fn series_csv(x: &str, y: &str, points: impl Iterator<Item = (f64, f64)>) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record([x, y]).expect("in-memory write");
    for (a, b) in points {
        w.write_record([a.to_string(), b.to_string()]).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
}

fn curve_csv(c: &CurveSeries<f64>) -> String {
    series_csv(&c.x_label, &c.y_label, c.points.iter().copied())
}

fn default_level() -> f64 {
    DEFAULT_LEVEL
}

// ---------------------------------------------------------------------------
// closed-form screening

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PpvRequest {
    #[serde(alias = "sens")]
    pub sensitivity: f64,
    #[serde(alias = "spec")]
    pub specificity: f64,
    #[serde(alias = "prevalence", alias = "phi")]
    pub pretest: f64,
}

impl Command for PpvRequest {
    const NAME: &'static str = "ppv";

    fn outcome(&self) -> Result<OutcomeHandle> {
        let test = test_of(self.sensitivity, self.specificity)?;
        let phi = prob("pretest", self.pretest)?;
        let ppv = ppv(&test, phi)?;
        let npv = npv(&test, phi)?;
        let phi_e = prevalence_threshold(&test).ok();
        let below = phi_e.is_some_and(|e| phi < e);
        Ok(Outcome::new(json!({
            "ppv": ppv,
            "npv": npv,
            "positive_lr": test.positive_lr().ok().map(lr_value),
            "prevalence_threshold": phi_e,
            "below_threshold": below,
        }))
        .warn_if(below, "pretest probability is below the prevalence threshold; PPV falls steeply here")
        .into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdRequest {
    #[serde(alias = "sens")]
    pub sensitivity: f64,
    #[serde(alias = "spec")]
    pub specificity: f64,
}

impl Command for ThresholdRequest {
    const NAME: &'static str = "threshold";

    fn outcome(&self) -> Result<OutcomeHandle> {
        let test = test_of(self.sensitivity, self.specificity)?;
        let phi_e = prevalence_threshold(&test)?;
        Ok(Outcome::new(json!({
            "prevalence_threshold": phi_e,
            "ppv_at_threshold": ppv_at_threshold(&test)?,
            "positive_lr": lr_value(test.positive_lr()?),
            "youden_j": test.youden_j(),
        }))
        .into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LrRequest {
    #[serde(alias = "sens")]
    pub sensitivity: f64,
    #[serde(alias = "spec")]
    pub specificity: f64,
}

impl Command for LrRequest {
    const NAME: &'static str = "lr";

    fn outcome(&self) -> Result<OutcomeHandle> {
        let test = test_of(self.sensitivity, self.specificity)?;
        let kappa = test.positive_lr()?;
        let class = match kappa {
            LikelihoodRatio::Finite(k) if k > 0.0 => Some(clinical_power_class(k)?.name),
            LikelihoodRatio::Infinite => Some("Very strong confirmer"),
            _ => None,
        };
        Ok(Outcome::new(json!({
            "positive_lr": lr_value(kappa),
            "ln_positive_lr": kappa.finite().map(f64::ln),
            "power_class": class,
        }))
        .into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PosttestRequest {
    #[serde(alias = "phi")]
    pub pretest: f64,
    /// Likelihood ratios applied in order.
    #[serde(alias = "lr", deserialize_with = "one_or_many")]
    pub kappa: Vec<KappaValue>,
    #[serde(default)]
    pub constant: ConstantChoice,
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<KappaValue>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Many(Vec<KappaValue>),
        One(KappaValue),
    }
    Ok(match Raw::deserialize(d)? {
        Raw::Many(v) => v,
        Raw::One(k) => vec![k],
    })
}

impl Command for PosttestRequest {
    const NAME: &'static str = "posttest";

    fn outcome(&self) -> Result<OutcomeHandle> {
        let phi = prob("pretest", self.pretest)?;
        if self.kappa.is_empty() {
            return Err(Error::out_of_range("kappa", 0.0, "expected at least one likelihood ratio"));
        }
        let kappas = self.kappa.iter().map(|k| k.validate("kappa")).collect::<Result<Vec<_>>>()?;
        let post = posttest_sequential(phi, kappas.iter().copied());
        let combined = kappas.iter().copied().fold(LikelihoodRatio::one(), |a, b| a * b);
        let mut out = json!({
            "posttest": post,
            "combined_lr": lr_value(combined),
        });
        let mut o = Outcome::new(Value::Null);
        if let LikelihoodRatio::Finite(k) = combined {
            if k > 0.0 {
                let m = mcgee_posttest(phi, k, &self.constant.constant());
                let approx = m.posttest.value.value();
                out["mcgee"] = json!({
                    "posttest": approx,
                    "raw": m.posttest.raw,
                    "clamped": m.posttest.clamped,
                    "gap": approx - post.value(),
                });
                o = o
                    .warn_if(m.posttest.clamped, "McGee approximation clamped to [0, 1]")
                    .warn_if(m.out_of_domain, "McGee approximation used outside pretest 0.1-0.9");
            }
        }
        o.result = out;
        Ok(o.into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveRequest {
    #[serde(alias = "sens")]
    pub sensitivity: f64,
    #[serde(alias = "spec")]
    pub specificity: f64,
    #[serde(default = "default_curve_grid")]
    pub grid: usize,
}

fn default_curve_grid() -> usize {
    101
}

impl Command for CurveRequest {
    const NAME: &'static str = "curve";

    fn outcome(&self) -> Result<OutcomeHandle> {
        let test = test_of(self.sensitivity, self.specificity)?;
        if self.grid > 100_000 {
            return Err(Error::out_of_range("grid", self.grid as f64, "expected at most 100000 points"));
        }
        let curve = ppv_curve(&test, self.grid)?;
        Ok(Outcome::new(json!({
            "x_label": curve.x_label,
            "y_label": curve.y_label,
            "x": curve.points.iter().map(|p| p.0).collect::<Vec<_>>(),
            "y": curve.points.iter().map(|p| p.1).collect::<Vec<_>>(),
            "prevalence_threshold": prevalence_threshold(&test).ok(),
        }))
        .csv(curve_csv(&curve))
        .into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NomogramRequest {
    #[serde(alias = "phi")]
    pub pretest: f64,
    #[serde(alias = "lr")]
    pub kappa: KappaValue,
    #[serde(default)]
    pub constant: ConstantChoice,
}

impl Command for NomogramRequest {
    const NAME: &'static str = "nomogram";

    fn outcome(&self) -> Result<OutcomeHandle> {
        let phi = prob("pretest", self.pretest)?;
        let kappa = self.kappa.validate("kappa")?;
        let line = fagan_coordinates(phi, kappa)?;
        let k = kappa.value();
        let m = mcgee_posttest(phi, k, &self.constant.constant());
        Ok(Outcome::new(json!({
            "line": line,
            "exact_posttest": line.posttest,
            "mcgee_posttest": m.posttest.value,
            "gap": m.posttest.value.value() - line.posttest.value(),
            "axes": nomogram_axes::<f64>(),
        }))
        .warn_if(m.out_of_domain, "McGee approximation used outside pretest 0.1-0.9")
        .into())
    }
}

// ---------------------------------------------------------------------------
// prevalence estimators

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoganGladenRequest {
    pub t: u64,
    pub n: u64,
    #[serde(alias = "sens")]
    pub sensitivity: f64,
    #[serde(alias = "spec")]
    pub specificity: f64,
    #[serde(default = "default_level")]
    pub level: f64,
}

impl Command for RoganGladenRequest {
    const NAME: &'static str = "estimate rogan-gladen";

    fn outcome(&self) -> Result<OutcomeHandle> {
        let obs = CohortObservation::new(self.t, self.n)?;
        let test = test_of(self.sensitivity, self.specificity)?;
        let level = level_of(self.level)?;
        // the default level keeps the textbook z = 1.96
        let est = if level == DEFAULT_LEVEL {
            rogan_gladen(&obs, &test)?
        } else {
            rogan_gladen_at_level(&obs, &test, level)?
        };
        Ok(Outcome::new(to_value(&est))
            .warn_if(
                est.clamped,
                format!("clamped: raw estimate {} lies outside [0, 1]", est.raw_point),
            )
            .into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaRequest {
    pub t: u64,
    pub n: u64,
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default = "default_beta_grid")]
    pub grid: usize,
    #[serde(default = "default_level")]
    pub level: f64,
}

fn one() -> f64 {
    1.0
}

fn default_beta_grid() -> usize {
    DEFAULT_PHI_GRID
}

fn check_grid(field: &'static str, g: usize, max: usize) -> Result<()> {
    if g > max {
        Err(Error::out_of_range(field, g as f64, "grid too large"))
    } else {
        Ok(())
    }
}

impl Command for BetaRequest {
    const NAME: &'static str = "estimate beta";

    fn outcome(&self) -> Result<OutcomeHandle> {
        let obs = CohortObservation::new(self.t, self.n)?;
        let prior = BetaParams::new(self.alpha, self.beta)?;
        let level = level_of(self.level)?;
        check_grid("grid", self.grid, 1 << 20)?;
        let post = beta_update(&prior, &obs);
        let density = beta_pdf(&post, self.grid)?;
        let summary = posterior_summary(&density, level)?;
        Ok(Outcome::new(json!({
            "posterior": post,
            "moments": beta_moments(&post),
            "summary": summary,
            "density": density_value(&density),
        }))
        .csv(density_csv(&density))
        .into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaxterRequest {
    pub t: u64,
    pub n: u64,
    #[serde(alias = "sens")]
    pub sensitivity: f64,
    #[serde(alias = "spec")]
    pub specificity: f64,
    #[serde(default = "default_beta_grid")]
    pub grid: usize,
    #[serde(default = "default_level")]
    pub level: f64,
}

impl Command for BaxterRequest {
    const NAME: &'static str = "estimate baxter";

    fn outcome(&self) -> Result<OutcomeHandle> {
        let obs = CohortObservation::new(self.t, self.n)?;
        let test = test_of(self.sensitivity, self.specificity)?;
        let level = level_of(self.level)?;
        check_grid("grid", self.grid, 1 << 20)?;
        let density = baxter_posterior_known(&obs, &test, self.grid)?;
        let summary = posterior_summary(&density, level)?;
        let rg = rogan_gladen(&obs, &test)?;
        Ok(Outcome::new(json!({
            "summary": summary,
            "rogan_gladen": rg,
            "density": density_value(&density),
        }))
        .csv(density_csv(&density))
        .into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaxterUnknownRequest {
    pub t: u64,
    pub n: u64,
    pub t_a: u64,
    pub n_a: u64,
    pub t_b: u64,
    pub n_b: u64,
    #[serde(default = "one")]
    pub alpha_a: f64,
    #[serde(default = "one")]
    pub beta_a: f64,
    #[serde(default = "one")]
    pub alpha_b: f64,
    #[serde(default = "one")]
    pub beta_b: f64,
    #[serde(default = "default_beta_grid")]
    pub grid_phi: usize,
    #[serde(default = "default_ab_grid")]
    pub grid_a: usize,
    #[serde(default = "default_ab_grid")]
    pub grid_b: usize,
    #[serde(default = "default_level")]
    pub level: f64,
}

fn default_ab_grid() -> usize {
    DEFAULT_AB_GRID
}

impl Command for BaxterUnknownRequest {
    const NAME: &'static str = "estimate baxter-unknown";

    fn outcome(&self) -> Result<OutcomeHandle> {
        let obs = CohortObservation::new(self.t, self.n)?;
        let val = ValidationData::new(self.t_a, self.n_a, self.t_b, self.n_b)?;
        let priors = TestPriors {
            sensitivity: BetaParams::new(self.alpha_a, self.beta_a)?,
            specificity: BetaParams::new(self.alpha_b, self.beta_b)?,
        };
        let level = level_of(self.level)?;
        check_grid("grid_phi", self.grid_phi, 1 << 16)?;
        check_grid("grid_a", self.grid_a, 1024)?;
        check_grid("grid_b", self.grid_b, 1024)?;
        let cells = self.grid_phi * self.grid_a * self.grid_b;
        if cells > 1 << 27 {
            return Err(Error::out_of_range("grid_phi", cells as f64, "grid_phi * grid_a * grid_b must be at most 2^27"));
        }
        let grid = UnknownGrid {
            phi: self.grid_phi,
            sensitivity: self.grid_a,
            specificity: self.grid_b,
        };
        let density = baxter_posterior_unknown(&obs, &val, &priors, grid)?;
        let summary = posterior_summary(&density, level)?;
        let (sens, spec) = validation_posteriors(&val, &priors);
        Ok(Outcome::new(json!({
            "summary": summary,
            "sensitivity_posterior": sens,
            "specificity_posterior": spec,
            "density": density_value(&density),
        }))
        .csv(density_csv(&density))
        .into())
    }
}

// ---------------------------------------------------------------------------
// heuristics

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FindingInput {
    pub label: String,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PretestRequest {
    #[serde(default)]
    pub findings: Vec<FindingInput>,
    /// Baseline prevalence ε added after the log-product.
    #[serde(default, alias = "epsilon")]
    pub baseline: Option<f64>,
    #[serde(default)]
    pub constant: ConstantChoice,
    /// Test to compare the pretest range against.
    #[serde(default, alias = "sens")]
    pub sensitivity: Option<f64>,
    #[serde(default, alias = "spec")]
    pub specificity: Option<f64>,
}

impl Command for PretestRequest {
    const NAME: &'static str = "pretest";

    fn outcome(&self) -> Result<OutcomeHandle> {
        let findings = self
            .findings
            .iter()
            .map(|f| Finding::new(f.label.clone(), f.kappa))
            .collect::<Result<Vec<_>>>()?;
        let mut fs = FindingSet::new(findings);
        if let Some(e) = self.baseline {
            fs = fs.with_baseline(prob("baseline", e)?);
        }
        let est = pretest_estimate(&fs, &self.constant.constant());
        let mut result = to_value(&est);
        let mut o = Outcome::new(Value::Null)
            .warn_if(est.clamped, format!("clamped: raw lower bound {} lies outside [0, 1]", est.raw_min))
            .warn_if(fs.findings.is_empty(), "uninformative: no findings, the pretest range is all of [0, 1]");
        match (self.sensitivity, self.specificity) {
            (Some(a), Some(b)) => {
                let test = test_of(a, b)?;
                let phi_e = prevalence_threshold(&test)?;
                result["threshold"] = json!({
                    "prevalence_threshold": phi_e,
                    "min_above_threshold": est.min_bound >= phi_e,
                    "mean_above_threshold": est.mean >= phi_e,
                });
                o = o.warn_if(est.min_bound < phi_e, "the pretest lower bound is below the test's prevalence threshold");
            }
            (None, None) => {}
            (a, _) => {
                let field = if a.is_none() { "sensitivity" } else { "specificity" };
                return Err(Error::out_of_range(field, f64::NAN, "sensitivity and specificity go together"));
            }
        }
        o.result = result;
        Ok(o.into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McgeeRequest {
    #[serde(alias = "phi")]
    pub pretest: f64,
    #[serde(default, alias = "lr")]
    pub kappa: Option<f64>,
    /// Target posttest probability; reports the κ McGee's rule needs.
    #[serde(default)]
    pub target: Option<f64>,
    #[serde(default)]
    pub constant: ConstantChoice,
}

impl Command for McgeeRequest {
    const NAME: &'static str = "mcgee";

    fn outcome(&self) -> Result<OutcomeHandle> {
        let phi = prob("pretest", self.pretest)?;
        let c = self.constant.constant();
        if self.kappa.is_none() && self.target.is_none() {
            return Err(Error::out_of_range("kappa", f64::NAN, "expected kappa, target or both"));
        }
        let mut result = Map::new();
        result.insert("constant".into(), to_value(&c));
        let mut o = Outcome::new(Value::Null);
        if let Some(k) = self.kappa {
            let k = KappaValue::Finite(k).finite("kappa")?;
            let m = mcgee_posttest(phi, k, &c);
            let exact = posttest_exact(phi, LikelihoodRatio::Finite(k));
            result.insert(
                "posttest".into(),
                json!({
                    "mcgee": m.posttest.value,
                    "raw": m.posttest.raw,
                    "clamped": m.posttest.clamped,
                    "exact": exact,
                    "error": (m.posttest.value.value() - exact.value()).abs(),
                    "delta": k.ln() * c.slope,
                }),
            );
            o = o
                .warn_if(m.posttest.clamped, "McGee approximation clamped to [0, 1]")
                .warn_if(m.out_of_domain, "McGee approximation used outside pretest 0.1-0.9");
        }
        if let Some(t) = self.target {
            let target = prob("target", t)?;
            result.insert("required_lr".into(), lr_value(required_lr(phi, target, &c)?));
        }
        o.result = Value::Object(result);
        Ok(o.into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CategoryRequest {
    #[serde(alias = "pretest")]
    pub probability: f64,
    /// Test result to apply: `true` positive, `false` negative.
    #[serde(default)]
    pub positive: Option<bool>,
}

impl Command for CategoryRequest {
    const NAME: &'static str = "category";

    fn outcome(&self) -> Result<OutcomeHandle> {
        let p = prob("probability", self.probability)?;
        let cat = medow_lucey_category(p);
        let (lo, hi) = cat.bounds();
        let mut result = json!({
            "category": cat,
            "label": cat.name(),
            "bounds": [lo, hi],
        });
        if let Some(pos) = self.positive {
            let next: RiskCategory = medow_lucey_update(cat, pos);
            result["after_test"] = json!({ "category": next, "label": next.name() });
        }
        Ok(Outcome::new(result).into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerClassRequest {
    #[serde(alias = "lr")]
    pub kappa: f64,
}

impl Command for PowerClassRequest {
    const NAME: &'static str = "power-class";

    fn outcome(&self) -> Result<OutcomeHandle> {
        let class = clinical_power_class(self.kappa)?;
        Ok(Outcome::new(json!({
            "class": class.name,
            "anchor_kappa": class.kappa,
            "log10_kappa": self.kappa.log10(),
        }))
        .into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditRequest {
    #[serde(default = "audit_pretest_lo")]
    pub pretest_lo: f64,
    #[serde(default = "audit_pretest_hi")]
    pub pretest_hi: f64,
    #[serde(default = "one")]
    pub kappa_lo: f64,
    #[serde(default = "audit_kappa_hi")]
    pub kappa_hi: f64,
    #[serde(default = "audit_step")]
    pub step: f64,
    #[serde(default)]
    pub constant: ConstantChoice,
}

fn audit_pretest_lo() -> f64 {
    0.1
}
fn audit_pretest_hi() -> f64 {
    0.9
}
fn audit_kappa_hi() -> f64 {
    10.0
}
fn audit_step() -> f64 {
    1e-3
}

impl Default for AuditRequest {
    fn default() -> Self {
        Self {
            pretest_lo: audit_pretest_lo(),
            pretest_hi: audit_pretest_hi(),
            kappa_lo: 1.0,
            kappa_hi: audit_kappa_hi(),
            step: audit_step(),
            constant: ConstantChoice::default(),
        }
    }
}

impl Command for AuditRequest {
    const NAME: &'static str = "audit";

    fn outcome(&self) -> Result<OutcomeHandle> {
        if !(self.step >= 1e-4) {
            return Err(Error::out_of_range("step", self.step, "expected step >= 1e-4"));
        }
        let phis = stepped_grid(self.pretest_lo, self.pretest_hi, self.step)?;
        let kappas = stepped_grid(self.kappa_lo, self.kappa_hi, self.step)?;
        if phis.len() * kappas.len() > 20_000_000 {
            return Err(Error::out_of_range("step", self.step, "audit grid above 2e7 points"));
        }
        let surface = heuristic_audit(&phis, &kappas, &self.constant.constant())?;
        Ok(Outcome::new(json!({
            "grid": { "pretest_points": phis.len(), "kappa_points": kappas.len() },
            "max_in_domain": surface.max_in_domain,
            "max_overall": surface.max_overall,
        }))
        .into())
    }
}

// ---------------------------------------------------------------------------
// simulation and tables

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateRequest {
    pub n: u64,
    #[serde(alias = "phi", alias = "pretest")]
    pub prevalence: f64,
    #[serde(alias = "sens")]
    pub sensitivity: f64,
    #[serde(alias = "spec")]
    pub specificity: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one_u64")]
    pub replicates: u64,
    #[serde(default = "default_level")]
    pub level: f64,
}

fn one_u64() -> u64 {
    1
}

impl Command for SimulateRequest {
    const NAME: &'static str = "simulate";

    fn outcome(&self) -> Result<OutcomeHandle> {
        let test = test_of(self.sensitivity, self.specificity)?;
        let level = level_of(self.level)?;
        if self.n.saturating_mul(self.replicates) > 2_000_000_000 {
            return Err(Error::out_of_range("n", self.n as f64, "n x replicates above 2e9 subjects"));
        }
        let cfg = SimConfig::new(self.n, prob("prevalence", self.prevalence)?, test, self.seed, self.replicates)?;
        let sim = simulate(&cfg);
        let mut result = json!({
            "t": sim.t,
            "confusion": sim.confusion,
            "replicates": self.replicates,
        });
        let mut o = Outcome::new(Value::Null).csv(sim.to_csv());
        if test.youden_j() > 0.0 {
            let mean_t = sim.replicates().iter().map(|r| r.t as f64).sum::<f64>() / self.replicates as f64;
            result["mean_t"] = json!(mean_t);
            result["coverage"] = to_value(&coverage_experiment(&cfg, level)?);
        } else {
            o = o.warn("Youden's J is not positive; no Rogan-Gladen coverage");
        }
        o.result = result;
        Ok(o.into())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TablesRequest {}

impl Command for TablesRequest {
    const NAME: &'static str = "tables";

    fn outcome(&self) -> Result<OutcomeHandle> {
        let c = ConstantChoice::Default.constant::<f64>();
        let t3 = table3(&c);
        let t4 = table4(&c)?;
        let text3 = render_table3(&t3);
        let text4 = render_table4(&t4);
        let mut o = Outcome::new(json!({
            "table3": t3,
            "table4": t4,
            "table3_csv": text3,
            "table4_csv": text4,
        }));
        o.text = Some(format!("{text3}\n{text4}"));
        Ok(o.into())
    }
}

// ---------------------------------------------------------------------------
// text rendering

/// Human-readable rendering: one `path: value` line per leaf, floats at
/// `precision` decimals. Arrays longer than 16 entries are summarized.
pub fn render_text(report: &Report, precision: usize) -> String {
    if let Some(t) = &report.text {
        return t.clone();
    }
    let mut out = String::new();
    flatten(&report.envelope.result, "", precision, &mut out);
    for w in &report.envelope.warnings {
        out.push_str(&format!("warning: {w}\n"));
    }
    out
}

fn flatten(v: &Value, path: &str, precision: usize, out: &mut String) {
    let key = |k: &str| if path.is_empty() { k.to_string() } else { format!("{path}.{k}") };
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                flatten(x, &key(k), precision, out);
            }
        }
        Value::Array(a) if a.len() > 16 => {
            out.push_str(&format!("{path}: [{} values, use --json or --csv]\n", a.len()));
        }
        Value::Array(a) if a.iter().all(|x| !x.is_object() && !x.is_array()) => {
            let items: Vec<String> = a.iter().map(|x| scalar_text(x, precision)).collect();
            out.push_str(&format!("{path}: [{}]\n", items.join(", ")));
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten(x, &key(&i.to_string()), precision, out);
            }
        }
        other => out.push_str(&format!("{path}: {}\n", scalar_text(other, precision))),
    }
}

/// Formats one JSON scalar: integers as-is, floats at `precision` decimals.
pub fn scalar_text(v: &Value, precision: usize) -> String {
    match v {
        Value::Number(n) if n.is_f64() => format_prob(n.as_f64().unwrap_or(f64::NAN), precision),
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        Value::Null => "null".into(),
        other => other.to_string(),
    }
}

/// Fixed-point formatting that never prints `-0.000`.
pub fn format_prob(x: f64, precision: usize) -> String {
    let s = format!("{x:.precision$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_example() {
        let r = ThresholdRequest {
            sensitivity: 0.6,
            specificity: 0.95,
        }
        .run()
        .unwrap();
        let v = r.envelope.result["prevalence_threshold"].as_f64().unwrap();
        assert!((v - 0.2240).abs() < 5e-4);
        assert!(render_text(&r, 4).contains("prevalence_threshold: 0.2240"));
    }

    #[test]
    fn envelope_round_trips() {
        let r = PretestRequest {
            findings: vec![FindingInput { label: "fever".into(), kappa: 2.0 }],
            baseline: None,
            constant: ConstantChoice::Default,
            sensitivity: Some(0.9),
            specificity: Some(0.9),
        }
        .run()
        .unwrap();
        let text = r.envelope.to_canonical_json();
        let parsed: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(canonical_json(&parsed), text);
        let back: Envelope = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_canonical_json(), text);
    }

    #[test]
    fn kappa_value_parses() {
        assert_eq!("infinite".parse::<KappaValue>().unwrap(), KappaValue::Infinite);
        assert_eq!("2.5".parse::<KappaValue>().unwrap(), KappaValue::Finite(2.5));
        let v: KappaValue = serde_json::from_str("\"inf\"").unwrap();
        assert_eq!(v, KappaValue::Infinite);
        assert_eq!(serde_json::to_string(&KappaValue::Infinite).unwrap(), "\"infinite\"");
    }

    #[test]
    fn rogan_gladen_clamp_warns() {
        let r = RoganGladenRequest {
            t: 5,
            n: 100,
            sensitivity: 0.9,
            specificity: 0.9,
            level: DEFAULT_LEVEL,
        }
        .run()
        .unwrap();
        assert_eq!(r.envelope.result["point"].as_f64(), Some(0.0));
        assert!(r.envelope.warnings[0].starts_with("clamped"));
    }

    #[test]
    fn format_prob_drops_negative_zero() {
        assert_eq!(format_prob(-0.00001, 4), "0.0000");
        assert_eq!(format_prob(-0.5, 2), "-0.50");
    }
}
