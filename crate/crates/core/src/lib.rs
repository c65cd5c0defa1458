//! Screening-test probability engine.
//!
//! Predictive values and the prevalence threshold of a binary test, exact
//! and heuristic posttest updates, prevalence estimators for imperfect tests
//! (Rogan–Gladen, conjugate beta, grid posteriors with known or uncertain
//! sensitivity and specificity), and a seeded cohort simulator used to check
//! all of them.
//!
//! Every routine is generic over [`Real`] (`f32` or `f64`). The `F64`
//! aliases below fix the scalar for callers that do not care.
//!
//! ```
//! use bayescreen::{prevalence_threshold, TestCharacteristicsF64};
//!
//! let test = TestCharacteristicsF64::new(0.9, 0.9).unwrap();
//! let phi_e = prevalence_threshold(&test).unwrap();
//! assert!((phi_e.value() - 0.25).abs() < 1e-12);
//! ```

pub mod commands;
pub mod error;
pub mod estimators;
pub mod heuristics;
pub mod probability;
pub mod quadrature;
pub mod roots;
pub mod scalar;
pub mod screening;
pub mod simulator;
pub mod special;
pub mod tables;

pub use error::{Error, Result};
pub use estimators::{
    apparent_prevalence, baxter_log_normalizer, baxter_posterior_known, baxter_posterior_unknown, beta_moments,
    beta_pdf, beta_update, density_mean, rogan_gladen, rogan_gladen_at_level, rogan_gladen_raw,
    validation_posteriors, BetaMoments, BetaParams, CohortObservation, IntervalEstimate, TestPriors, UnknownGrid,
    ValidationData,
};
pub use heuristics::{
    clinical_power_class, heuristic_audit, medow_lucey_category, medow_lucey_update, mcgee_delta, mcgee_posttest,
    pretest_estimate, pretest_min_bound, required_lr, threshold_crossing_kappa, tipping_curve, AuditSurface,
    ConstantChoice, Finding, FindingSet, HeuristicConstant, PowerClass, PretestEstimate, RiskCategory,
};
pub use probability::{inv_logit, logit, Odds, Probability};
pub use quadrature::{posterior_summary, total_variation, DensityGrid, PosteriorSummary};
pub use scalar::Real;
pub use screening::{
    fagan_coordinates, nomogram_axes, npv, posttest_exact, posttest_sequential, ppv, ppv_at_threshold, ppv_curve,
    positive_lr, pretest_from_posttest, prevalence_threshold, threshold_from_lr, CurveSeries, FaganLine,
    LikelihoodRatio, NomogramAxes, TestCharacteristics,
};
pub use simulator::{
    coverage_experiment, grid_bayes_oracle, simulate, CoverageReport, LikelihoodKind, SimConfig, SimResult,
};

pub type ProbabilityF64 = Probability<f64>;
pub type OddsF64 = Odds<f64>;
pub type TestCharacteristicsF64 = TestCharacteristics<f64>;
pub type LikelihoodRatioF64 = LikelihoodRatio<f64>;
pub type CurveSeriesF64 = CurveSeries<f64>;
pub type DensityGridF64 = DensityGrid<f64>;
pub type PosteriorSummaryF64 = PosteriorSummary<f64>;
pub type BetaParamsF64 = BetaParams<f64>;
pub type IntervalEstimateF64 = IntervalEstimate<f64>;
pub type HeuristicConstantF64 = HeuristicConstant<f64>;
pub type FindingSetF64 = FindingSet<f64>;
pub type PretestEstimateF64 = PretestEstimate<f64>;
pub type SimConfigF64 = SimConfig<f64>;

/// Engine version reported in every output envelope.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
