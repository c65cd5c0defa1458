//! Prevalence estimation from cohort counts.
//!
//! * Rogan–Gladen: invert the apparent prevalence `t/n = (1-b) + Jφ` and
//!   attach a Wald interval.
//! * Conjugate beta updating of a beta prior with binomial counts.
//! * Posterior of φ under a uniform prior when `a` and `b` are known: the
//!   density is proportional to `[(1-b) + Jφ]^t [b - Jφ]^(n-t)` and its
//!   normalizer is `(B(a) - B(1-b)) / J` with `B` the incomplete beta at
//!   shapes `(t+1, n-t+1)`.
//! * Marginal posterior of φ when `a` and `b` are themselves uncertain and
//!   only validation counts are available.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probability::Probability;
use crate::quadrature::{trapezoid, uniform_grid, unit_grid, DensityGrid};
use crate::scalar::{xlogy, Real};
use crate::screening::TestCharacteristics;
use crate::special::{beta_quantile, ln_beta, ln_incomplete_beta_window, regularized_incomplete_beta, two_sided_z};

/// Default Wald critical value.
pub const WALD_Z95: f64 = 1.96;
/// Default φ grid for posterior densities.
pub const DEFAULT_PHI_GRID: usize = 2048;
/// Default per-axis grid for the sensitivity/specificity integral.
pub const DEFAULT_AB_GRID: usize = 128;
/// Default credible level.
pub const DEFAULT_LEVEL: f64 = 0.95;

/// `t` positives among `n` tested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CohortObservation {
    pub n: u64,
    pub t: u64,
}

impl CohortObservation {
    pub fn new(t: u64, n: u64) -> Result<Self> {
        if t > n {
            return Err(Error::CountMismatch {
                field: "t",
                count: t,
                total_field: "n",
                total: n,
            });
        }
        Ok(Self { n, t })
    }

    pub fn negatives(&self) -> u64 {
        self.n - self.t
    }

    fn require_subjects(&self) -> Result<()> {
        if self.n == 0 {
            Err(Error::EmptyCohort)
        } else {
            Ok(())
        }
    }
}

/// Validation counts: `t_a` true positives among `n_a` known positives and
/// `t_b` false positives among `n_b` known negatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationData {
    pub n_a: u64,
    pub t_a: u64,
    pub n_b: u64,
    pub t_b: u64,
}

impl ValidationData {
    pub fn new(t_a: u64, n_a: u64, t_b: u64, n_b: u64) -> Result<Self> {
        if t_a > n_a {
            return Err(Error::CountMismatch {
                field: "t_a",
                count: t_a,
                total_field: "n_a",
                total: n_a,
            });
        }
        if t_b > n_b {
            return Err(Error::CountMismatch {
                field: "t_b",
                count: t_b,
                total_field: "n_b",
                total: n_b,
            });
        }
        Ok(Self { n_a, t_a, n_b, t_b })
    }
}

/// Shape parameters of a beta distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaParams<T> {
    pub alpha: T,
    pub beta: T,
}

impl<T: Real> BetaParams<T> {
    pub fn new(alpha: T, beta: T) -> Result<Self> {
        if alpha > T::zero() && beta > T::zero() && alpha.is_finite() && beta.is_finite() {
            Ok(Self { alpha, beta })
        } else {
            Err(Error::InvalidPrior {
                alpha: alpha.as_f64(),
                beta: beta.as_f64(),
            })
        }
    }

    /// Beta(1, 1).
    pub fn uniform() -> Self {
        Self {
            alpha: T::one(),
            beta: T::one(),
        }
    }

    /// Log density at `x`, normalized. Infinite at an endpoint when the
    /// matching shape is below 1.
    pub fn ln_pdf(&self, x: T) -> T {
        let one = T::one();
        xlogy(self.alpha - one, x) + xlogy(self.beta - one, one - x) - ln_beta(self.alpha, self.beta)
    }

    pub fn mean(&self) -> T {
        self.alpha / (self.alpha + self.beta)
    }
}

/// Point estimate with a two-sided interval, all clamped to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntervalEstimate<T> {
    pub point: Probability<T>,
    pub lo: Probability<T>,
    pub hi: Probability<T>,
    /// True when the unclamped point estimate fell outside `[0, 1]`.
    pub clamped: bool,
    /// Unclamped point estimate.
    pub raw_point: T,
}

impl<T: Real> IntervalEstimate<T> {
    pub fn width(&self) -> T {
        self.hi.value() - self.lo.value()
    }

    pub fn contains(&self, x: T) -> bool {
        self.lo.value() <= x && x <= self.hi.value()
    }
}

/// Raw positive fraction `t / n`.
pub fn apparent_prevalence<T: Real>(obs: &CohortObservation) -> Result<Probability<T>> {
    obs.require_subjects()?;
    Ok(Probability::saturating(T::count(obs.t) / T::count(obs.n)))
}

fn require_informative<T: Real>(test: &TestCharacteristics<T>) -> Result<T> {
    let j = test.youden_j();
    if j > T::zero() {
        Ok(j)
    } else {
        Err(Error::UninformativeTest(j.as_f64()))
    }
}

/// Unclamped Rogan–Gladen point `(t/n - (1-b)) / J`.
pub fn rogan_gladen_raw<T: Real>(obs: &CohortObservation, test: &TestCharacteristics<T>) -> Result<T> {
    let j = require_informative(test)?;
    let apparent = apparent_prevalence::<T>(obs)?.value();
    Ok((apparent - test.false_positive_rate()) / j)
}

/// Rogan–Gladen estimate with a 95% Wald interval (z = 1.96).
pub fn rogan_gladen<T: Real>(obs: &CohortObservation, test: &TestCharacteristics<T>) -> Result<IntervalEstimate<T>> {
    rogan_gladen_z(obs, test, T::lit(WALD_Z95))
}

/// Rogan–Gladen estimate with a Wald interval at the given coverage level.
pub fn rogan_gladen_at_level<T: Real>(
    obs: &CohortObservation,
    test: &TestCharacteristics<T>,
    level: T,
) -> Result<IntervalEstimate<T>> {
    rogan_gladen_z(obs, test, two_sided_z(level)?)
}

fn rogan_gladen_z<T: Real>(obs: &CohortObservation, test: &TestCharacteristics<T>, z: T) -> Result<IntervalEstimate<T>> {
    let raw = rogan_gladen_raw(obs, test)?;
    let point = Probability::saturating(raw);
    let clamped = raw != point.value();
    let p = point.value();
    let half_width = z * (p * (T::one() - p) / T::count(obs.n)).sqrt();
    Ok(IntervalEstimate {
        point,
        lo: Probability::saturating(p - half_width),
        hi: Probability::saturating(p + half_width),
        clamped,
        raw_point: raw,
    })
}

/// Conjugate update `(α + t, β + n - t)`.
pub fn beta_update<T: Real>(prior: &BetaParams<T>, obs: &CohortObservation) -> BetaParams<T> {
    BetaParams {
        alpha: prior.alpha + T::count(obs.t),
        beta: prior.beta + T::count(obs.negatives()),
    }
}

/// First two moments of a beta distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaMoments<T> {
    pub mean: T,
    pub second_moment: T,
    pub variance: T,
    pub sd: T,
}

pub fn beta_moments<T: Real>(p: &BetaParams<T>) -> BetaMoments<T> {
    let one = T::one();
    let total = p.alpha + p.beta;
    let mean = p.alpha / total;
    let second_moment = p.alpha * (p.alpha + one) / (total * (total + one));
    let variance = p.alpha * p.beta / (total * total * (total + one));
    BetaMoments {
        mean,
        second_moment,
        variance,
        sd: variance.sqrt(),
    }
}

/// Beta density on a uniform grid, renormalized by the trapezoid rule.
///
/// An endpoint where the density is infinite (shape below 1) is replaced by
/// the average density over its adjacent cell.
pub fn beta_pdf<T: Real>(p: &BetaParams<T>, grid_size: usize) -> Result<DensityGrid<T>> {
    if grid_size < 16 {
        return Err(Error::out_of_range("grid_size", grid_size as f64, "expected at least 16 nodes"));
    }
    let support = unit_grid::<T>(grid_size);
    let h = support[1];
    let mut log_values: Vec<T> = support.iter().map(|&x| p.ln_pdf(x)).collect();
    if log_values[0].is_infinite() && log_values[0] > T::zero() {
        let cell_mass = regularized_incomplete_beta(h, p.alpha, p.beta)?;
        log_values[0] = (cell_mass / h).ln();
    }
    let last = grid_size - 1;
    if log_values[last].is_infinite() && log_values[last] > T::zero() {
        let cell_mass = regularized_incomplete_beta(h, p.beta, p.alpha)?;
        log_values[last] = (cell_mass / h).ln();
    }
    DensityGrid::from_log_values(log_values)
}

/// Log of the normalizer `∫₀¹ [(1-b)+Jφ]^t [b-Jφ]^(n-t) dφ`, computed as
/// `ln((B(a) - B(1-b)) / J)` with incomplete betas at shapes `(t+1, n-t+1)`.
pub fn baxter_log_normalizer<T: Real>(obs: &CohortObservation, test: &TestCharacteristics<T>) -> Result<T> {
    let j = require_informative(test)?;
    let p = T::count(obs.t) + T::one();
    let q = T::count(obs.negatives()) + T::one();
    Ok(ln_incomplete_beta_window(test.false_positive_rate(), test.sens(), p, q)? - j.ln())
}

/// Analytic normalizer when representable, else a log-sum-exp trapezoid over
/// `phis` (the incomplete-beta window underflows when the data sit far out
/// in a tail of `[1-b, a]`).
fn log_normalizer_on<T: Real>(obs: &CohortObservation, test: &TestCharacteristics<T>, phis: &[T]) -> Result<T> {
    let analytic = baxter_log_normalizer(obs, test)?;
    if analytic.is_finite() {
        return Ok(analytic);
    }
    let (fpr, j) = (test.false_positive_rate(), test.youden_j());
    let logs: Vec<T> = phis.iter().map(|&phi| baxter_log_kernel(obs, fpr, j, phi)).collect();
    let peak = logs.iter().copied().fold(T::neg_infinity(), T::max);
    let scaled: Vec<T> = logs.iter().map(|&l| (l - peak).exp()).collect();
    let h = T::one() / T::count(phis.len() as u64 - 1);
    Ok(peak + trapezoid(&scaled, h).ln())
}

fn baxter_log_kernel<T: Real>(obs: &CohortObservation, fpr: T, j: T, phi: T) -> T {
    let apparent = fpr + j * phi;
    xlogy(T::count(obs.t), apparent) + xlogy(T::count(obs.negatives()), T::one() - apparent)
}

/// Posterior density of φ given `t` of `n` positives from a test with known
/// sensitivity and specificity, under a uniform prior on φ.
pub fn baxter_posterior_known<T: Real>(
    obs: &CohortObservation,
    test: &TestCharacteristics<T>,
    grid_size: usize,
) -> Result<DensityGrid<T>> {
    obs.require_subjects()?;
    let j = require_informative(test)?;
    if grid_size < 16 {
        return Err(Error::out_of_range("grid_size", grid_size as f64, "expected at least 16 nodes"));
    }
    let support = unit_grid::<T>(grid_size);
    let log_z = log_normalizer_on(obs, test, &support)?;
    let fpr = test.false_positive_rate();
    let values: Vec<T> = support
        .iter()
        .map(|&phi| (baxter_log_kernel(obs, fpr, j, phi) - log_z).exp())
        .collect();
    let mut grid = DensityGrid::from_values(support, values)?;
    // The analytic normalizer and the trapezoid differ only by quadrature
    // error; renormalize so the grid integrates to 1 on its own rule.
    grid.normalize()?;
    Ok(grid)
}

/// Grid sizes for [`baxter_posterior_unknown`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnknownGrid {
    pub phi: usize,
    pub sensitivity: usize,
    pub specificity: usize,
}

impl Default for UnknownGrid {
    fn default() -> Self {
        Self {
            phi: DEFAULT_PHI_GRID,
            sensitivity: DEFAULT_AB_GRID,
            specificity: DEFAULT_AB_GRID,
        }
    }
}

/// Priors on sensitivity and specificity, both expressed on the parameter
/// itself (not on its complement).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestPriors<T> {
    pub sensitivity: BetaParams<T>,
    pub specificity: BetaParams<T>,
}

impl<T: Real> Default for TestPriors<T> {
    fn default() -> Self {
        Self {
            sensitivity: BetaParams::uniform(),
            specificity: BetaParams::uniform(),
        }
    }
}

/// Posteriors of `a` and `b` after the validation counts.
pub fn validation_posteriors<T: Real>(val: &ValidationData, priors: &TestPriors<T>) -> (BetaParams<T>, BetaParams<T>) {
    let sens = BetaParams {
        alpha: priors.sensitivity.alpha + T::count(val.t_a),
        beta: priors.sensitivity.beta + T::count(val.n_a - val.t_a),
    };
    // t_b counts false positives, i.e. failures of specificity.
    let spec = BetaParams {
        alpha: priors.specificity.alpha + T::count(val.n_b - val.t_b),
        beta: priors.specificity.beta + T::count(val.t_b),
    };
    (sens, spec)
}

/// Tail mass left outside the (a, b) integration window on each side.
const AXIS_TAIL: f64 = 1e-12;

struct Axis<T> {
    nodes: Vec<T>,
    /// Trapezoid weight times posterior density, in log space.
    log_weights: Vec<T>,
}

fn axis<T: Real>(posterior: &BetaParams<T>, size: usize) -> Result<Axis<T>> {
    let tail = T::lit(AXIS_TAIL);
    let lo = beta_quantile(tail, posterior.alpha, posterior.beta)?;
    let hi = beta_quantile(T::one() - tail, posterior.alpha, posterior.beta)?;
    let nodes = if hi > lo {
        uniform_grid(lo, hi, size)
    } else {
        vec![lo]
    };
    let last = nodes.len() - 1;
    let log_weights = nodes
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let end_weight = if nodes.len() > 1 && (i == 0 || i == last) {
                T::lit(0.5).ln()
            } else {
                T::zero()
            };
            posterior.ln_pdf(x) + end_weight
        })
        .collect();
    Ok(Axis { nodes, log_weights })
}

/// Marginal posterior of φ when sensitivity and specificity are known only
/// through validation counts.
///
/// Integrates the known-parameters posterior over the validation posteriors
/// of `a` and `b` with a trapezoid rule on each axis. Each axis spans the
/// central `1 - 2e-12` quantile range of its posterior. Nodes with
/// `a + b <= 1` contribute nothing. Rows of the outer (sensitivity) axis run
/// in parallel, and the row sums are then added in index order, so the
/// result does not depend on the thread count.
pub fn baxter_posterior_unknown<T: Real>(
    obs: &CohortObservation,
    val: &ValidationData,
    priors: &TestPriors<T>,
    grid: UnknownGrid,
) -> Result<DensityGrid<T>> {
    obs.require_subjects()?;
    for p in [priors.sensitivity, priors.specificity] {
        BetaParams::new(p.alpha, p.beta)?;
    }
    if grid.phi < 16 {
        return Err(Error::out_of_range("grid.phi", grid.phi as f64, "expected at least 16 nodes"));
    }
    for (field, size) in [("grid.sensitivity", grid.sensitivity), ("grid.specificity", grid.specificity)] {
        if size < 32 {
            return Err(Error::out_of_range(field, size as f64, "expected at least 32 nodes per axis"));
        }
    }
    let (sens_post, spec_post) = validation_posteriors(val, priors);
    let sens_axis = axis(&sens_post, grid.sensitivity)?;
    let spec_axis = axis(&spec_post, grid.specificity)?;
    let phis = unit_grid::<T>(grid.phi);

    let peak = sens_axis.log_weights.iter().copied().fold(T::neg_infinity(), T::max)
        + spec_axis.log_weights.iter().copied().fold(T::neg_infinity(), T::max);
    // Nodes this far below the heaviest one cannot move the result.
    let cutoff = peak - T::lit(46.0);

    let rows: Vec<Result<Option<Vec<T>>>> = sens_axis
        .nodes
        .par_iter()
        .zip(sens_axis.log_weights.par_iter())
        .map(|(&a, &log_wa)| {
            let mut row = vec![T::zero(); phis.len()];
            let mut touched = false;
            for (&b, &log_wb) in spec_axis.nodes.iter().zip(&spec_axis.log_weights) {
                let log_w = log_wa + log_wb;
                if !(log_w > cutoff) || a + b <= T::one() {
                    continue;
                }
                let test = TestCharacteristics {
                    sensitivity: Probability::saturating(a),
                    specificity: Probability::saturating(b),
                };
                let j = test.youden_j();
                let fpr = test.false_positive_rate();
                let log_z = log_normalizer_on(obs, &test, &phis)?;
                let shift = log_w - peak - log_z;
                for (acc, &phi) in row.iter_mut().zip(&phis) {
                    *acc = *acc + (baxter_log_kernel(obs, fpr, j, phi) + shift).exp();
                }
                touched = true;
            }
            Ok(touched.then_some(row))
        })
        .collect();

    let mut values = vec![T::zero(); phis.len()];
    for row in rows {
        if let Some(row) = row? {
            for (acc, v) in values.iter_mut().zip(row) {
                *acc = *acc + v;
            }
        }
    }
    let mut density = DensityGrid::from_values(phis, values)?;
    density.normalize()?;
    Ok(density)
}

/// Mean of the known-parameters posterior, for quick comparisons.
pub fn density_mean<T: Real>(d: &DensityGrid<T>) -> T {
    let weighted: Vec<T> = d.support.iter().zip(&d.values).map(|(&x, &f)| x * f).collect();
    trapezoid(&weighted, d.step())
}
