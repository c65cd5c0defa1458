//! Seeded cohort simulation and brute-force Bayes oracles.
//!
//! Replicate `r` draws from ChaCha8 seeded with `seed + r` (wrapping), so a
//! replicate's counts do not depend on how many others run or on thread
//! scheduling. Each subject consumes exactly two 64-bit words: one for disease
//! status and one for the test result. A word `w` becomes the uniform
//! `(w >> 11) · 2⁻⁵³` and a Bernoulli(p) draw succeeds when that is `< p`.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{rogan_gladen_at_level, BetaParams, CohortObservation};
use crate::probability::Probability;
use crate::quadrature::{unit_grid, DensityGrid};
use crate::scalar::{xlogy, Real};
use crate::screening::TestCharacteristics;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig<T> {
    pub n: u64,
    pub true_prevalence: Probability<T>,
    pub test: TestCharacteristics<T>,
    pub seed: u64,
    pub replicates: u64,
}

impl<T: Real> SimConfig<T> {
    pub fn new(n: u64, true_prevalence: Probability<T>, test: TestCharacteristics<T>, seed: u64, replicates: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::out_of_range("n", 0.0, "expected n >= 1"));
        }
        if replicates == 0 {
            return Err(Error::out_of_range("replicates", 0.0, "expected replicates >= 1"));
        }
        Ok(Self {
            n,
            true_prevalence,
            test,
            seed,
            replicates,
        })
    }
}

/// Confusion counts of one simulated cohort.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl Confusion {
    pub fn positives(&self) -> u64 {
        self.tp + self.fp
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn observation(&self) -> CohortObservation {
        CohortObservation {
            n: self.total(),
            t: self.positives(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplicateCounts {
    pub replicate: u64,
    pub t: u64,
    pub confusion: Confusion,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimResult {
    /// Positives in the first replicate.
    pub t: u64,
    /// Confusion counts of the first replicate.
    pub confusion: Confusion,
    /// Every replicate, present when more than one was run.
    pub per_replicate: Option<Vec<ReplicateCounts>>,
}

impl SimResult {
    pub fn replicates(&self) -> Vec<ReplicateCounts> {
        match &self.per_replicate {
            Some(all) => all.clone(),
            None => vec![ReplicateCounts {
                replicate: 0,
                t: self.t,
                confusion: self.confusion,
            }],
        }
    }

    /// Comma-separated replicate table with header
    /// `replicate,t,TP,FP,TN,FN`, LF line endings.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(["replicate", "t", "TP", "FP", "TN", "FN"]).expect("in-memory write");
        for r in self.replicates() {
            let c = r.confusion;
            w.write_record(
                [r.replicate, r.t, c.tp, c.fp, c.tn, c.fn_]
                    .iter()
                    .map(u64::to_string),
            )
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
    }
}

fn unit_draw(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn simulate_replicate(n: u64, phi: f64, sens: f64, fpr: f64, seed: u64) -> Confusion {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = Confusion::default();
    for _ in 0..n {
        let diseased = unit_draw(&mut rng) < phi;
        let u = unit_draw(&mut rng);
        match (diseased, u < if diseased { sens } else { fpr }) {
            (true, true) => c.tp += 1,
            (true, false) => c.fn_ += 1,
            (false, true) => c.fp += 1,
            (false, false) => c.tn += 1,
        }
    }
    c
}

/// Replicate confusion counts, in replicate order.
pub fn simulate_replicates<T: Real>(cfg: &SimConfig<T>) -> Vec<ReplicateCounts> {
    let phi = cfg.true_prevalence.value().as_f64();
    let sens = cfg.test.sens().as_f64();
    let fpr = cfg.test.false_positive_rate().as_f64();
    (0..cfg.replicates)
        .into_par_iter()
        .map(|r| {
            let confusion = simulate_replicate(cfg.n, phi, sens, fpr, cfg.seed.wrapping_add(r));
            ReplicateCounts {
                replicate: r,
                t: confusion.positives(),
                confusion,
            }
        })
        .collect()
}

pub fn simulate<T: Real>(cfg: &SimConfig<T>) -> SimResult {
    let all = simulate_replicates(cfg);
    let first = all[0];
    SimResult {
        t: first.t,
        confusion: first.confusion,
        per_replicate: (all.len() > 1).then_some(all),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoverageReport<T> {
    /// Fraction of replicates whose interval contains the true prevalence.
    pub coverage: T,
    /// Fraction of replicates whose raw point estimate was clamped.
    pub clamp_rate: T,
    pub mean_point: T,
    pub mean_width: T,
    pub replicates: u64,
    pub level: T,
}

/// Empirical coverage of Rogan–Gladen Wald intervals over simulated cohorts.
pub fn coverage_experiment<T: Real>(cfg: &SimConfig<T>, level: T) -> Result<CoverageReport<T>> {
    let truth = cfg.true_prevalence.value();
    let estimates = simulate_replicates(cfg)
        .iter()
        .map(|r| rogan_gladen_at_level(&r.confusion.observation(), &cfg.test, level))
        .collect::<Result<Vec<_>>>()?;
    let count = T::count(estimates.len() as u64);
    let frac = |pred: &dyn Fn(&crate::estimators::IntervalEstimate<T>) -> bool| {
        T::count(estimates.iter().filter(|e| pred(e)).count() as u64) / count
    };
    Ok(CoverageReport {
        coverage: frac(&|e| e.contains(truth)),
        clamp_rate: frac(&|e| e.clamped),
        mean_point: estimates.iter().map(|e| e.point.value()).sum::<T>() / count,
        mean_width: estimates.iter().map(|e| e.width()).sum::<T>() / count,
        replicates: cfg.replicates,
        level,
    })
}

/// Likelihood used by [`grid_bayes_oracle`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LikelihoodKind<T> {
    /// `φ^t (1-φ)^(n-t)`.
    Binomial,
    /// `[(1-b)+Jφ]^t [b-Jφ]^(n-t)` for an imperfect test.
    Transformed(TestCharacteristics<T>),
}

/// Prior × likelihood evaluated pointwise on a uniform φ grid, then
/// normalized by the trapezoid rule. Reference for the conjugate and
/// known-parameter posteriors.
///
/// Priors with a shape below 1 are rejected: their density is infinite at
/// an endpoint and has no pointwise value to compare.
pub fn grid_bayes_oracle<T: Real>(
    obs: &CohortObservation,
    kind: LikelihoodKind<T>,
    prior: &BetaParams<T>,
    grid_size: usize,
) -> Result<DensityGrid<T>> {
    if grid_size < 256 {
        return Err(Error::out_of_range("grid_size", grid_size as f64, "oracle needs at least 256 nodes"));
    }
    if prior.alpha < T::one() || prior.beta < T::one() {
        return Err(Error::InvalidPrior {
            alpha: prior.alpha.as_f64(),
            beta: prior.beta.as_f64(),
        });
    }
    let t = T::count(obs.t);
    let f = T::count(obs.negatives());
    let (am1, bm1) = (prior.alpha - T::one(), prior.beta - T::one());
    let support = unit_grid::<T>(grid_size);
    let log_values = support
        .iter()
        .map(|&phi| {
            let prior_part = xlogy(am1, phi) + xlogy(bm1, T::one() - phi);
            let p = match kind {
                LikelihoodKind::Binomial => phi,
                LikelihoodKind::Transformed(test) => test.false_positive_rate() + test.youden_j() * phi,
            };
            prior_part + xlogy(t, p) + xlogy(f, T::one() - p)
        })
        .collect();
    DensityGrid::from_log_values(log_values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: u64, phi: f64, a: f64, b: f64, seed: u64, reps: u64) -> SimConfig<f64> {
        SimConfig::new(n, Probability::new(phi).unwrap(), TestCharacteristics::new(a, b).unwrap(), seed, reps).unwrap()
    }

    #[test]
    fn trivial_extremes() {
        let r = simulate(&cfg(500, 0.0, 0.7, 1.0, 3, 5));
        assert!(r.replicates().iter().all(|x| x.t == 0));
        let r = simulate(&cfg(500, 1.0, 1.0, 0.3, 3, 5));
        assert!(r.replicates().iter().all(|x| x.t == 500));
    }

    #[test]
    fn counts_are_consistent() {
        for r in simulate(&cfg(1000, 0.2, 0.8, 0.7, 11, 8)).replicates() {
            assert_eq!(r.confusion.total(), 1000);
            assert_eq!(r.confusion.positives(), r.t);
        }
    }

    #[test]
    fn seed_determinism_and_partition() {
        let c = cfg(2000, 0.3, 0.9, 0.8, 42, 6);
        assert_eq!(simulate(&c), simulate(&c));
        // Replicate 3 of seed 42 is replicate 0 of seed 45.
        let shifted = simulate(&cfg(2000, 0.3, 0.9, 0.8, 45, 1));
        assert_eq!(simulate(&c).replicates()[3].confusion, shifted.confusion);
        assert!(shifted.per_replicate.is_none());
    }

    #[test]
    fn apparent_rate_concentrates() {
        let r = simulate(&cfg(1_000_000, 0.25, 0.9, 0.9, 7, 1));
        let rate = r.t as f64 / 1e6;
        let expected = 0.9 * 0.25 + 0.1 * 0.75;
        assert!((rate - expected).abs() < 3.0 * (expected * (1.0 - expected) / 1e6).sqrt());
    }

    #[test]
    fn csv_table_layout() {
        let csv = simulate(&cfg(10, 0.5, 0.9, 0.9, 1, 2)).to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "replicate,t,TP,FP,TN,FN");
        assert_eq!(lines.len(), 3);
        assert!(lines[2].starts_with("1,"));
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn single_replicate_coverage_is_binary() {
        let rep = coverage_experiment(&cfg(100, 0.3, 1.0, 1.0, 5, 1), 0.95).unwrap();
        assert!(rep.coverage == 0.0 || rep.coverage == 1.0);
    }

    #[test]
    fn clamp_rate_reported_at_boundary() {
        let rep = coverage_experiment(&cfg(200, 0.0, 0.9, 0.9, 9, 200), 0.95).unwrap();
        assert!(rep.clamp_rate > 0.2, "{}", rep.clamp_rate);
    }

    #[test]
    fn oracle_trivial_cases() {
        let obs = CohortObservation::new(3, 10).unwrap();
        let u = BetaParams::<f64>::uniform();
        let plain = grid_bayes_oracle(&obs, LikelihoodKind::Binomial, &u, 512).unwrap();
        let perfect = grid_bayes_oracle(&obs, LikelihoodKind::Transformed(TestCharacteristics::perfect()), &u, 512).unwrap();
        for (x, y) in plain.values.iter().zip(&perfect.values) {
            assert!((x - y).abs() < 1e-12);
        }
        let prior = BetaParams::<f64>::new(2.0, 2.0).unwrap();
        let none = grid_bayes_oracle(&CohortObservation::new(0, 0).unwrap(), LikelihoodKind::Binomial, &prior, 512).unwrap();
        for (x, v) in none.support.iter().zip(&none.values) {
            assert!((v - 6.0 * x * (1.0 - x)).abs() < 1e-4);
        }
        assert!(grid_bayes_oracle(&obs, LikelihoodKind::Binomial, &u, 100).is_err());
    }
}
