//! Densities on uniform grids over `[0, 1]` and the trapezoidal summaries
//! computed from them.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::probability::Probability;
use crate::scalar::Real;

/// Tolerance on the trapezoidal mass of a normalized grid.
pub const NORMALIZATION_TOL: f64 = 1e-6;

/// Uniform nodes `i / (n - 1)` on `[0, 1]`, endpoints exact.
pub fn unit_grid<T: Real>(n: usize) -> Vec<T> {
    assert!(n >= 2, "unit grid needs at least two nodes");
    let last = T::count(n as u64 - 1);
    (0..n)
        .map(|i| if i + 1 == n { T::one() } else { T::count(i as u64) / last })
        .collect()
}

/// Uniform nodes on `[lo, hi]`, endpoints exact.
pub fn uniform_grid<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    assert!(n >= 2, "uniform grid needs at least two nodes");
    let last = T::count(n as u64 - 1);
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo + (hi - lo) * T::count(i as u64) / last
            }
        })
        .collect()
}

/// Composite trapezoid rule on a uniform grid with spacing `h`.
pub fn trapezoid<T: Real>(values: &[T], h: T) -> T {
    match values.len() {
        0 | 1 => T::zero(),
        n => {
            let half = T::lit(0.5);
            let interior: T = values[1..n - 1].iter().copied().sum();
            h * (interior + half * (values[0] + values[n - 1]))
        }
    }
}

/// A non-negative function tabulated on a uniform grid over `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityGrid<T> {
    pub support: Vec<T>,
    pub values: Vec<T>,
    pub normalized: bool,
}

impl<T: Real> DensityGrid<T> {
    /// Tabulates `f` on `grid_size` uniform nodes. Negative or non-finite
    /// values are rejected.
    pub fn tabulate(grid_size: usize, f: impl Fn(T) -> T) -> Result<Self> {
        if grid_size < 2 {
            return Err(Error::out_of_range("grid_size", grid_size as f64, "expected at least 2 nodes"));
        }
        let support = unit_grid::<T>(grid_size);
        let values = support.iter().map(|&x| f(x)).collect();
        Self::from_values(support, values)
    }

    pub fn from_values(support: Vec<T>, values: Vec<T>) -> Result<Self> {
        if support.len() != values.len() || support.len() < 2 {
            return Err(Error::out_of_range(
                "values",
                values.len() as f64,
                "expected one value per node and at least 2 nodes",
            ));
        }
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v >= T::zero())) {
            return Err(Error::out_of_range("values", bad.as_f64(), "density values must be finite and >= 0"));
        }
        let mut grid = Self {
            support,
            values,
            normalized: false,
        };
        grid.normalized = grid.is_normalized();
        Ok(grid)
    }

    /// Builds a normalized grid from log-density values on the unit grid.
    /// The maximum is subtracted before exponentiating.
    pub fn from_log_values(log_values: Vec<T>) -> Result<Self> {
        let support = unit_grid::<T>(log_values.len().max(2));
        let peak = log_values.iter().copied().fold(T::neg_infinity(), T::max);
        if !peak.is_finite() {
            return Err(Error::UnnormalizedDensity(0.0));
        }
        let values = log_values.iter().map(|&l| (l - peak).exp()).collect();
        let mut grid = Self::from_values(support, values)?;
        grid.normalize()?;
        Ok(grid)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Node spacing.
    pub fn step(&self) -> T {
        T::one() / T::count(self.values.len() as u64 - 1)
    }

    pub fn integral(&self) -> T {
        trapezoid(&self.values, self.step())
    }

    fn is_normalized(&self) -> bool {
        (self.integral() - T::one()).abs().as_f64() <= NORMALIZATION_TOL
    }

    /// Rescales so the trapezoidal mass is 1.
    pub fn normalize(&mut self) -> Result<()> {
        let mass = self.integral();
        if !(mass > T::zero() && mass.is_finite()) {
            return Err(Error::UnnormalizedDensity(mass.as_f64()));
        }
        for v in &mut self.values {
            *v = *v / mass;
        }
        self.normalized = true;
        Ok(())
    }

    /// Index of the largest value (first one on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        best
    }

    /// Trapezoidal expectation of `g`.
    pub fn expectation(&self, g: impl Fn(T) -> T) -> T {
        let weighted: Vec<T> = self.support.iter().zip(&self.values).map(|(&x, &f)| g(x) * f).collect();
        trapezoid(&weighted, self.step())
    }

    /// Cumulative trapezoid at each node, not rescaled.
    pub fn cumulative(&self) -> Vec<T> {
        let h = self.step();
        let half = T::lit(0.5);
        let mut acc = T::zero();
        let mut out = Vec::with_capacity(self.values.len());
        out.push(acc);
        for w in self.values.windows(2) {
            acc = acc + half * h * (w[0] + w[1]);
            out.push(acc);
        }
        out
    }

    /// Max-preserving decimation to at most `max_points` points: the grid is
    /// cut into equal index buckets and each bucket keeps its largest value,
    /// so the global mode always survives.
    pub fn downsample(&self, max_points: usize) -> Vec<(T, T)> {
        let n = self.values.len();
        if n <= max_points || max_points == 0 {
            return self.support.iter().copied().zip(self.values.iter().copied()).collect();
        }
        (0..max_points)
            .map(|b| {
                let start = b * n / max_points;
                let end = ((b + 1) * n / max_points).max(start + 1);
                let mut best = start;
                for i in start..end {
                    if self.values[i] > self.values[best] {
                        best = i;
                    }
                }
                (self.support[best], self.values[best])
            })
            .collect()
    }
}

/// Total-variation distance `½∫|f - g|` between two densities on the same grid.
pub fn total_variation<T: Real>(f: &DensityGrid<T>, g: &DensityGrid<T>) -> Result<T> {
    if f.len() != g.len() {
        return Err(Error::out_of_range("grid_size", g.len() as f64, "densities must share a grid"));
    }
    let diff: Vec<T> = f.values.iter().zip(&g.values).map(|(a, b)| (*a - *b).abs()).collect();
    Ok(T::lit(0.5) * trapezoid(&diff, f.step()))
}

/// Moments, mode and equal-tailed credible interval of a gridded density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PosteriorSummary<T> {
    pub mean: Probability<T>,
    pub mode: Probability<T>,
    pub variance: T,
    pub sd: T,
    pub credible_interval: (Probability<T>, Probability<T>),
    pub level: T,
    /// Trapezoidal mass of the input grid (normalization check).
    pub mass: T,
}

/// Summarizes a normalized density. Uses the trapezoid rule for moments, a
/// local parabola through the grid argmax for the mode, and bisection on
/// the piecewise-quadratic trapezoid CDF for the interval.
pub fn posterior_summary<T: Real>(d: &DensityGrid<T>, level: T) -> Result<PosteriorSummary<T>> {
    if !(level > T::zero() && level < T::one()) {
        return Err(Error::out_of_range("level", level.as_f64(), "expected a value in (0, 1)"));
    }
    let mass = d.integral();
    if (mass - T::one()).abs().as_f64() > NORMALIZATION_TOL {
        return Err(Error::UnnormalizedDensity(mass.as_f64()));
    }
    let mean = d.expectation(|x| x);
    let variance = d.expectation(|x| (x - mean) * (x - mean)).max(T::zero());
    let mode = refined_mode(d);
    let tail = (T::one() - level) * T::lit(0.5);
    let cdf = d.cumulative();
    let lo = inverse_cdf(d, &cdf, tail * mass);
    let hi = inverse_cdf(d, &cdf, (T::one() - tail) * mass);
    Ok(PosteriorSummary {
        mean: Probability::saturating(mean),
        mode: Probability::saturating(mode),
        variance,
        sd: variance.sqrt(),
        credible_interval: (Probability::saturating(lo), Probability::saturating(hi)),
        level,
        mass,
    })
}

fn refined_mode<T: Real>(d: &DensityGrid<T>) -> T {
    let i = d.argmax();
    let h = d.step();
    if i == 0 || i + 1 == d.len() {
        return d.support[i];
    }
    let (left, mid, right) = (d.values[i - 1], d.values[i], d.values[i + 1]);
    let curvature = left - mid - mid + right;
    if curvature >= T::zero() {
        return d.support[i];
    }
    let half = T::lit(0.5);
    let offset = (half * h * (left - right) / curvature).max(-half * h).min(half * h);
    d.support[i] + offset
}

/// Smallest `x` with trapezoid CDF `>= target`. Inside a cell the linear
/// interpolant integrates to a quadratic, which is inverted by bisection.
fn inverse_cdf<T: Real>(d: &DensityGrid<T>, cdf: &[T], target: T) -> T {
    let n = cdf.len();
    if target <= T::zero() {
        let first = d.values.iter().position(|v| *v > T::zero()).unwrap_or(0);
        return d.support[first.saturating_sub(1)];
    }
    if target >= cdf[n - 1] {
        return T::one();
    }
    let cell = cdf.partition_point(|c| *c < target).max(1) - 1;
    let h = d.step();
    let (f0, f1) = (d.values[cell], d.values[cell + 1]);
    let base = cdf[cell];
    let partial = |s: T| base + f0 * s + (f1 - f0) * s * s / (T::lit(2.0) * h) - target;
    match crate::roots::bisect(partial, T::zero(), h, T::epsilon() * h, T::zero()) {
        Some(root) => d.support[cell] + root.x,
        None => d.support[cell + 1],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn grid_endpoints_exact() {
        let g = unit_grid::<f64>(2048);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[2047], 1.0);
        let u = uniform_grid(0.2_f64, 0.7, 6);
        assert_abs_diff_eq!(u[1], 0.3, epsilon = 1e-15);
        assert_eq!(u[5], 0.7);
    }

    #[test]
    fn uniform_summary() {
        let d = DensityGrid::tabulate(2048, |_| 1.0_f64).unwrap();
        assert!(d.normalized);
        let s = posterior_summary(&d, 0.95).unwrap();
        assert_abs_diff_eq!(s.mean.value(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s.variance, 1.0 / 12.0, epsilon = 1e-4);
        assert_abs_diff_eq!(s.credible_interval.0.value(), 0.025, epsilon = 1e-3);
        assert_abs_diff_eq!(s.credible_interval.1.value(), 0.975, epsilon = 1e-3);
    }

    #[test]
    fn beta48_mean_by_quadrature() {
        // Beta(4, 8) pdf written out: x^3 (1-x)^7 / B(4, 8), B(4,8) = 3! 7! / 11!
        let b = 6.0 * 5040.0 / 39_916_800.0;
        let d = DensityGrid::tabulate(2048, |x: f64| x.powi(3) * (1.0 - x).powi(7) / b).unwrap();
        let s = posterior_summary(&d, 0.95).unwrap();
        assert_abs_diff_eq!(s.mean.value(), 1.0 / 3.0, epsilon = 1e-4);
        assert_abs_diff_eq!(s.mode.value(), 0.3, epsilon = 1e-5);
        assert!(s.credible_interval.0 < s.mean && s.mean < s.credible_interval.1);
    }

    #[test]
    fn concentrated_interval_is_narrow() {
        let d = DensityGrid::from_log_values(
            unit_grid::<f64>(2048)
                .iter()
                .map(|&x| -((x - 0.4) * (x - 0.4)) / (2.0 * 1e-8))
                .collect(),
        )
        .unwrap();
        let s = posterior_summary(&d, 0.95).unwrap();
        let width = s.credible_interval.1.value() - s.credible_interval.0.value();
        assert!(width < 1e-3, "width {width}");
    }

    #[test]
    fn rejects_unnormalized() {
        let d = DensityGrid::tabulate(64, |_| 2.0_f64).unwrap();
        assert!(!d.normalized);
        assert!(matches!(posterior_summary(&d, 0.95), Err(Error::UnnormalizedDensity(_))));
        let mut d = d;
        d.normalize().unwrap();
        assert!(posterior_summary(&d, 0.5).is_ok());
        assert!(posterior_summary(&d, 1.0).is_err());
    }

    #[test]
    fn rejects_negative_values() {
        assert!(DensityGrid::tabulate(16, |x: f64| x - 0.5).is_err());
    }

    #[test]
    fn downsample_keeps_mode() {
        let d = DensityGrid::tabulate(2048, |x: f64| (-(x - 0.3141).powi(2) * 5000.0).exp()).unwrap();
        let m = d.argmax();
        let pts = d.downsample(512);
        assert_eq!(pts.len(), 512);
        assert!(pts.contains(&(d.support[m], d.values[m])));
        assert!(pts.windows(2).all(|w| w[0].0 < w[1].0));
        assert_eq!(d.downsample(4096).len(), 2048);
    }

    #[test]
    fn total_variation_bounds() {
        let a = DensityGrid::tabulate(512, |_| 1.0_f64).unwrap();
        let mut b = DensityGrid::tabulate(512, |x: f64| 2.0 * x).unwrap();
        b.normalize().unwrap();
        assert_eq!(total_variation(&a, &a).unwrap(), 0.0);
        // ½∫|1 - 2x| = 1/4
        assert_abs_diff_eq!(total_variation(&a, &b).unwrap(), 0.25, epsilon = 1e-5);
    }
}
