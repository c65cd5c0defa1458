//! Gamma and beta special functions.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::roots::bisect;
use crate::scalar::Real;

// Lanczos approximation, g = 7, n = 9 (Numerical Recipes / Boost coefficients).
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma<T: Real>(x: T) -> T {
    let half = T::lit(0.5);
    if x < half {
        // Reflection: Γ(x)Γ(1-x) = π / sin(πx)
        let pi = T::PI();
        return (pi / (pi * x).sin()).ln() - ln_gamma(T::one() - x);
    }
    let x = x - T::one();
    let mut acc = T::lit(LANCZOS_COEF[0]);
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc = acc + T::lit(c) / (x + T::count(i as u64));
    }
    let t = x + T::lit(LANCZOS_G) + half;
    half * (T::lit(2.0) * T::PI()).ln() + (x + half) * t.ln() - t + acc.ln()
}

/// Natural log of the complete beta function `B(p, q)`.
pub fn ln_beta<T: Real>(p: T, q: T) -> T {
    ln_gamma(p) + ln_gamma(q) - ln_gamma(p + q)
}

fn check_shapes<T: Real>(p: T, q: T) -> Result<()> {
    if p > T::zero() && q > T::zero() && p.is_finite() && q.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidPrior {
            alpha: p.as_f64(),
            beta: q.as_f64(),
        })
    }
}

/// Regularized lower incomplete beta `I_x(p, q)`.
pub fn regularized_incomplete_beta<T: Real>(x: T, p: T, q: T) -> Result<T> {
    check_shapes(p, q)?;
    if !(x >= T::zero() && x <= T::one()) {
        return Err(Error::out_of_range("x", x.as_f64(), "expected a value in [0, 1]"));
    }
    if x == T::zero() {
        return Ok(T::zero());
    }
    if x == T::one() {
        return Ok(T::one());
    }
    let two = T::lit(2.0);
    // The continued fraction converges fastest below the mean; reflect otherwise.
    if x > (p + T::one()) / (p + q + two) {
        Ok(T::one() - beta_cf_scaled(T::one() - x, q, p))
    } else {
        Ok(beta_cf_scaled(x, p, q))
    }
}

/// Complement `1 - I_x(p, q) = I_{1-x}(q, p)`, computed without cancellation.
pub fn regularized_incomplete_beta_upper<T: Real>(x: T, p: T, q: T) -> Result<T> {
    if !(x >= T::zero() && x <= T::one()) {
        return Err(Error::out_of_range("x", x.as_f64(), "expected a value in [0, 1]"));
    }
    regularized_incomplete_beta(T::one() - x, q, p)
}

/// `x^p (1-x)^q / (p B(p,q))` times the continued fraction for `I_x(p, q)`,
/// evaluated by the modified Lentz method.
fn beta_cf_scaled<T: Real>(x: T, p: T, q: T) -> T {
    let one = T::one();
    let two = T::lit(2.0);
    let tiny = T::min_positive_value() / T::epsilon();
    let eps = T::epsilon();

    let qab = p + q;
    let qap = p + one;
    let qam = p - one;
    let mut c = one;
    let mut d = one - qab * x / qap;
    if d.abs() < tiny {
        d = tiny;
    }
    d = one / d;
    let mut h = d;
    let max_iter = 20_000;
    for m in 1..=max_iter {
        let m_t = T::count(m as u64);
        let m2 = two * m_t;
        let aa = m_t * (q - m_t) * x / ((qam + m2) * (p + m2));
        d = one + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = one + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = one / d;
        h = h * d * c;

        let aa = -(p + m_t) * (qab + m_t) * x / ((p + m2) * (qap + m2));
        d = one + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = one + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = one / d;
        let del = d * c;
        h = h * del;
        if (del - one).abs() <= eps {
            break;
        }
    }
    ln_cf_prefactor(x, p, q).exp() * h
}

/// `ln[x^p (1-x)^q / (p B(p,q))]`.
///
/// For large shapes `lnΓ` runs into the 1e5..1e6 range and the plain form
/// loses ten digits to cancellation. There the Stirling parts are cancelled
/// analytically and the deviation of `x` from `p/(p+q)` goes through `ln_1p`.
fn ln_cf_prefactor<T: Real>(x: T, p: T, q: T) -> T {
    let half = T::lit(0.5);
    if p.min(q) < T::lit(10.0) {
        return p * x.ln() + q * (-x).ln_1p() - ln_beta(p, q) - p.ln();
    }
    let s = p + q;
    let e = x * q - (T::one() - x) * p;
    p * (e / p).ln_1p() + q * (-e / q).ln_1p() - half * (T::lit(2.0) * T::PI()).ln() + half * (p * q / s).ln()
        - (stirling_tail(p) + stirling_tail(q) - stirling_tail(s))
        - p.ln()
}

/// `lnΓ(z) - [(z-½)ln z - z + ½ln 2π]` for `z >= 10`.
fn stirling_tail<T: Real>(z: T) -> T {
    const C: [f64; 6] = [1.0 / 12.0, -1.0 / 360.0, 1.0 / 1260.0, -1.0 / 1680.0, 1.0 / 1188.0, -691.0 / 360_360.0];
    let r = T::one() / z;
    let r2 = r * r;
    let mut acc = T::zero();
    for &c in C.iter().rev() {
        acc = acc * r2 + T::lit(c);
    }
    acc * r
}

/// Unnormalized lower incomplete beta `B(x; p, q) = ∫₀ˣ u^(p-1) (1-u)^(q-1) du`.
///
/// At `x = 1` this is the complete beta function.
pub fn incomplete_beta<T: Real>(x: T, p: T, q: T) -> Result<T> {
    let reg = regularized_incomplete_beta(x, p, q)?;
    Ok(reg * ln_beta(p, q).exp())
}

/// Natural log of `B(hi; p, q) - B(lo; p, q)` for `0 <= lo < hi <= 1`.
///
/// Works from whichever tail keeps the subtraction small, so narrow windows
/// deep in either tail keep their relative accuracy.
pub fn ln_incomplete_beta_window<T: Real>(lo: T, hi: T, p: T, q: T) -> Result<T> {
    if !(lo < hi) {
        return Ok(T::neg_infinity());
    }
    let lower_lo = regularized_incomplete_beta(lo, p, q)?;
    let lower_hi = regularized_incomplete_beta(hi, p, q)?;
    let upper_lo = regularized_incomplete_beta_upper(lo, p, q)?;
    let upper_hi = regularized_incomplete_beta_upper(hi, p, q)?;
    let diff = if lower_hi <= upper_lo {
        lower_hi - lower_lo
    } else {
        upper_lo - upper_hi
    };
    Ok(diff.ln() + ln_beta(p, q))
}

/// Inverse of the regularized incomplete beta in `x`, by bisection.
pub fn beta_quantile<T: Real>(prob: T, p: T, q: T) -> Result<T> {
    check_shapes(p, q)?;
    if !(prob >= T::zero() && prob <= T::one()) {
        return Err(Error::out_of_range("probability", prob.as_f64(), "expected a value in [0, 1]"));
    }
    if prob == T::zero() {
        return Ok(T::zero());
    }
    if prob == T::one() {
        return Ok(T::one());
    }
    let root = bisect(
        |x| regularized_incomplete_beta(x, p, q).unwrap_or(T::nan()) - prob,
        T::zero(),
        T::one(),
        T::epsilon(),
        T::zero(),
    );
    Ok(root.map(|r| r.x).unwrap_or(T::nan()))
}

/// Standard normal quantile.
pub fn normal_quantile<T: Real>(prob: T) -> Result<T> {
    if !(prob > T::zero() && prob < T::one()) {
        return Err(Error::out_of_range("probability", prob.as_f64(), "expected a value in (0, 1)"));
    }
    let z = Normal::standard().inverse_cdf(prob.as_f64());
    Ok(T::lit(z))
}

/// Two-sided critical value for a central interval with coverage `level`.
pub fn two_sided_z<T: Real>(level: T) -> Result<T> {
    if !(level > T::zero() && level < T::one()) {
        return Err(Error::out_of_range("level", level.as_f64(), "expected a value in (0, 1)"));
    }
    normal_quantile(T::lit(0.5) + level * T::lit(0.5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    /// Composite Simpson on a fine grid; independent of the continued fraction.
    fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
        let n = if n % 2 == 1 { n + 1 } else { n };
        let h = (hi - lo) / n as f64;
        let mut s = f(lo) + f(hi);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(lo + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn ln_gamma_known_values() {
        assert_abs_diff_eq!(ln_gamma(1.0_f64), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ln_gamma(2.0_f64), 0.0, epsilon = 1e-14);
        assert_relative_eq!(ln_gamma(10.0_f64), 362_880f64.ln(), max_relative = 1e-14);
        assert_relative_eq!(ln_gamma(0.5_f64), std::f64::consts::PI.sqrt().ln(), max_relative = 1e-13);
        assert_relative_eq!(ln_gamma(1e5_f64), statrs::function::gamma::ln_gamma(1e5), max_relative = 1e-13);
    }

    #[test]
    fn incomplete_beta_examples() {
        assert_abs_diff_eq!(incomplete_beta(1.0_f64, 1.0, 1.0).unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(incomplete_beta(0.5_f64, 1.0, 1.0).unwrap(), 0.5, epsilon = 1e-15);
        assert_relative_eq!(incomplete_beta(0.5_f64, 2.0, 2.0).unwrap(), 1.0 / 12.0, max_relative = 1e-12);
        let quad = simpson(|u| u * (1.0 - u), 0.0, 0.5, 2000);
        assert_relative_eq!(incomplete_beta(0.5_f64, 2.0, 2.0).unwrap(), quad, max_relative = 1e-10);
    }

    #[test]
    fn incomplete_beta_matches_fine_quadrature() {
        for &(p, q) in &[(2.0, 3.0), (4.0, 8.0), (31.0, 71.0), (1.5, 1.0), (7.0, 2.5)] {
            for &x in &[0.05, 0.2, 0.35, 0.5, 0.77, 0.93, 1.0] {
                // all shapes here are >= 1, so the integrand is bounded
                let f = |u: f64| u.powf(p - 1.0) * (1.0 - u).powf(q - 1.0);
                let reference = simpson(f, 0.0, x, 200_000);
                let got = incomplete_beta(x, p, q).unwrap();
                assert!((got - reference).abs() <= 1e-8 * reference.max(1e-30) + 1e-14, "p={p} q={q} x={x}: {got} vs {reference}");
            }
        }
    }

    #[test]
    fn large_shapes_match_high_precision_values() {
        // 40-digit references from an arbitrary-precision hypergeometric evaluation
        let cases = [
            (0.8999, 9e4, 1e4, 0.456_923_086_330_766_716_2),
            (0.9, 9e4, 1e4, 0.498_878_605_643_062_044_57),
            (0.9005, 9e4, 1e4, 0.700_214_035_522_155_926_98),
            (0.1, 101.0, 901.0, 0.477_602_597_790_943_646_69),
            (0.99, 2500.5, 17.25, 0.039_179_393_676_540_204_998),
            (0.9, 2500.5, 17.25, 9.459_217_884_556_916_199_4e-90),
            // 1.88e-76343, below the f64 range
            (0.1, 9e4, 1e4, 0.0),
        ];
        for (x, p, q, want) in cases {
            let got: f64 = regularized_incomplete_beta(x, p, q).unwrap();
            assert!((got - want).abs() <= 1e-10 * want + 1e-300, "({x},{p},{q}) {got} vs {want}");
        }
    }

    #[test]
    fn regularized_matches_statrs() {
        for &(p, q) in &[(0.5, 0.5), (2.0, 3.0), (101.0, 901.0)] {
            for &x in &[1e-3, 0.1, 0.5, 0.9, 0.8999] {
                let ours = regularized_incomplete_beta(x, p, q).unwrap();
                let theirs = statrs::function::beta::beta_reg(p, q, x);
                assert!((ours - theirs).abs() <= 1e-10 * theirs.max(1e-300) + 1e-15, "({p},{q},{x}) {ours} vs {theirs}");
            }
        }
    }

    #[test]
    fn complement_and_window() {
        let up = regularized_incomplete_beta_upper(0.3_f64, 4.0, 8.0).unwrap();
        let low = regularized_incomplete_beta(0.3_f64, 4.0, 8.0).unwrap();
        assert_abs_diff_eq!(up + low, 1.0, epsilon = 1e-14);
        let w = ln_incomplete_beta_window(0.1_f64, 0.9, 31.0, 71.0).unwrap().exp();
        let direct = incomplete_beta(0.9_f64, 31.0, 71.0).unwrap() - incomplete_beta(0.1_f64, 31.0, 71.0).unwrap();
        assert_relative_eq!(w, direct, max_relative = 1e-10);
        assert_eq!(ln_incomplete_beta_window(0.5_f64, 0.5, 2.0, 2.0).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(incomplete_beta(0.5_f64, 0.0, 1.0), Err(Error::InvalidPrior { .. })));
        assert!(regularized_incomplete_beta(1.5_f64, 1.0, 1.0).is_err());
    }

    #[test]
    fn quantile_inverts() {
        for &(p, q) in &[(1.0, 1.0), (4.0, 8.0), (9e4 + 1.0, 1e4 + 1.0)] {
            for &prob in &[1e-12, 0.025, 0.5, 0.975] {
                let x: f64 = beta_quantile(prob, p, q).unwrap();
                let back = regularized_incomplete_beta(x, p, q).unwrap();
                assert!((back - prob).abs() < 1e-9 + 1e-6 * prob, "{p} {q} {prob}");
            }
        }
    }

    #[test]
    fn z_values() {
        assert_abs_diff_eq!(two_sided_z(0.95_f64).unwrap(), 1.959_963_984_540_054, epsilon = 1e-9);
        assert!(two_sided_z(1.0_f64).is_err());
    }
}
