//! Bracketing root finder.

use crate::scalar::Real;

/// Result of a bisection run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root<T> {
    pub x: T,
    pub residual: T,
    pub iterations: usize,
}

/// Bisection on `[lo, hi]`, which must bracket a sign change of `f`.
///
/// Stops when the bracket is narrower than `x_tol` or the residual is
/// smaller than `f_tol`. Returns `None` when the endpoints do not bracket
/// a root.
pub fn bisect<T: Real, F: FnMut(T) -> T>(mut f: F, lo: T, hi: T, x_tol: T, f_tol: T) -> Option<Root<T>> {
    let (mut lo, mut hi) = (lo, hi);
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == T::zero() {
        return Some(Root {
            x: lo,
            residual: f_lo,
            iterations: 0,
        });
    }
    if f_hi == T::zero() {
        return Some(Root {
            x: hi,
            residual: f_hi,
            iterations: 0,
        });
    }
    if (f_lo > T::zero()) == (f_hi > T::zero()) || f_lo.is_nan() || f_hi.is_nan() {
        return None;
    }
    let half = T::lit(0.5);
    let mut best = Root {
        x: lo,
        residual: f_lo,
        iterations: 0,
    };
    // 2000 halvings exhaust any f64 bracket many times over.
    for iterations in 1..=2000 {
        let mid = lo + (hi - lo) * half;
        let f_mid = f(mid);
        best = Root {
            x: mid,
            residual: f_mid,
            iterations,
        };
        if f_mid == T::zero() || f_mid.abs() < f_tol || (hi - lo) < x_tol || mid == lo || mid == hi {
            break;
        }
        if (f_mid > T::zero()) == (f_lo > T::zero()) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Some(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt_two() {
        let r = bisect(|x: f64| x * x - 2.0, 0.0, 2.0, 1e-14, 0.0).unwrap();
        assert!((r.x - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn rejects_non_bracket() {
        assert!(bisect(|x: f64| x * x + 1.0, -1.0, 1.0, 1e-12, 0.0).is_none());
    }

    #[test]
    fn exact_endpoint_root() {
        let r = bisect(|x: f64| x - 1.0, 1.0, 3.0, 1e-12, 0.0).unwrap();
        assert_eq!(r.x, 1.0);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn decreasing_function() {
        let r = bisect(|x: f32| 1.0 - x, 0.0, 4.0, 1e-6, 0.0).unwrap();
        assert!((r.x - 1.0).abs() < 1e-5);
    }
}
