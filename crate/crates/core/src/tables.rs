//! Regeneration of the heuristic tables: the pretest needed for a posttest
//! of 1 or 0.5 as κ grows, and the pretest range implied by `∏κθ`.
//!
//! Both tables print two decimals, the granularity of the published ones.

use serde::Serialize;

use crate::heuristics::{mcgee_delta, pretest_estimate, FindingSet, HeuristicConstant};
use crate::scalar::{clamp_unit, Real};
use crate::error::Result;

pub const TABLE3_KAPPAS: [u32; 10] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10];
pub const TABLE4_KAPPAS: [u32; 19] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Table3Row<T> {
    pub kappa: T,
    /// `ln κ · slope`.
    pub delta: T,
    /// Pretest that McGee's rule lifts to 1.
    pub phi_one: T,
    /// Pretest that McGee's rule lifts to 0.5.
    pub phi_half: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Table4Row<T> {
    pub kappa_theta: T,
    pub mean: T,
    pub min: T,
    pub max: T,
}

pub fn table3<T: Real>(c: &HeuristicConstant<T>) -> Vec<Table3Row<T>> {
    TABLE3_KAPPAS
        .iter()
        .map(|&k| {
            let kappa = T::count(k.into());
            let delta = mcgee_delta(kappa, c);
            Table3Row {
                kappa,
                delta,
                phi_one: clamp_unit(T::one() - delta),
                phi_half: clamp_unit(T::lit(0.5) - delta),
            }
        })
        .collect()
}

pub fn table4<T: Real>(c: &HeuristicConstant<T>) -> Result<Vec<Table4Row<T>>> {
    TABLE4_KAPPAS
        .iter()
        .map(|&k| {
            let kappa = T::count(k.into());
            let est = pretest_estimate(&FindingSet::from_kappas(&[kappa])?, c);
            Ok(Table4Row {
                kappa_theta: kappa,
                mean: est.mean.value(),
                min: est.min_bound.value(),
                max: est.max_bound.value(),
            })
        })
        .collect()
}

pub fn render_table3<T: Real>(rows: &[Table3Row<T>]) -> String {
    let mut out = String::from("kappa,ln(kappa)/4.54,phi_1.0,phi_0.5\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:.2},{:.2},{:.2}\n",
            r.kappa.as_f64(),
            r.delta.as_f64(),
            r.phi_one.as_f64(),
            r.phi_half.as_f64()
        ));
    }
    out
}

pub fn render_table4<T: Real>(rows: &[Table4Row<T>]) -> String {
    let mut out = String::from("kappa_theta,mean,min,max\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:.2},{:.2},{}\n",
            r.kappa_theta.as_f64(),
            r.mean.as_f64(),
            r.min.as_f64(),
            r.max.as_f64()
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOLDEN3: &str = include_str!("../golden/table3.csv");
    const GOLDEN4: &str = include_str!("../golden/table4.csv");

    #[test]
    fn table3_matches_golden() {
        assert_eq!(render_table3(&table3::<f64>(&HeuristicConstant::default())), GOLDEN3);
    }

    #[test]
    fn table4_matches_golden() {
        assert_eq!(render_table4(&table4::<f64>(&HeuristicConstant::default()).unwrap()), GOLDEN4);
    }

    #[test]
    fn table4_mean_is_midpoint() {
        for r in table4::<f64>(&HeuristicConstant::default()).unwrap() {
            assert_eq!(r.mean, (1.0 + r.min) / 2.0);
        }
    }

    #[test]
    fn f32_tables_render_the_same() {
        assert_eq!(render_table3(&table3::<f32>(&HeuristicConstant::default())), GOLDEN3);
        assert_eq!(render_table4(&table4::<f32>(&HeuristicConstant::default()).unwrap()), GOLDEN4);
    }
}
