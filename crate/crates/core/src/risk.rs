//! Empirical risk under the Euclidean metric on labels.

use alloc::vec::Vec;

use crate::math;
use crate::{Error, Points, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct RiskReport {
    /// Mean of `per_point_losses`.
    pub empirical_risk: f64,
    pub per_point_losses: Vec<f64>,
}

impl RiskReport {
    fn from_losses(per_point_losses: Vec<f64>) -> Self {
        let empirical_risk = per_point_losses.iter().sum::<f64>() / per_point_losses.len() as f64;
        Self {
            empirical_risk,
            per_point_losses,
        }
    }
}

/// `n⁻¹ Σ ‖f(x_i) − y_i‖`.
pub fn empirical_risk(predictions: &Points, labels: &Points) -> Result<RiskReport> {
    check(predictions, labels)?;
    let losses = predictions
        .rows()
        .zip(labels.rows())
        .map(|(p, y)| math::dist(p, y))
        .collect();
    Ok(RiskReport::from_losses(losses))
}

/// `n⁻¹ Σ ‖f(x_i) − y_i‖²`.
pub fn squared_loss(predictions: &Points, labels: &Points) -> Result<RiskReport> {
    check(predictions, labels)?;
    let losses = predictions
        .rows()
        .zip(labels.rows())
        .map(|(p, y)| math::dist_sq(p, y))
        .collect();
    Ok(RiskReport::from_losses(losses))
}

fn check(predictions: &Points, labels: &Points) -> Result<()> {
    if predictions.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: labels.len(),
        });
    }
    if predictions.dim() != labels.dim() {
        return Err(Error::DimensionMismatch {
            expected: labels.dim(),
            found: predictions.dim(),
        });
    }
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::vec::Vec;

    fn pts<const D: usize>(rows: &[[f64; D]]) -> Points {
        Points::from_rows(rows).unwrap()
    }

    #[test]
    fn identity_is_zero() {
        let y = pts(&[[1.0, 2.0], [-3.0, 0.5]]);
        let r = empirical_risk(&y, &y).unwrap();
        assert_eq!(r.empirical_risk, 0.0);
        assert!(r.per_point_losses.iter().all(|&l| l == 0.0));
        assert_eq!(squared_loss(&y, &y).unwrap().empirical_risk, 0.0);
    }

    #[test]
    fn formula_arithmetic() {
        let r = empirical_risk(&pts(&[[0.0], [0.0]]), &pts(&[[3.0], [4.0]])).unwrap();
        assert_eq!(r.empirical_risk, 3.5);
        let r = empirical_risk(&pts(&[[0.0, 0.0]]), &pts(&[[3.0, 4.0]])).unwrap();
        assert_eq!(r.per_point_losses, [5.0]);
        let r = squared_loss(&pts(&[[0.0, 0.0]]), &pts(&[[3.0, 4.0]])).unwrap();
        assert_eq!(r.per_point_losses, [25.0]);
        let r = squared_loss(
            &pts(&[[0.0, 0.0], [1.0, 1.0]]),
            &pts(&[[3.0, 4.0], [1.0, 0.0]]),
        )
        .unwrap();
        assert_eq!(r.empirical_risk, 13.0);
    }

    #[test]
    fn mismatches_are_errors() {
        assert!(matches!(
            empirical_risk(&pts(&[[0.0]]), &pts(&[[0.0], [1.0]])),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            squared_loss(&pts(&[[0.0, 1.0]]), &pts(&[[0.0]])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    proptest! {
        #[test]
        fn triangle_inequality(a in prop::array::uniform3(-1e3..1e3f64),
                               b in prop::array::uniform3(-1e3..1e3f64),
                               c in prop::array::uniform3(-1e3..1e3f64)) {
            let ab = math::dist(&a, &b);
            let bc = math::dist(&b, &c);
            let ac = math::dist(&a, &c);
            prop_assert!(ac <= ab + bc + 1e-9 * (ab + bc).max(1.0));
        }

        #[test]
        fn risk_is_permutation_invariant(rows in prop::collection::vec((prop::array::uniform2(-10.0..10.0f64), prop::array::uniform2(-10.0..10.0f64)), 1..20),
                                         rot in 0usize..20) {
            let p: Vec<[f64; 2]> = rows.iter().map(|r| r.0).collect();
            let y: Vec<[f64; 2]> = rows.iter().map(|r| r.1).collect();
            let k = rot % rows.len();
            let mut pr = p.clone();
            let mut yr = y.clone();
            pr.rotate_left(k);
            yr.rotate_left(k);
            pr.reverse();
            yr.reverse();
            for f in [empirical_risk, squared_loss] {
                let a = f(&pts(&p), &pts(&y)).unwrap();
                let b = f(&pts(&pr), &pts(&yr)).unwrap();
                prop_assert!((a.empirical_risk - b.empirical_risk).abs() <= 1e-12 * a.empirical_risk.max(1.0));
                let mean = a.per_point_losses.iter().sum::<f64>() / a.per_point_losses.len() as f64;
                prop_assert!((a.empirical_risk - mean).abs() <= 1e-12 * mean.max(1e-300));
            }
        }
    }
}
