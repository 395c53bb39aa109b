//! Regression metrics, the ridge baseline and the group-aware evaluation
//! harness (cross-validation, model comparison, ablation).

mod cv;
mod ridge;

pub use cv::{
    ablation, compare_models, cross_validate, cross_validate_with, AblationReport,
    ComparisonReport, ComparisonRow, CvReport, FoldResult, ModelSpec, TrainedModel,
};
pub use ridge::{fit_ridge, LinearModel};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::FeatureError;
use crate::gbdt::GbdtError;
use crate::splits::SplitError;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("y_true has {truth} values but y_pred has {pred}")]
    LengthMismatch { truth: usize, pred: usize },
    #[error("cannot score an empty prediction set")]
    Empty,
    #[error("reference mean must be positive, got {0}")]
    BadReference(f64),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("ridge needs at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("fold {fold} holds {size} record(s); at least 2 are required")]
    FoldTooSmall { fold: usize, size: usize },
    #[error("fold {fold} trains on a group it evaluates: {groups:?}")]
    Leakage { fold: usize, groups: Vec<String> },
    #[error("ridge alpha must be finite and >= 0, got {0}")]
    BadAlpha(f64),
    #[error(transparent)]
    Gbdt(#[from] GbdtError),
    #[error(transparent)]
    Split(#[from] SplitError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// `None` when the evaluated targets have zero variance.
    pub r2: Option<f64>,
    pub mae: f64,
    pub rmse: f64,
    pub relative_mae: f64,
    /// Denominator of `relative_mae`.
    pub reference_mean: f64,
    pub n: usize,
}

pub fn compute_metrics(
    y_true: &[f64],
    y_pred: &[f64],
    reference_mean: f64,
) -> Result<MetricsReport, MetricsError> {
    if y_true.len() != y_pred.len() {
        return Err(MetricsError::LengthMismatch {
            truth: y_true.len(),
            pred: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(MetricsError::Empty);
    }
    if !(reference_mean.is_finite() && reference_mean > 0.0) {
        return Err(MetricsError::BadReference(reference_mean));
    }
    if y_true.iter().any(|v| !v.is_finite()) {
        return Err(MetricsError::NonFinite("y_true"));
    }
    if y_pred.iter().any(|v| !v.is_finite()) {
        return Err(MetricsError::NonFinite("y_pred"));
    }
    let n = y_true.len() as f64;
    let mean = y_true.iter().sum::<f64>() / n;
    let ss_tot: f64 = y_true.iter().map(|y| (y - mean).powi(2)).sum();
    let ss_res: f64 = y_true
        .iter()
        .zip(y_pred)
        .map(|(y, p)| (y - p).powi(2))
        .sum();
    let abs_err: f64 = y_true.iter().zip(y_pred).map(|(y, p)| (y - p).abs()).sum();
    let mae = abs_err / n;
    let r2 = (ss_tot > 0.0).then(|| 1.0 - ss_res / ss_tot);
    Ok(MetricsReport {
        r2,
        mae,
        rmse: (ss_res / n).sqrt(),
        relative_mae: mae / reference_mean,
        reference_mean,
        n: y_true.len(),
    })
}

/// Train RMSE over test RMSE; `None` when the test RMSE is zero.
pub fn overfit_ratio(train: &MetricsReport, test: &MetricsReport) -> Option<f64> {
    (test.rmse > 0.0).then(|| train.rmse / test.rmse)
}

/// Mean and population std; `None` for an empty slice.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn report_with_rmse(rmse: f64) -> MetricsReport {
        MetricsReport {
            r2: None,
            mae: rmse,
            rmse,
            relative_mae: 0.0,
            reference_mean: 1.0,
            n: 1,
        }
    }

    #[test]
    fn perfect_predictor() {
        let y = [3.0, 7.0, 11.0, 2.0];
        let m = compute_metrics(&y, &y, 5.0).unwrap();
        assert_eq!((m.r2, m.mae, m.rmse), (Some(1.0), 0.0, 0.0));
    }

    #[test]
    fn mean_predictor_scores_zero() {
        let y = [3.0, 7.0, 11.0, 2.0, 9.5];
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let m = compute_metrics(&y, &[mean; 5], 5.0).unwrap();
        assert_eq!(m.r2, Some(0.0));
    }

    #[test]
    fn relative_mae_arithmetic() {
        let y = [0.0, 7_376.0];
        let p = [3_688.0, 3_688.0];
        let m = compute_metrics(&y, &p, 16_309.0).unwrap();
        assert_eq!(m.mae, 3_688.0);
        assert!((m.relative_mae * 100.0 - 22.6).abs() <= 0.05);
    }

    #[test]
    fn zero_variance_r2_is_undefined() {
        let m = compute_metrics(&[5.0, 5.0], &[4.0, 6.0], 5.0).unwrap();
        assert_eq!(m.r2, None);
        assert_eq!(m.mae, 1.0);
    }

    #[test]
    fn bad_inputs() {
        assert!(matches!(compute_metrics(&[], &[], 1.0), Err(MetricsError::Empty)));
        assert!(matches!(
            compute_metrics(&[1.0], &[1.0, 2.0], 1.0),
            Err(MetricsError::LengthMismatch { .. })
        ));
        assert!(matches!(
            compute_metrics(&[1.0], &[1.0], 0.0),
            Err(MetricsError::BadReference(_))
        ));
    }

    #[test]
    fn overfit_ratio_cases() {
        let r = overfit_ratio(&report_with_rmse(2_874.0), &report_with_rmse(4_720.0)).unwrap();
        assert!((r - 0.609).abs() <= 0.001);
        let same = report_with_rmse(10.0);
        assert_eq!(overfit_ratio(&same, &same), Some(1.0));
        assert_eq!(overfit_ratio(&report_with_rmse(0.0), &same), Some(0.0));
        assert_eq!(overfit_ratio(&same, &report_with_rmse(0.0)), None);
    }

    proptest! {
        #[test]
        fn invariants(pairs in prop::collection::vec((-1e5f64..1e5, -1e5f64..1e5), 1..40), seed in any::<u64>()) {
            let (t, p): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
            let m = compute_metrics(&t, &p, 100.0).unwrap();
            prop_assert!(m.rmse + 1e-9 >= m.mae && m.mae >= 0.0);
            if let Some(r2) = m.r2 { prop_assert!(r2 <= 1.0); }

            // permutation invariance
            let mut idx: Vec<usize> = (0..pairs.len()).collect();
            let k = (seed as usize) % idx.len();
            idx.rotate_left(k);
            idx.reverse();
            let t2: Vec<f64> = idx.iter().map(|&i| t[i]).collect();
            let p2: Vec<f64> = idx.iter().map(|&i| p[i]).collect();
            let m2 = compute_metrics(&t2, &p2, 100.0).unwrap();
            prop_assert!((m.mae - m2.mae).abs() <= 1e-9 * (1.0 + m.mae));
            prop_assert!((m.rmse - m2.rmse).abs() <= 1e-9 * (1.0 + m.rmse));
            match (m.r2, m2.r2) {
                (Some(a), Some(b)) => prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs())),
                (a, b) => prop_assert_eq!(a.is_none(), b.is_none()),
            }
        }
    }
}
