use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::MetricsError;

/// Ridge regression on standardized features with an unpenalized intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub feature_names: Vec<String>,
    /// Coefficients on standardized features.
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub means: Vec<f64>,
    /// Population std per feature; zero-variance columns use 1.
    pub stds: Vec<f64>,
    pub alpha: f64,
}

impl LinearModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.intercept
            + self
                .coefficients
                .iter()
                .zip(x)
                .zip(self.means.iter().zip(&self.stds))
                .map(|((b, v), (m, s))| b * (v - m) / s)
                .sum::<f64>()
    }

    /// Coefficients mapped back to raw feature units.
    pub fn raw_coefficients(&self) -> Vec<f64> {
        self.coefficients
            .iter()
            .zip(&self.stds)
            .map(|(b, s)| b / s)
            .collect()
    }
}

/// Closed-form ridge: minimizes ‖y − Zβ − b‖² + α‖β‖² over standardized Z.
///
/// Solved through an SVD pseudo-inverse so that `alpha = 0` on collinear
/// columns (the one-hot block) returns the minimum-norm least-squares fit.
pub fn fit_ridge(
    x: &[Vec<f64>],
    y: &[f64],
    alpha: f64,
    feature_names: Vec<String>,
) -> Result<LinearModel, MetricsError> {
    let n = x.len();
    if n < 2 {
        return Err(MetricsError::TooFewRows(n));
    }
    if y.len() != n {
        return Err(MetricsError::LengthMismatch {
            truth: y.len(),
            pred: n,
        });
    }
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(MetricsError::BadAlpha(alpha));
    }
    let d = x[0].len();
    if x.iter().any(|r| r.len() != d || r.iter().any(|v| !v.is_finite())) {
        return Err(MetricsError::NonFinite("X"));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(MetricsError::NonFinite("y"));
    }

    let nf = n as f64;
    let means: Vec<f64> = (0..d)
        .map(|j| x.iter().map(|r| r[j]).sum::<f64>() / nf)
        .collect();
    let stds: Vec<f64> = (0..d)
        .map(|j| {
            let var = x.iter().map(|r| (r[j] - means[j]).powi(2)).sum::<f64>() / nf;
            let s = var.sqrt();
            if s > 0.0 {
                s
            } else {
                1.0
            }
        })
        .collect();
    let y_mean = y.iter().sum::<f64>() / nf;

    let z = DMatrix::from_fn(n, d, |i, j| (x[i][j] - means[j]) / stds[j]);
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));
    let gram = z.transpose() * &z + DMatrix::identity(d, d) * alpha;
    let rhs = z.transpose() * yc;
    let svd = gram.svd(true, true);
    let tol = svd.singular_values.max() * 1e-12 * d as f64;
    let beta = svd
        .solve(&rhs, tol)
        .map_err(|_| MetricsError::NonFinite("ridge solution"))?;

    Ok(LinearModel {
        feature_names,
        coefficients: beta.iter().copied().collect(),
        intercept: y_mean,
        means,
        stds,
        alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::compute_metrics;

    fn names(d: usize) -> Vec<String> {
        (0..d).map(|i| format!("x{i}")).collect()
    }

    #[test]
    fn ols_recovers_exact_line() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = x.iter().map(|r| 2.0 * r[0] + 5.0).collect();
        let m = fit_ridge(&x, &y, 0.0, names(1)).unwrap();
        assert!((m.raw_coefficients()[0] - 2.0).abs() < 1e-10);
        let pred: Vec<f64> = x.iter().map(|r| m.predict(r)).collect();
        for (p, t) in pred.iter().zip(&y) {
            assert!((p - t).abs() < 1e-9);
        }
        let r2 = compute_metrics(&y, &pred, 10.0).unwrap().r2.unwrap();
        assert!((r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn huge_alpha_collapses_to_mean() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let y: Vec<f64> = x.iter().map(|r| 3.0 * r[0] - r[1] + 1.0).collect();
        let m = fit_ridge(&x, &y, 1e12, names(2)).unwrap();
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        for c in &m.coefficients {
            assert!(c.abs() < 1e-6, "{c}");
        }
        assert!((m.predict(&x[3]) - mean).abs() < 1e-4);
    }

    #[test]
    fn three_point_hand_solution() {
        // x = (1, 2, 3), y = (1, 3, 2), alpha = 1.
        // mean x = 2, population std = sqrt(2/3); z = (−1, 0, 1)·sqrt(3/2).
        // zᵀz = 3, zᵀ(y − 2) = (−1·−1 + 1·0)·sqrt(3/2) = sqrt(3/2).
        // β = sqrt(3/2) / (3 + 1); raw slope = β / sqrt(2/3) = (3/2)/4 = 0.375.
        let x = vec![vec![1.0], vec![2.0], vec![3.0]];
        let y = vec![1.0, 3.0, 2.0];
        let m = fit_ridge(&x, &y, 1.0, names(1)).unwrap();
        let beta = (1.5f64).sqrt() / 4.0;
        assert!((m.coefficients[0] - beta).abs() < 1e-9);
        assert!((m.raw_coefficients()[0] - 0.375).abs() < 1e-9);
        assert!((m.intercept - 2.0).abs() < 1e-12);
        assert!((m.predict(&[4.0]) - 2.75).abs() < 1e-9);
    }

    #[test]
    fn alpha_zero_matches_normal_equations_on_four_points() {
        // y = 1 + 2a − b exactly; OLS must recover it.
        let x = vec![
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![2.0, 3.0],
            vec![3.0, 1.0],
        ];
        let y: Vec<f64> = x.iter().map(|r| 1.0 + 2.0 * r[0] - r[1]).collect();
        let m = fit_ridge(&x, &y, 0.0, names(2)).unwrap();
        let raw = m.raw_coefficients();
        assert!((raw[0] - 2.0).abs() < 1e-9 && (raw[1] + 1.0).abs() < 1e-9);
        assert!((m.predict(&[0.0, 0.0]) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_std_column_tolerated() {
        let x: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64, 7.0]).collect();
        let y: Vec<f64> = (0..5).map(|i| i as f64).collect();
        let m = fit_ridge(&x, &y, 1.0, names(2)).unwrap();
        assert_eq!(m.stds[1], 1.0);
        assert!(m.coefficients[1].abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            fit_ridge(&[vec![1.0]], &[1.0], 1.0, names(1)),
            Err(MetricsError::TooFewRows(1))
        ));
        assert!(matches!(
            fit_ridge(&[vec![1.0], vec![f64::NAN]], &[1.0, 2.0], 1.0, names(1)),
            Err(MetricsError::NonFinite(_))
        ));
    }
}
