use serde::{Deserialize, Serialize};

use super::{compute_metrics, fit_ridge, mean_std, LinearModel, MetricsError, MetricsReport};
use crate::dataset::{Dataset, FeatureSet, RawFeature};
use crate::gbdt::{fit_named, GbdtModel, Hyperparameters};
use crate::report::{table, usd};
use crate::splits::{verify_no_leakage, FoldPlan, SplitPlan};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Gbdt { hyperparameters: Hyperparameters },
    Ridge { alpha: f64 },
}

impl ModelSpec {
    pub fn gbdt_default() -> Self {
        ModelSpec::Gbdt {
            hyperparameters: Hyperparameters::default(),
        }
    }

    /// Ridge on standardized features with alpha = 1.
    pub fn ridge_default() -> Self {
        ModelSpec::Ridge { alpha: 1.0 }
    }

    pub fn label(&self) -> String {
        match self {
            ModelSpec::Gbdt { .. } => "GBDT".to_string(),
            ModelSpec::Ridge { alpha } => format!("Ridge (alpha={alpha})"),
        }
    }

    pub fn fit(
        &self,
        x: &[Vec<f64>],
        y: &[f64],
        feature_names: Vec<String>,
    ) -> Result<TrainedModel, MetricsError> {
        Ok(match self {
            ModelSpec::Gbdt { hyperparameters } => {
                TrainedModel::Gbdt(fit_named(x, y, hyperparameters, feature_names)?)
            }
            ModelSpec::Ridge { alpha } => TrainedModel::Ridge(fit_ridge(x, y, *alpha, feature_names)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Gbdt(GbdtModel),
    Ridge(LinearModel),
}

impl TrainedModel {
    pub fn predict_rows(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>, MetricsError> {
        match self {
            TrainedModel::Gbdt(m) => Ok(m.predict_many(rows)?),
            TrainedModel::Ridge(m) => Ok(rows.iter().map(|r| m.predict(r)).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub price_min: f64,
    pub price_max: f64,
    pub mean_price: f64,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub model: String,
    pub features: Vec<String>,
    pub folds: Vec<FoldResult>,
    /// `None` if any fold's R² is undefined.
    pub r2_mean: Option<f64>,
    pub r2_std: Option<f64>,
    pub mae_mean: f64,
    pub mae_std: f64,
    pub relative_mae_mean: f64,
}

impl CvReport {
    pub fn k(&self) -> usize {
        self.folds.len()
    }

    /// Fold characteristics and per-fold scores, then a `mean ± std` line.
    pub fn render(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .folds
            .iter()
            .map(|f| {
                vec![
                    format!("Fold {}", f.fold + 1),
                    f.n_test.to_string(),
                    format!("{} -- {}", usd(f.price_min, false), usd(f.price_max, false)),
                    usd(f.mean_price, false),
                    fmt_r2(f.metrics.r2),
                    usd(f.metrics.mae, false),
                ]
            })
            .collect();
        let mut out = format!("{}\n", self.model);
        out.push_str(&table(
            &["Fold", "Samples", "Price Range", "Mean Price", "R2", "MAE"],
            &rows,
        ));
        out.push_str(&format!(
            "CV R2 = {}   CV MAE = {} ± {}   Relative MAE = {:.1}%\n",
            fmt_pm(self.r2_mean, self.r2_std),
            usd(self.mae_mean, false),
            usd(self.mae_std, false),
            self.relative_mae_mean * 100.0
        ));
        out
    }
}

fn fmt_r2(r2: Option<f64>) -> String {
    r2.map_or_else(|| "undefined".to_string(), |v| format!("{v:.3}"))
}

fn fmt_pm(mean: Option<f64>, std: Option<f64>) -> String {
    match (mean, std) {
        (Some(m), Some(s)) => format!("{m:.3} ± {s:.3}"),
        _ => "undefined".to_string(),
    }
}

/// Cross-validate on every encoded feature, with relative MAE referenced to
/// the mean target of `dataset`.
pub fn cross_validate(
    dataset: &Dataset,
    spec: &ModelSpec,
    plan: &FoldPlan,
) -> Result<CvReport, MetricsError> {
    let reference = dataset.target_mean().ok_or(MetricsError::Empty)?;
    cross_validate_with(dataset, spec, plan, &FeatureSet::full(), reference)
}

/// Cross-validate restricted to `features`. Each fold is trained on its
/// complement; folds run on scoped threads and the report is independent of
/// scheduling.
pub fn cross_validate_with(
    dataset: &Dataset,
    spec: &ModelSpec,
    plan: &FoldPlan,
    features: &FeatureSet,
    reference_mean: f64,
) -> Result<CvReport, MetricsError> {
    let n = dataset.len();
    for (i, fold) in plan.folds.iter().enumerate() {
        if fold.len() < 2 {
            return Err(MetricsError::FoldTooSmall {
                fold: i,
                size: fold.len(),
            });
        }
    }
    let x = dataset.design_matrix(features);
    let y = dataset.targets();
    let names = features.names();

    let run_fold = |i: usize| -> Result<FoldResult, MetricsError> {
        let test_idx = &plan.folds[i];
        let train_idx = plan.train_indices(i, n);
        let split = SplitPlan {
            train_indices: train_idx.clone(),
            test_indices: test_idx.clone(),
            seed: 0,
            test_fraction: test_idx.len() as f64 / n as f64,
        };
        let leak = verify_no_leakage(&split, dataset)?;
        if !leak.ok {
            return Err(MetricsError::Leakage {
                fold: i,
                groups: leak.offending_groups,
            });
        }
        let x_train: Vec<Vec<f64>> = train_idx.iter().map(|&j| x[j].clone()).collect();
        let y_train: Vec<f64> = train_idx.iter().map(|&j| y[j]).collect();
        let x_test: Vec<Vec<f64>> = test_idx.iter().map(|&j| x[j].clone()).collect();
        let y_test: Vec<f64> = test_idx.iter().map(|&j| y[j]).collect();
        let model = spec.fit(&x_train, &y_train, names.clone())?;
        let pred = model.predict_rows(&x_test)?;
        let metrics = compute_metrics(&y_test, &pred, reference_mean)?;
        Ok(FoldResult {
            fold: i,
            n_train: train_idx.len(),
            n_test: test_idx.len(),
            price_min: y_test.iter().copied().fold(f64::INFINITY, f64::min),
            price_max: y_test.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean_price: y_test.iter().sum::<f64>() / y_test.len() as f64,
            metrics,
        })
    };

    let folds: Vec<FoldResult> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..plan.folds.len())
            .map(|i| s.spawn(move || run_fold(i)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("fold worker panicked"))
            .collect::<Result<_, _>>()
    })?;

    let r2s: Option<Vec<f64>> = folds.iter().map(|f| f.metrics.r2).collect();
    let (r2_mean, r2_std) = match r2s.as_deref().and_then(mean_std) {
        Some((m, s)) => (Some(m), Some(s)),
        None => (None, None),
    };
    let maes: Vec<f64> = folds.iter().map(|f| f.metrics.mae).collect();
    let (mae_mean, mae_std) = mean_std(&maes).unwrap_or((0.0, 0.0));
    Ok(CvReport {
        model: spec.label(),
        features: names,
        r2_mean,
        r2_std,
        mae_mean,
        mae_std,
        relative_mae_mean: mae_mean / reference_mean,
        folds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub model: String,
    pub cv: CvReport,
    pub train: MetricsReport,
    pub test: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonReport {
    pub fn render(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.model.clone(),
                    fmt_pm(r.cv.r2_mean, r.cv.r2_std),
                    format!("{} ± {}", usd(r.cv.mae_mean, false), usd(r.cv.mae_std, false)),
                    fmt_r2(r.test.r2),
                    usd(r.test.mae, false),
                ]
            })
            .collect();
        table(&["Model", "CV R2", "CV MAE", "Test R2", "Test MAE"], &rows)
    }
}

/// Cross-validate each spec on the training partition of `split` (with
/// `fold_plan` indexing that partition), then refit on the full training
/// partition and score the held-out test side.
pub fn compare_models(
    dataset: &Dataset,
    split: &SplitPlan,
    fold_plan: &FoldPlan,
    specs: &[ModelSpec],
) -> Result<ComparisonReport, MetricsError> {
    compare_models_with(dataset, split, fold_plan, specs, &FeatureSet::full())
}

pub(crate) fn compare_models_with(
    dataset: &Dataset,
    split: &SplitPlan,
    fold_plan: &FoldPlan,
    specs: &[ModelSpec],
    features: &FeatureSet,
) -> Result<ComparisonReport, MetricsError> {
    let leak = verify_no_leakage(split, dataset)?;
    if !leak.ok {
        return Err(MetricsError::Leakage {
            fold: 0,
            groups: leak.offending_groups,
        });
    }
    let reference = dataset.target_mean().ok_or(MetricsError::Empty)?;
    let train = dataset.subset(&split.train_indices);
    let test = dataset.subset(&split.test_indices);
    let x_train = train.design_matrix(features);
    let y_train = train.targets();
    let x_test = test.design_matrix(features);
    let y_test = test.targets();

    let mut rows = Vec::with_capacity(specs.len());
    for spec in specs {
        let cv = cross_validate_with(&train, spec, fold_plan, features, reference)?;
        let model = spec.fit(&x_train, &y_train, features.names())?;
        let train_metrics = compute_metrics(&y_train, &model.predict_rows(&x_train)?, reference)?;
        let test_metrics = compute_metrics(&y_test, &model.predict_rows(&x_test)?, reference)?;
        rows.push(ComparisonRow {
            model: spec.label(),
            cv,
            train: train_metrics,
            test: test_metrics,
        });
    }
    Ok(ComparisonReport { rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub dropped: String,
    pub full: CvReport,
    pub ablated: CvReport,
    /// `ablated.r2_mean − full.r2_mean`.
    pub r2_change: Option<f64>,
}

impl AblationReport {
    pub fn render(&self) -> String {
        let row = |label: String, cv: &CvReport| {
            vec![
                label,
                fmt_pm(cv.r2_mean, cv.r2_std),
                format!("{} ± {}", usd(cv.mae_mean, false), usd(cv.mae_std, false)),
            ]
        };
        let mut out = table(
            &["Model", "CV R2", "CV MAE"],
            &[
                row(format!("{} (all features)", self.full.model), &self.full),
                row(
                    format!("{} (no {})", self.ablated.model, self.dropped),
                    &self.ablated,
                ),
            ],
        );
        if let Some(d) = self.r2_change {
            out.push_str(&format!("R2 change: {d:+.3}\n"));
        }
        out
    }
}

/// Cross-validate with and without one raw feature (tech_stack drops its
/// whole one-hot block).
pub fn ablation(
    dataset: &Dataset,
    fold_plan: &FoldPlan,
    spec: &ModelSpec,
    drop_feature: &str,
) -> Result<AblationReport, MetricsError> {
    let feature: RawFeature = drop_feature.parse()?;
    let reference = dataset.target_mean().ok_or(MetricsError::Empty)?;
    let full = cross_validate_with(dataset, spec, fold_plan, &FeatureSet::full(), reference)?;
    let ablated =
        cross_validate_with(dataset, spec, fold_plan, &FeatureSet::without(feature), reference)?;
    let r2_change = match (full.r2_mean, ablated.r2_mean) {
        (Some(a), Some(b)) => Some(b - a),
        _ => None,
    };
    Ok(AblationReport {
        dropped: feature.name().to_string(),
        full,
        ablated,
        r2_change,
    })
}
