//! Regularized gradient-boosted regression trees.
//!
//! Squared-error boosting with second-order split gain, L1 soft-thresholded
//! and L2-shrunk leaf weights, per-tree row and column subsampling, and
//! exact greedy split search. Training is single-threaded and fully
//! deterministic for a given seed; a trained [`GbdtModel`] is immutable and
//! can be shared freely across threads.

mod tree;

pub use tree::TreeNode;

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::FEATURE_NAMES;
use tree::SplitParams;

pub const FORMAT_VERSION: &str = "mlat-gbdt/1";

#[derive(Debug, Error)]
pub enum GbdtError {
    #[error("training data is empty")]
    EmptyData,
    #[error("X has {rows} rows but y has {targets} values")]
    LengthMismatch { rows: usize, targets: usize },
    #[error("row {row} has {got} features, expected {expected}")]
    RaggedRow {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error("feature_names has {names} entries but the data has {columns} columns")]
    NameCount { names: usize, columns: usize },
    #[error("input has {got} features, model expects {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("unsupported artifact format_version {found:?} (expected {expected:?})")]
    Version { found: String, expected: String },
    #[error("malformed model artifact: {0}")]
    Malformed(String),
    #[error("inconsistent model artifact: {0}")]
    Inconsistent(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparameters {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub subsample: f64,
    pub colsample_bytree: f64,
    pub reg_alpha: f64,
    pub reg_lambda: f64,
    pub min_child_weight: f64,
    pub min_split_gain: f64,
    pub seed: u64,
}

impl Default for Hyperparameters {
    /// The small-data regime: 50 shallow trees, slow learning rate, 80% row
    /// and column sampling, light L1, unit L2 and at least 3 rows per leaf.
    fn default() -> Self {
        Hyperparameters {
            n_estimators: 50,
            max_depth: 3,
            learning_rate: 0.05,
            subsample: 0.8,
            colsample_bytree: 0.8,
            reg_alpha: 0.1,
            reg_lambda: 1.0,
            min_child_weight: 3.0,
            min_split_gain: 0.0,
            seed: 42,
        }
    }
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<(), GbdtError> {
        let bad = |msg: &str| Err(GbdtError::InvalidHyperparameter(msg.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad("learning_rate must lie in (0, 1]");
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return bad("subsample must lie in (0, 1]");
        }
        if !(self.colsample_bytree > 0.0 && self.colsample_bytree <= 1.0) {
            return bad("colsample_bytree must lie in (0, 1]");
        }
        for (name, v) in [
            ("reg_alpha", self.reg_alpha),
            ("reg_lambda", self.reg_lambda),
            ("min_split_gain", self.min_split_gain),
            ("min_child_weight", self.min_child_weight),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(&format!("{name} must be finite and >= 0"));
            }
        }
        if self.max_depth < 1 {
            return bad("max_depth must be >= 1");
        }
        Ok(())
    }

    /// Apply `key=value` overrides.
    pub fn with_override(mut self, key: &str, value: &str) -> Result<Self, GbdtError> {
        let parse_f = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| GbdtError::InvalidHyperparameter(format!("{key}: not a number: {v}")))
        };
        let parse_u = |v: &str| {
            v.parse::<u64>().map_err(|_| {
                GbdtError::InvalidHyperparameter(format!("{key}: not a non-negative integer: {v}"))
            })
        };
        match key {
            "n_estimators" => self.n_estimators = parse_u(value)? as usize,
            "max_depth" => self.max_depth = parse_u(value)? as usize,
            "learning_rate" => self.learning_rate = parse_f(value)?,
            "subsample" => self.subsample = parse_f(value)?,
            "colsample_bytree" => self.colsample_bytree = parse_f(value)?,
            "reg_alpha" => self.reg_alpha = parse_f(value)?,
            "reg_lambda" => self.reg_lambda = parse_f(value)?,
            "min_child_weight" => self.min_child_weight = parse_f(value)?,
            "min_split_gain" => self.min_split_gain = parse_f(value)?,
            "seed" => self.seed = parse_u(value)?,
            other => {
                return Err(GbdtError::InvalidHyperparameter(format!(
                    "unknown hyperparameter {other:?}"
                )))
            }
        }
        self.validate()?;
        Ok(self)
    }

    fn split_params(&self) -> SplitParams {
        SplitParams {
            max_depth: self.max_depth,
            reg_alpha: self.reg_alpha,
            reg_lambda: self.reg_lambda,
            min_child_weight: self.min_child_weight,
            min_split_gain: self.min_split_gain,
        }
    }
}

/// A trained ensemble. Prediction is `base_score + learning_rate · Σ tree(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GbdtModel {
    pub format_version: String,
    pub base_score: f64,
    pub learning_rate: f64,
    pub feature_names: Vec<String>,
    pub hyperparameters: Hyperparameters,
    pub trees: Vec<TreeNode>,
    /// Left unset by [`fit`] so that artifacts stay reproducible.
    pub trained_at: Option<String>,
    pub n_train: usize,
}

/// Train on `x` (rows of equal width) and `y` using the canonical 8 feature
/// names.
pub fn fit(x: &[Vec<f64>], y: &[f64], hp: &Hyperparameters) -> Result<GbdtModel, GbdtError> {
    let names = FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
    fit_named(x, y, hp, names)
}

pub fn fit_named(
    x: &[Vec<f64>],
    y: &[f64],
    hp: &Hyperparameters,
    feature_names: Vec<String>,
) -> Result<GbdtModel, GbdtError> {
    hp.validate()?;
    if x.is_empty() || y.is_empty() {
        return Err(GbdtError::EmptyData);
    }
    if x.len() != y.len() {
        return Err(GbdtError::LengthMismatch {
            rows: x.len(),
            targets: y.len(),
        });
    }
    let d = x[0].len();
    for (i, row) in x.iter().enumerate() {
        if row.len() != d {
            return Err(GbdtError::RaggedRow {
                row: i,
                got: row.len(),
                expected: d,
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(GbdtError::NonFinite("X"));
        }
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(GbdtError::NonFinite("y"));
    }
    if feature_names.len() != d {
        return Err(GbdtError::NameCount {
            names: feature_names.len(),
            columns: d,
        });
    }

    let n = y.len();
    let base_score = mean(y);
    let mut pred = vec![base_score; n];
    let mut grad = vec![0.0; n];
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    let params = hp.split_params();
    let all_rows: Vec<usize> = (0..n).collect();
    let all_cols: Vec<usize> = (0..d).collect();

    let mut trees = Vec::with_capacity(hp.n_estimators);
    for _ in 0..hp.n_estimators {
        let rows = sample_sorted(&mut rng, n, hp.subsample, &all_rows);
        let cols = sample_sorted(&mut rng, d, hp.colsample_bytree, &all_cols);
        for &i in &rows {
            grad[i] = pred[i] - y[i];
        }
        let tree = tree::grow(x, &grad, &rows, &cols, &params);
        for (p, row) in pred.iter_mut().zip(x) {
            *p += hp.learning_rate * tree.predict(row);
        }
        trees.push(tree);
    }

    Ok(GbdtModel {
        format_version: FORMAT_VERSION.to_string(),
        base_score,
        learning_rate: hp.learning_rate,
        feature_names,
        hyperparameters: hp.clone(),
        trees,
        trained_at: None,
        n_train: n,
    })
}

/// Mean with one residual-correction pass, so that a constant column returns
/// its value exactly.
fn mean(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let m = y.iter().sum::<f64>() / n;
    m + y.iter().map(|v| v - m).sum::<f64>() / n
}

/// Without-replacement sample of `round(rate · n)` (at least 1) indices,
/// ascending. Draws nothing from the RNG when `rate == 1`.
fn sample_sorted(rng: &mut ChaCha8Rng, n: usize, rate: f64, all: &[usize]) -> Vec<usize> {
    if rate >= 1.0 {
        return all.to_vec();
    }
    let k = ((rate * n as f64).round() as usize).clamp(1, n);
    let mut picked = rand::seq::index::sample(rng, n, k).into_vec();
    picked.sort_unstable();
    picked
}

impl GbdtModel {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64, GbdtError> {
        if x.len() != self.feature_names.len() {
            return Err(GbdtError::DimensionMismatch {
                got: x.len(),
                expected: self.feature_names.len(),
            });
        }
        Ok(self.predict_unchecked(x))
    }

    pub(crate) fn predict_unchecked(&self, x: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict(x)).sum();
        self.base_score + self.learning_rate * sum
    }

    pub fn predict_many(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>, GbdtError> {
        rows.iter().map(|r| self.predict(r)).collect()
    }

    /// Share of total realized split gain per feature, in `feature_names`
    /// order. All zeros when the model never split.
    pub fn feature_importance(&self) -> Vec<(String, f64)> {
        let mut gains = vec![0.0; self.feature_names.len()];
        for t in &self.trees {
            t.visit_splits(&mut |f, g| gains[f] += g);
        }
        let total: f64 = gains.iter().sum();
        self.feature_names
            .iter()
            .zip(gains)
            .map(|(name, g)| (name.clone(), if total > 0.0 { g / total } else { 0.0 }))
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, GbdtError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| GbdtError::Malformed(e.to_string()))?;
        match value.get("format_version").and_then(|v| v.as_str()) {
            Some(FORMAT_VERSION) => {}
            Some(other) => {
                return Err(GbdtError::Version {
                    found: other.to_string(),
                    expected: FORMAT_VERSION.to_string(),
                })
            }
            None => return Err(GbdtError::Malformed("missing format_version".into())),
        }
        let model: GbdtModel =
            serde_json::from_value(value).map_err(|e| GbdtError::Malformed(e.to_string()))?;
        model.check_consistency()?;
        Ok(model)
    }

    fn check_consistency(&self) -> Result<(), GbdtError> {
        let d = self.feature_names.len();
        if d == 0 {
            return Err(GbdtError::Inconsistent("no feature names".into()));
        }
        if let Some(max) = self.trees.iter().filter_map(TreeNode::max_feature_index).max() {
            if max >= d {
                return Err(GbdtError::Inconsistent(format!(
                    "trees reference feature index {max} but only {d} feature names are declared"
                )));
            }
        }
        if !(self.base_score.is_finite()
            && self.learning_rate.is_finite()
            && self.trees.iter().all(TreeNode::all_finite))
        {
            return Err(GbdtError::Inconsistent("non-finite parameter".into()));
        }
        if self.learning_rate != self.hyperparameters.learning_rate {
            return Err(GbdtError::Inconsistent(
                "learning_rate disagrees with hyperparameters".into(),
            ));
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), GbdtError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GbdtError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }
}

pub fn save_model(model: &GbdtModel, path: impl AsRef<Path>) -> Result<(), GbdtError> {
    model.save(path)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<GbdtModel, GbdtError> {
    GbdtModel::load(path)
}
