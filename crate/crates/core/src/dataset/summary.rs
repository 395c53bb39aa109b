use serde::{Deserialize, Serialize};

use super::{Dataset, DatasetError, Provenance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSummary {
    pub name: String,
    pub mean: f64,
    /// Population standard deviation (n denominator).
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl ColumnSummary {
    pub fn from_values(name: &str, values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(ColumnSummary {
            name: name.to_string(),
            // Summation error can push the mean a hair outside [min, max] for
            // constant columns.
            mean: mean.clamp(min, max),
            std: var.sqrt(),
            min,
            max,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub n: usize,
    pub real: usize,
    pub synthetic: usize,
    pub distinct_groups: usize,
    /// Numeric features in canonical order, then `price`.
    pub columns: Vec<ColumnSummary>,
    /// Share of records per tech_stack value (no_code, low_code, custom).
    pub tech_stack_shares: [f64; 3],
}

impl DatasetSummary {
    pub fn column(&self, name: &str) -> Option<&ColumnSummary> {
        self.columns.iter().find(|c| c.name == name)
    }
}

pub fn summarize(dataset: &Dataset) -> Result<DatasetSummary, DatasetError> {
    if dataset.is_empty() {
        return Err(DatasetError::Empty);
    }
    let recs = dataset.records();
    let col = |name: &str, f: &dyn Fn(&super::DealRecord) -> f64| {
        let values: Vec<f64> = recs.iter().map(f).collect();
        ColumnSummary::from_values(name, &values).expect("non-empty")
    };
    let columns = vec![
        col("client_revenue", &|r| r.client_revenue),
        col("est_duration_weeks", &|r| r.est_duration_weeks as f64),
        col("pain_severity_score", &|r| r.pain_severity_score as f64),
        col("integration_complexity", &|r| r.integration_complexity as f64),
        col("phase", &|r| r.phase as f64),
        col("price", &|r| r.price),
    ];
    let mut shares = [0.0; 3];
    for r in recs {
        shares[r.tech_stack.index()] += 1.0;
    }
    let n = recs.len();
    shares.iter_mut().for_each(|s| *s /= n as f64);
    let real = recs
        .iter()
        .filter(|r| r.provenance == Provenance::Real)
        .count();
    Ok(DatasetSummary {
        n,
        real,
        synthetic: n - real,
        distinct_groups: dataset.distinct_groups(),
        columns,
        tech_stack_shares: shares,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_single_value() {
        let c = ColumnSummary::from_values("price", &[10_000.0]).unwrap();
        assert_eq!((c.mean, c.std, c.min, c.max), (10_000.0, 0.0, 10_000.0, 10_000.0));
    }

    #[test]
    fn two_values_population_std() {
        let c = ColumnSummary::from_values("price", &[10_000.0, 20_000.0]).unwrap();
        assert_eq!(c.mean, 15_000.0);
        assert_eq!(c.std, 5_000.0);
    }

    #[test]
    fn empty_dataset_errors() {
        assert!(matches!(
            summarize(&Dataset::default()),
            Err(DatasetError::Empty)
        ));
    }
}
