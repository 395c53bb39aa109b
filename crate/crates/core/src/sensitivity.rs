//! Univariate sensitivity sweeps around a baseline deal.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{encode_features, FeatureError, RawFeature, RawFeatures, TechStack};
use crate::gbdt::{GbdtError, GbdtModel};
use crate::report::{table, usd};

#[derive(Debug, Error)]
pub enum SensitivityError {
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Model(#[from] GbdtError),
    #[error("value {value} is not valid for {feature}")]
    BadValue { feature: &'static str, value: f64 },
    #[error("sweep values must be strictly increasing")]
    NotIncreasing,
    #[error("sweep needs at least one value")]
    Empty,
    #[error("first predicted price must be positive, got {0}")]
    NonPositiveStart(f64),
    #[error("model must use the 8 canonical features")]
    NotCanonical,
}

/// The "typical project": $1M revenue, 8 weeks, pain 3, complexity 3,
/// phase 1, custom stack.
pub fn typical_baseline() -> RawFeatures {
    RawFeatures {
        client_revenue: 1_000_000.0,
        est_duration_weeks: 8,
        pain_severity_score: 3,
        integration_complexity: 3,
        phase: 1,
        tech_stack: TechStack::Custom,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityCurve {
    pub feature: RawFeature,
    /// `(value, predicted price)`; tech_stack values are one-hot indices
    /// (0 = no_code, 1 = low_code, 2 = custom).
    pub points: Vec<(f64, f64)>,
    pub baseline: RawFeatures,
}

impl SensitivityCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("value,price\n");
        for (v, p) in &self.points {
            let value = match self.feature {
                RawFeature::TechStack => TechStack::ALL[*v as usize].as_str().to_string(),
                _ => format!("{v}"),
            };
            out.push_str(&format!("{value},{p}\n"));
        }
        out
    }

    pub fn render(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .points
            .iter()
            .map(|(v, p)| {
                let value = match self.feature {
                    RawFeature::TechStack => TechStack::ALL[*v as usize].as_str().to_string(),
                    RawFeature::ClientRevenue => usd(*v, false),
                    _ => {
                        let base = self.baseline.get(self.feature);
                        if *v == base {
                            format!("{v} (baseline)")
                        } else {
                            format!("{v}")
                        }
                    }
                };
                vec![value, usd(*p, false)]
            })
            .collect();
        table(&[self.feature.name(), "Predicted Price"], &rows)
    }
}

fn with_value(base: &RawFeatures, feature: RawFeature, value: f64) -> Result<RawFeatures, SensitivityError> {
    let bad = || SensitivityError::BadValue {
        feature: feature.name(),
        value,
    };
    let mut x = *base;
    let integral = value.fract() == 0.0 && value.is_finite();
    match feature {
        RawFeature::ClientRevenue => x.client_revenue = value,
        RawFeature::EstDurationWeeks => {
            if !integral || value < 1.0 || value > u32::MAX as f64 {
                return Err(bad());
            }
            x.est_duration_weeks = value as u32;
        }
        RawFeature::PainSeverityScore | RawFeature::IntegrationComplexity | RawFeature::Phase => {
            if !integral || !(0.0..=255.0).contains(&value) {
                return Err(bad());
            }
            let v = value as u8;
            match feature {
                RawFeature::PainSeverityScore => x.pain_severity_score = v,
                RawFeature::IntegrationComplexity => x.integration_complexity = v,
                _ => x.phase = v,
            }
        }
        RawFeature::TechStack => {
            if !integral || !(0.0..=2.0).contains(&value) {
                return Err(bad());
            }
            x.tech_stack = TechStack::ALL[value as usize];
        }
    }
    x.validate()?;
    Ok(x)
}

/// Predict at `baseline` with `feature` replaced by each of `values`.
pub fn univariate_sweep(
    model: &GbdtModel,
    baseline: &RawFeatures,
    feature: RawFeature,
    values: &[f64],
) -> Result<SensitivityCurve, SensitivityError> {
    if model.n_features() != 8 {
        return Err(SensitivityError::NotCanonical);
    }
    if values.is_empty() {
        return Err(SensitivityError::Empty);
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SensitivityError::NotIncreasing);
    }
    baseline.validate()?;
    let points = values
        .iter()
        .map(|&v| {
            let x = with_value(baseline, feature, v)?;
            let price = model.predict(encode_features(&x)?.as_slice())?;
            Ok((v, price))
        })
        .collect::<Result<Vec<_>, SensitivityError>>()?;
    Ok(SensitivityCurve {
        feature,
        points,
        baseline: *baseline,
    })
}

/// Sweep tech_stack over its three values.
pub fn tech_stack_sweep(
    model: &GbdtModel,
    baseline: &RawFeatures,
) -> Result<SensitivityCurve, SensitivityError> {
    univariate_sweep(model, baseline, RawFeature::TechStack, &[0.0, 1.0, 2.0])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    NonDecreasing,
    NonIncreasing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub ok: bool,
    /// Indices `(i, i + 1)` of adjacent points that break the direction.
    pub violations: Vec<(usize, usize)>,
    pub max_violation: f64,
}

/// Absolute slack in USD.
pub const MONOTONE_TOLERANCE: f64 = 1.0;

pub fn monotonicity_check(curve: &SensitivityCurve, direction: Direction) -> MonotonicityReport {
    let mut violations = Vec::new();
    let mut max_violation: f64 = 0.0;
    for (i, w) in curve.points.windows(2).enumerate() {
        let step = w[1].1 - w[0].1;
        let drop = match direction {
            Direction::NonDecreasing => -step,
            Direction::NonIncreasing => step,
        };
        if drop > MONOTONE_TOLERANCE {
            violations.push((i, i + 1));
            max_violation = max_violation.max(drop);
        }
    }
    MonotonicityReport {
        ok: violations.is_empty(),
        violations,
        max_violation,
    }
}

/// Last predicted price over first.
pub fn sweep_ratio(curve: &SensitivityCurve) -> Result<f64, SensitivityError> {
    let first = curve.points.first().ok_or(SensitivityError::Empty)?.1;
    let last = curve.points.last().ok_or(SensitivityError::Empty)?.1;
    if !(first > 0.0) {
        return Err(SensitivityError::NonPositiveStart(first));
    }
    Ok(last / first)
}
