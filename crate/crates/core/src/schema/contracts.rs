use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{FeatureError, RawFeatures, TechStack};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Confidence {
    Low,
    Medium,
    High,
}

impl fmt::Display for Confidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Confidence::Low => "low",
            Confidence::Medium => "medium",
            Confidence::High => "high",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientRevenue {
    pub annual_revenue: f64,
    pub currency: String,
    pub source: String,
    pub confidence: Confidence,
    pub year: String,
}

/// Research agent output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResearchFindings {
    pub client_revenue: ClientRevenue,
    pub company_summary: String,
    pub prospect_summary: String,
}

/// Facts pulled from a sales-call transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptFacts {
    pub prospect_name: String,
    pub company_name: String,
    pub phase: i64,
    pub est_duration_weeks: i64,
    pub pain_severity_score: i64,
    pub integration_complexity: i64,
    pub tech_stack: TechStack,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineEntry {
    pub week: String,
    pub title: String,
    pub focus_goal: String,
    pub activities: Vec<String>,
    pub deliverables: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricingSection {
    pub total_price: f64,
    pub currency: String,
    pub deposit_amount: f64,
    pub final_amount: f64,
    pub value_justification: String,
}

impl PricingSection {
    /// Split `total` into deposit and final payments in whole cents; the
    /// deposit takes the odd cent.
    pub fn split(total: f64) -> (f64, f64) {
        let cents = (total * 100.0).round() as i64;
        let final_cents = cents / 2;
        let deposit_cents = cents - final_cents;
        (deposit_cents as f64 / 100.0, final_cents as f64 / 100.0)
    }
}

/// Draft agent output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposalDoc {
    pub project_name: String,
    pub primary_goals_intro: String,
    pub goals_list: Vec<String>,
    pub deliverables_intro: String,
    pub deliverables_list: Vec<String>,
    pub client_requirements: Vec<String>,
    pub timeline_breakdown: Vec<TimelineEntry>,
    pub pricing_section: PricingSection,
}

/// Deposit plus final must equal the total to the cent.
pub fn check_pricing_consistency(pricing: &PricingSection) -> Result<(), String> {
    let diff = pricing.deposit_amount + pricing.final_amount - pricing.total_price;
    if diff.abs() > 0.005 {
        return Err(format!(
            "deposit_amount {} + final_amount {} does not equal total_price {}",
            pricing.deposit_amount, pricing.final_amount, pricing.total_price
        ));
    }
    Ok(())
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExtractError {
    #[error("revenue is reported in {0}; currency conversion out of scope, only USD is accepted")]
    Currency(String),
    #[error(transparent)]
    Feature(#[from] FeatureError),
}

fn to_u8(field: &'static str, v: i64, max: i64) -> Result<u8, FeatureError> {
    u8::try_from(v).map_err(|_| FeatureError::OutOfRange {
        field,
        value: v as f64,
        min: 1.0,
        max: max as f64,
    })
}

/// Map research findings and transcript facts onto the six raw model inputs.
/// The revenue confidence is returned alongside for the pricing decision.
pub fn extract_features(
    findings: &ResearchFindings,
    facts: &TranscriptFacts,
) -> Result<(RawFeatures, Confidence), ExtractError> {
    let rev = &findings.client_revenue;
    if rev.currency != "USD" {
        return Err(ExtractError::Currency(rev.currency.clone()));
    }
    let weeks = u32::try_from(facts.est_duration_weeks).map_err(|_| FeatureError::OutOfRange {
        field: "est_duration_weeks",
        value: facts.est_duration_weeks as f64,
        min: 1.0,
        max: f64::INFINITY,
    })?;
    let raw = RawFeatures {
        client_revenue: rev.annual_revenue,
        est_duration_weeks: weeks,
        pain_severity_score: to_u8("pain_severity_score", facts.pain_severity_score, 5)?,
        integration_complexity: to_u8("integration_complexity", facts.integration_complexity, 5)?,
        phase: to_u8("phase", facts.phase, 4)?,
        tech_stack: facts.tech_stack,
    };
    raw.validate()?;
    Ok((raw, rev.confidence))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn findings(currency: &str, confidence: Confidence) -> ResearchFindings {
        ResearchFindings {
            client_revenue: ClientRevenue {
                annual_revenue: 1_000_000.0,
                currency: currency.into(),
                source: "annual report".into(),
                confidence,
                year: "2024".into(),
            },
            company_summary: "c".into(),
            prospect_summary: "p".into(),
        }
    }

    fn facts() -> TranscriptFacts {
        TranscriptFacts {
            prospect_name: "Dana".into(),
            company_name: "Acme".into(),
            phase: 1,
            est_duration_weeks: 8,
            pain_severity_score: 3,
            integration_complexity: 4,
            tech_stack: TechStack::Custom,
        }
    }

    #[test]
    fn payload_from_findings_and_facts() {
        let (raw, conf) = extract_features(&findings("USD", Confidence::High), &facts()).unwrap();
        assert_eq!(
            raw,
            RawFeatures {
                client_revenue: 1_000_000.0,
                est_duration_weeks: 8,
                pain_severity_score: 3,
                integration_complexity: 4,
                phase: 1,
                tech_stack: TechStack::Custom,
            }
        );
        assert_eq!(conf, Confidence::High);
    }

    #[test]
    fn non_usd_rejected() {
        let err = extract_features(&findings("EUR", Confidence::High), &facts()).unwrap_err();
        assert!(err.to_string().contains("currency conversion out of scope"));
    }

    #[test]
    fn low_confidence_is_forwarded() {
        let (_, conf) = extract_features(&findings("USD", Confidence::Low), &facts()).unwrap();
        assert_eq!(conf, Confidence::Low);
    }

    #[test]
    fn out_of_range_scores_rejected() {
        for f in [
            TranscriptFacts { pain_severity_score: 6, ..facts() },
            TranscriptFacts { integration_complexity: 0, ..facts() },
            TranscriptFacts { phase: -1, ..facts() },
            TranscriptFacts { phase: 5, ..facts() },
            TranscriptFacts { est_duration_weeks: 0, ..facts() },
        ] {
            assert!(matches!(
                extract_features(&findings("USD", Confidence::High), &f),
                Err(ExtractError::Feature(_))
            ));
        }
    }

    #[test]
    fn split_and_consistency() {
        assert_eq!(PricingSection::split(18_000.0), (9_000.0, 9_000.0));
        assert_eq!(PricingSection::split(100.01), (50.01, 50.0));
        let ok = PricingSection {
            total_price: 100.01,
            currency: "USD".into(),
            deposit_amount: 50.01,
            final_amount: 50.0,
            value_justification: String::new(),
        };
        assert!(check_pricing_consistency(&ok).is_ok());
        let bad = PricingSection { final_amount: 40.0, ..ok };
        assert!(check_pricing_consistency(&bad).is_err());
    }
}
