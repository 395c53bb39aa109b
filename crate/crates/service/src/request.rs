//! Request parsing: strict field set, alias canonicalization and per-field
//! validation. Every problem in a request is reported, not just the first.

use mlat_core::dataset::{RawFeatures, TechStack};
use serde::Serialize;
use serde_json::{Map, Value};

/// Alternate spellings accepted on input, mapped to canonical names.
pub const ALIASES: [(&str, &str); 3] = [
    ("duration_weeks", "est_duration_weeks"),
    ("integ_complexity", "integration_complexity"),
    ("pain_score", "pain_severity_score"),
];

const CANONICAL: [&str; 6] = [
    "client_revenue",
    "est_duration_weeks",
    "pain_severity_score",
    "integration_complexity",
    "phase",
    "tech_stack",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

fn field_error(field: &str, message: impl Into<String>) -> FieldError {
    FieldError {
        field: field.to_string(),
        message: message.into(),
    }
}

/// Map aliases onto canonical keys. Unknown keys and conflicting duplicates
/// are reported.
pub fn canonicalize(obj: &Map<String, Value>) -> Result<Map<String, Value>, Vec<FieldError>> {
    let mut out = Map::new();
    let mut errors = Vec::new();
    for (key, value) in obj {
        let canonical = match ALIASES.iter().find(|(alias, _)| alias == key) {
            Some((_, c)) => *c,
            None if CANONICAL.contains(&key.as_str()) => key.as_str(),
            None => {
                errors.push(field_error(key, "unknown field"));
                continue;
            }
        };
        match out.get(canonical) {
            Some(existing) if existing != value => {
                errors.push(field_error(
                    canonical,
                    format!("conflicting aliases: {existing} vs {value}"),
                ));
            }
            Some(_) => {}
            None => {
                out.insert(canonical.to_string(), value.clone());
            }
        }
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(errors)
    }
}

fn integer(obj: &Map<String, Value>, name: &str, min: i64, max: i64, errors: &mut Vec<FieldError>) -> i64 {
    let Some(v) = obj.get(name) else {
        errors.push(field_error(name, "missing field"));
        return 0;
    };
    let n = match v {
        Value::Number(n) => n
            .as_i64()
            .or_else(|| n.as_f64().filter(|f| f.fract() == 0.0 && f.abs() < 9e15).map(|f| f as i64)),
        _ => None,
    };
    match n {
        Some(n) if (min..=max).contains(&n) => n,
        Some(n) => {
            let upper = if max == i64::MAX { "inf".to_string() } else { max.to_string() };
            errors.push(field_error(name, format!("{n} is outside [{min}, {upper}]")));
            0
        }
        None => {
            errors.push(field_error(name, format!("expected an integer, got {v}")));
            0
        }
    }
}

/// Validate a canonicalized object into raw features.
pub fn parse_features(obj: &Map<String, Value>) -> Result<RawFeatures, Vec<FieldError>> {
    let mut errors = Vec::new();
    let revenue = match obj.get("client_revenue") {
        None => {
            errors.push(field_error("client_revenue", "missing field"));
            0.0
        }
        Some(v) => match v.as_f64() {
            Some(r) if r.is_finite() && r > 0.0 => r,
            _ => {
                errors.push(field_error("client_revenue", format!("expected a positive number, got {v}")));
                0.0
            }
        },
    };
    let weeks = integer(obj, "est_duration_weeks", 1, u32::MAX as i64, &mut errors);
    let pain = integer(obj, "pain_severity_score", 1, 5, &mut errors);
    let complexity = integer(obj, "integration_complexity", 1, 5, &mut errors);
    let phase = integer(obj, "phase", 1, 4, &mut errors);
    let tech = match obj.get("tech_stack") {
        None => {
            errors.push(field_error("tech_stack", "missing field"));
            None
        }
        Some(Value::String(s)) => match s.parse::<TechStack>() {
            Ok(t) => Some(t),
            Err(e) => {
                errors.push(field_error("tech_stack", e.to_string()));
                None
            }
        },
        Some(v) => {
            errors.push(field_error(
                "tech_stack",
                format!("expected one of no_code, low_code, custom, got {v}"),
            ));
            None
        }
    };
    match tech {
        Some(tech_stack) if errors.is_empty() => Ok(RawFeatures {
            client_revenue: revenue,
            est_duration_weeks: weeks as u32,
            pain_severity_score: pain as u8,
            integration_complexity: complexity as u8,
            phase: phase as u8,
            tech_stack,
        }),
        _ => Err(errors),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn obj(v: Value) -> Map<String, Value> {
        v.as_object().unwrap().clone()
    }

    fn figure_payload() -> Value {
        json!({
            "client_revenue": 1_000_000,
            "duration_weeks": 8,
            "integ_complexity": 4,
            "pain_score": 3,
            "phase": 1,
            "tech_stack": "custom"
        })
    }

    #[test]
    fn aliases_map_to_canonical_names() {
        let c = canonicalize(&obj(figure_payload())).unwrap();
        let mut keys: Vec<&str> = c.keys().map(String::as_str).collect();
        keys.sort_unstable();
        let mut want = CANONICAL.to_vec();
        want.sort_unstable();
        assert_eq!(keys, want);
        let raw = parse_features(&c).unwrap();
        assert_eq!(raw.integration_complexity, 4);
        assert_eq!(raw.pain_severity_score, 3);
        assert_eq!(raw.est_duration_weeks, 8);
    }

    #[test]
    fn conflicting_aliases_rejected() {
        let mut v = figure_payload();
        v["pain_severity_score"] = json!(5);
        let errs = canonicalize(&obj(v)).unwrap_err();
        assert_eq!(errs[0].field, "pain_severity_score");
        assert!(errs[0].message.contains("conflicting aliases"));
    }

    #[test]
    fn agreeing_aliases_accepted() {
        let mut v = figure_payload();
        v["pain_severity_score"] = json!(3);
        assert!(canonicalize(&obj(v)).is_ok());
    }

    #[test]
    fn unknown_field_rejected() {
        let mut v = figure_payload();
        v["discount"] = json!(0.1);
        let errs = canonicalize(&obj(v)).unwrap_err();
        assert_eq!(errs, vec![field_error("discount", "unknown field")]);
    }

    #[test]
    fn every_bad_field_reported() {
        let v = json!({
            "client_revenue": -5,
            "est_duration_weeks": 2.5,
            "pain_severity_score": 6,
            "integration_complexity": "high",
            "tech_stack": "mainframe"
        });
        let errs = parse_features(&obj(v)).unwrap_err();
        let fields: Vec<&str> = errs.iter().map(|e| e.field.as_str()).collect();
        assert_eq!(
            fields,
            [
                "client_revenue",
                "est_duration_weeks",
                "pain_severity_score",
                "integration_complexity",
                "phase",
                "tech_stack"
            ]
        );
        assert!(errs[5].message.contains("no_code, low_code, custom"));
    }

    #[test]
    fn integral_floats_accepted() {
        let mut v = figure_payload();
        v["phase"] = json!(2.0);
        let raw = parse_features(&canonicalize(&obj(v)).unwrap()).unwrap();
        assert_eq!(raw.phase, 2);
    }
}
