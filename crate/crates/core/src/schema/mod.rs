//! JSON schema contracts between the research and draft agents.
//!
//! Only the keyword subset the contracts use is supported: `type` (object,
//! array, string, number, integer), `properties`, `required`, `items` and
//! `enum`. Anything else in a schema is rejected as malformed.

mod contracts;

pub use contracts::{
    check_pricing_consistency, extract_features, ClientRevenue, Confidence, ExtractError,
    PricingSection, ProposalDoc, ResearchFindings, TimelineEntry, TranscriptFacts,
};

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub const RESEARCH_SCHEMA_JSON: &str = include_str!("../../schemas/research.json");
pub const DRAFT_SCHEMA_JSON: &str = include_str!("../../schemas/draft.json");
pub const TRANSCRIPT_FACTS_SCHEMA_JSON: &str = include_str!("../../schemas/transcript_facts.json");
pub const SCORE_SCHEMA_JSON: &str = include_str!("../../schemas/score.json");

#[derive(Debug, Error, Clone, PartialEq)]
#[error("malformed schema at {path}: {message}")]
pub struct SchemaError {
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemaType {
    Object,
    Array,
    String,
    Number,
    Integer,
}

impl SchemaType {
    fn name(self) -> &'static str {
        match self {
            SchemaType::Object => "object",
            SchemaType::Array => "array",
            SchemaType::String => "string",
            SchemaType::Number => "number",
            SchemaType::Integer => "integer",
        }
    }
}

/// A parsed schema node.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemaDoc {
    pub kind: SchemaType,
    pub properties: BTreeMap<String, SchemaDoc>,
    pub required: Vec<String>,
    pub items: Option<Box<SchemaDoc>>,
    pub enum_values: Option<Vec<Value>>,
}

const KEYWORDS: [&str; 5] = ["type", "properties", "required", "items", "enum"];

impl SchemaDoc {
    pub fn parse_str(text: &str) -> Result<Self, SchemaError> {
        let v: Value = serde_json::from_str(text).map_err(|e| SchemaError {
            path: "$".into(),
            message: e.to_string(),
        })?;
        Self::parse(&v)
    }

    pub fn parse(value: &Value) -> Result<Self, SchemaError> {
        parse_node(value, "$")
    }

    /// Schema reached by following `path` through object properties.
    pub fn at(&self, path: &str) -> Option<&SchemaDoc> {
        path.split('.').try_fold(self, |node, seg| node.properties.get(seg))
    }

    pub fn validate(&self, document: &Value) -> ValidationReport {
        validate(document, self)
    }
}

fn parse_node(value: &Value, path: &str) -> Result<SchemaDoc, SchemaError> {
    let err = |message: String| SchemaError {
        path: path.to_string(),
        message,
    };
    let obj = value
        .as_object()
        .ok_or_else(|| err("schema node must be an object".into()))?;
    if let Some(k) = obj.keys().find(|k| !KEYWORDS.contains(&k.as_str())) {
        return Err(err(format!("unsupported keyword {k:?}")));
    }
    let kind = match obj.get("type").and_then(Value::as_str) {
        Some("object") => SchemaType::Object,
        Some("array") => SchemaType::Array,
        Some("string") => SchemaType::String,
        Some("number") => SchemaType::Number,
        Some("integer") => SchemaType::Integer,
        Some(other) => return Err(err(format!("unsupported type {other:?}"))),
        None => return Err(err("missing \"type\"".into())),
    };

    let mut properties = BTreeMap::new();
    if let Some(props) = obj.get("properties") {
        if kind != SchemaType::Object {
            return Err(err("\"properties\" only applies to objects".into()));
        }
        let props = props
            .as_object()
            .ok_or_else(|| err("\"properties\" must be an object".into()))?;
        for (name, sub) in props {
            properties.insert(name.clone(), parse_node(sub, &format!("{path}.{name}"))?);
        }
    }

    let mut required = Vec::new();
    if let Some(req) = obj.get("required") {
        let arr = req
            .as_array()
            .ok_or_else(|| err("\"required\" must be an array".into()))?;
        for r in arr {
            let name = r
                .as_str()
                .ok_or_else(|| err("\"required\" entries must be strings".into()))?;
            if !properties.contains_key(name) {
                return Err(err(format!("required property {name:?} is not declared")));
            }
            required.push(name.to_string());
        }
    }

    let items = match obj.get("items") {
        Some(sub) if kind == SchemaType::Array => {
            Some(Box::new(parse_node(sub, &format!("{path}[]"))?))
        }
        Some(_) => return Err(err("\"items\" only applies to arrays".into())),
        None if kind == SchemaType::Array => return Err(err("array schema needs \"items\"".into())),
        None => None,
    };

    let enum_values = match obj.get("enum") {
        Some(Value::Array(vals)) if !vals.is_empty() => Some(vals.clone()),
        Some(_) => return Err(err("\"enum\" must be a non-empty array".into())),
        None => None,
    };

    Ok(SchemaDoc {
        kind,
        properties,
        required,
        items,
        enum_values,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// Dotted path with `[i]` for array items; empty for the root.
    pub path: String,
    /// One of `type`, `required`, `enum`.
    pub rule: String,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let path = if self.path.is_empty() { "(root)" } else { &self.path };
        write!(f, "{path}: {} ({})", self.detail, self.rule)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.valid {
            return f.write_str("valid");
        }
        let parts: Vec<String> = self.violations.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join("; "))
    }
}

/// Depth-first validation collecting every violation.
pub fn validate(document: &Value, schema: &SchemaDoc) -> ValidationReport {
    let mut violations = Vec::new();
    walk(document, schema, "", &mut violations);
    ValidationReport {
        valid: violations.is_empty(),
        violations,
    }
}

fn join(path: &str, name: &str) -> String {
    if path.is_empty() {
        name.to_string()
    } else {
        format!("{path}.{name}")
    }
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

fn is_integer(v: &Value) -> bool {
    match v {
        Value::Number(n) => n.is_i64() || n.is_u64() || n.as_f64().is_some_and(|f| f.fract() == 0.0),
        _ => false,
    }
}

fn walk(value: &Value, schema: &SchemaDoc, path: &str, out: &mut Vec<Violation>) {
    let type_ok = match schema.kind {
        SchemaType::Object => value.is_object(),
        SchemaType::Array => value.is_array(),
        SchemaType::String => value.is_string(),
        SchemaType::Number => value.is_number(),
        SchemaType::Integer => is_integer(value),
    };
    if !type_ok {
        out.push(Violation {
            path: path.to_string(),
            rule: "type".into(),
            detail: format!("expected {}, found {}", schema.kind.name(), type_name(value)),
        });
        return;
    }
    if let Some(allowed) = &schema.enum_values {
        if !allowed.contains(value) {
            let list: Vec<String> = allowed.iter().map(Value::to_string).collect();
            out.push(Violation {
                path: path.to_string(),
                rule: "enum".into(),
                detail: format!("{value} is not one of [{}]", list.join(", ")),
            });
        }
    }
    match value {
        Value::Object(map) => {
            for name in &schema.required {
                if !map.contains_key(name) {
                    out.push(Violation {
                        path: join(path, name),
                        rule: "required".into(),
                        detail: "required property is missing".into(),
                    });
                }
            }
            for (name, sub) in &schema.properties {
                if let Some(v) = map.get(name) {
                    walk(v, sub, &join(path, name), out);
                }
            }
        }
        Value::Array(items) => {
            if let Some(item_schema) = &schema.items {
                for (i, v) in items.iter().enumerate() {
                    walk(v, item_schema, &format!("{path}[{i}]"), out);
                }
            }
        }
        _ => {}
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractIssue {
    pub path: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractReport {
    pub ok: bool,
    pub issues: Vec<ContractIssue>,
}

/// Check that every consumer path is declared and required along its whole
/// chain in the producer schema. A segment written `name[]` steps into the
/// array's items.
pub fn check_contract(producer: &SchemaDoc, consumer_paths: &[&str]) -> ContractReport {
    let mut issues = Vec::new();
    for path in consumer_paths {
        if let Err(reason) = reachable_and_required(producer, path) {
            issues.push(ContractIssue {
                path: path.to_string(),
                reason,
            });
        }
    }
    ContractReport {
        ok: issues.is_empty(),
        issues,
    }
}

fn reachable_and_required(schema: &SchemaDoc, path: &str) -> Result<(), String> {
    let mut node = schema;
    for seg in path.split('.') {
        let (name, into_items) = match seg.strip_suffix("[]") {
            Some(n) => (n, true),
            None => (seg, false),
        };
        if name.is_empty() {
            return Err("empty path segment".into());
        }
        if node.kind != SchemaType::Object {
            return Err(format!("{name:?} is below a non-object"));
        }
        node = node
            .properties
            .get(name)
            .ok_or_else(|| format!("{name:?} is not declared"))?;
        // properties is keyed by the same names as required
        let parent_required = schema_requires(schema, path, seg);
        if !parent_required {
            return Err(format!("{name:?} is optional"));
        }
        if into_items {
            node = node
                .items
                .as_deref()
                .ok_or_else(|| format!("{name:?} is not an array"))?;
        }
    }
    Ok(())
}

/// Whether segment `seg` of `path` is listed in its parent's `required`.
fn schema_requires(root: &SchemaDoc, path: &str, seg: &str) -> bool {
    let mut node = root;
    for s in path.split('.') {
        let name = s.strip_suffix("[]").unwrap_or(s);
        if s == seg {
            return node.required.iter().any(|r| r == name);
        }
        let Some(next) = node.properties.get(name) else {
            return false;
        };
        node = if s.ends_with("[]") {
            match next.items.as_deref() {
                Some(i) => i,
                None => return false,
            }
        } else {
            next
        };
    }
    false
}

macro_rules! embedded {
    ($fn_name:ident, $text:expr) => {
        pub fn $fn_name() -> &'static SchemaDoc {
            static CELL: OnceLock<SchemaDoc> = OnceLock::new();
            CELL.get_or_init(|| SchemaDoc::parse_str($text).expect("embedded schema is well-formed"))
        }
    };
}

embedded!(research_schema, RESEARCH_SCHEMA_JSON);
embedded!(draft_schema, DRAFT_SCHEMA_JSON);
embedded!(transcript_facts_schema, TRANSCRIPT_FACTS_SCHEMA_JSON);
embedded!(score_schema, SCORE_SCHEMA_JSON);

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn research_doc() -> Value {
        json!({
            "client_revenue": {
                "annual_revenue": 1_000_000.0,
                "currency": "USD",
                "source": "company filings",
                "confidence": "high",
                "year": "2024"
            },
            "company_summary": "Regional logistics operator.",
            "prospect_summary": "Operations lead evaluating automation."
        })
    }

    #[test]
    fn embedded_schemas_parse() {
        research_schema();
        draft_schema();
        transcript_facts_schema();
        score_schema();
    }

    #[test]
    fn research_document_valid() {
        let r = validate(&research_doc(), research_schema());
        assert!(r.valid, "{r}");
    }

    #[test]
    fn missing_source_reported_with_path() {
        let mut doc = research_doc();
        doc["client_revenue"].as_object_mut().unwrap().remove("source");
        let r = validate(&doc, research_schema());
        assert!(!r.valid);
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].path, "client_revenue.source");
        assert_eq!(r.violations[0].rule, "required");
    }

    #[test]
    fn enum_violation() {
        let mut doc = research_doc();
        doc["client_revenue"]["confidence"] = json!("certain");
        let r = validate(&doc, research_schema());
        assert_eq!(r.violations[0].path, "client_revenue.confidence");
        assert_eq!(r.violations[0].rule, "enum");
    }

    #[test]
    fn collects_all_violations() {
        let mut doc = research_doc();
        doc["client_revenue"]["confidence"] = json!("certain");
        doc["client_revenue"]["annual_revenue"] = json!("lots");
        doc.as_object_mut().unwrap().remove("company_summary");
        let r = validate(&doc, research_schema());
        assert_eq!(r.violations.len(), 3, "{r}");
    }

    #[test]
    fn number_and_integer_rules() {
        let number = SchemaDoc::parse(&json!({"type": "number"})).unwrap();
        let integer = SchemaDoc::parse(&json!({"type": "integer"})).unwrap();
        assert!(validate(&json!(3), &number).valid);
        assert!(validate(&json!(3.5), &number).valid);
        assert!(validate(&json!(3), &integer).valid);
        assert!(validate(&json!(3.0), &integer).valid);
        let r = validate(&json!(3.5), &integer);
        assert_eq!(r.violations[0].rule, "type");
        assert!(!validate(&json!("3"), &number).valid);
    }

    #[test]
    fn array_item_paths() {
        let s = SchemaDoc::parse(&json!({
            "type": "object",
            "properties": {"xs": {"type": "array", "items": {"type": "string"}}},
            "required": ["xs"]
        }))
        .unwrap();
        let r = validate(&json!({"xs": ["a", 2, "c"]}), &s);
        assert_eq!(r.violations[0].path, "xs[1]");
    }

    #[test]
    fn malformed_schemas() {
        for bad in [
            json!({"properties": {}}),
            json!({"type": "object", "required": ["a"]}),
            json!({"type": "array"}),
            json!({"type": "string", "pattern": "x"}),
            json!({"type": "boolean"}),
            json!({"type": "string", "enum": []}),
            json!([1, 2]),
        ] {
            assert!(SchemaDoc::parse(&bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn contract_checks() {
        let s = research_schema();
        assert!(check_contract(s, &["client_revenue.annual_revenue"]).ok);
        let r = check_contract(s, &["client_revenue.ebitda"]);
        assert!(!r.ok);
        assert_eq!(r.issues[0].path, "client_revenue.ebitda");
        assert!(check_contract(s, &[]).ok);
        assert!(check_contract(draft_schema(), &["timeline_breakdown[].week", "pricing_section.total_price"]).ok);
        assert!(!check_contract(draft_schema(), &["goals_list[].week"]).ok);
    }

    #[test]
    fn optional_property_fails_contract() {
        let s = SchemaDoc::parse(&json!({
            "type": "object",
            "properties": {"a": {"type": "object", "properties": {"b": {"type": "number"}}}},
            "required": ["a"]
        }))
        .unwrap();
        let r = check_contract(&s, &["a.b"]);
        assert!(!r.ok);
        assert!(r.issues[0].reason.contains("optional"));
    }

    #[test]
    fn revalidation_is_stable() {
        let doc = research_doc();
        let text = serde_json::to_string(&doc).unwrap();
        let again: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(
            validate(&doc, research_schema()),
            validate(&again, research_schema())
        );
    }
}
