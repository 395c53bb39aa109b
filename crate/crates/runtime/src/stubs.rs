//! Concrete tools: fixture-backed research stubs and the two pricing tool
//! transports (in-process service or HTTP endpoint).

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::{Arc, OnceLock};
use std::time::Duration;

use mlat_core::schema::SchemaDoc;
use mlat_service::PricingService;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::tool::{Tool, ToolRegistry};

pub const REVENUE_LOOKUP: &str = "revenue_lookup";
pub const COMPANY_RESEARCH: &str = "company_research";
pub const PRICING_MODEL: &str = "pricing_model";

#[derive(Debug, Error)]
pub enum StubError {
    #[error("cannot read stub fixture {path}: {message}")]
    Fixture { path: String, message: String },
}

fn schema(text: &str) -> SchemaDoc {
    SchemaDoc::parse_str(text).expect("tool schema is well-formed")
}

macro_rules! tool_schema {
    ($fn_name:ident, $text:expr) => {
        pub fn $fn_name() -> &'static SchemaDoc {
            static CELL: OnceLock<SchemaDoc> = OnceLock::new();
            CELL.get_or_init(|| schema($text))
        }
    };
}

tool_schema!(
    company_query_schema,
    r#"{"type": "object", "properties": {"company_name": {"type": "string"}}, "required": ["company_name"]}"#
);
tool_schema!(
    revenue_schema,
    r#"{
  "type": "object",
  "properties": {
    "annual_revenue": {"type": "number"},
    "currency": {"type": "string"},
    "source": {"type": "string"},
    "year": {"type": "string"}
  },
  "required": ["annual_revenue", "currency", "source", "year"]
}"#
);
tool_schema!(
    company_profile_schema,
    r#"{
  "type": "object",
  "properties": {
    "summary": {"type": "string"},
    "sources": {"type": "array", "items": {"type": "string"}}
  },
  "required": ["summary", "sources"]
}"#
);
tool_schema!(
    pricing_request_schema,
    r#"{
  "type": "object",
  "properties": {
    "client_revenue": {"type": "number"},
    "est_duration_weeks": {"type": "integer"},
    "pain_severity_score": {"type": "integer"},
    "integration_complexity": {"type": "integer"},
    "phase": {"type": "integer"},
    "tech_stack": {"type": "string", "enum": ["no_code", "low_code", "custom"]}
  },
  "required": ["client_revenue", "est_duration_weeks", "pain_severity_score",
    "integration_complexity", "phase", "tech_stack"]
}"#
);
tool_schema!(
    pricing_response_schema,
    r#"{
  "type": "object",
  "properties": {
    "predicted_price": {"type": "number"},
    "currency": {"type": "string"},
    "model_version": {"type": "string"}
  },
  "required": ["predicted_price", "currency", "model_version"]
}"#
);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompanyStub {
    pub revenue: Value,
    pub profile: Value,
}

/// Canned research results keyed by company name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResearchStubs {
    pub companies: BTreeMap<String, CompanyStub>,
}

impl ResearchStubs {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, StubError> {
        let path = path.as_ref();
        let err = |message: String| StubError::Fixture {
            path: path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        Self::from_json(&text).map_err(|e| err(e.to_string()))
    }

    fn lookup(&self, request: &Value) -> Result<&CompanyStub, String> {
        let name = request["company_name"].as_str().unwrap_or_default();
        self.companies
            .get(name)
            .ok_or_else(|| format!("no record for company {name:?}"))
    }

    /// The revenue and company-research tools over these stubs.
    pub fn tools(self) -> [Tool; 2] {
        let stubs = Arc::new(self);
        let a = stubs.clone();
        let revenue = Tool::new(
            REVENUE_LOOKUP,
            "Annual revenue of a company with its source and year",
            company_query_schema().clone(),
            revenue_schema().clone(),
            move |req| a.lookup(req).map(|c| c.revenue.clone()),
        );
        let profile = Tool::new(
            COMPANY_RESEARCH,
            "Short profile of a company from public sources",
            company_query_schema().clone(),
            company_profile_schema().clone(),
            move |req| stubs.lookup(req).map(|c| c.profile.clone()),
        );
        [revenue, profile]
    }
}

fn pricing_tool(invoke: impl Fn(&Value) -> Result<Value, String> + Send + Sync + 'static) -> Tool {
    Tool::new(
        PRICING_MODEL,
        "Model price in USD for the six raw deal features",
        pricing_request_schema().clone(),
        pricing_response_schema().clone(),
        invoke,
    )
}

/// Keep only the deterministic part of a prediction response.
fn anchor(body: &Value) -> Value {
    json!({
        "predicted_price": body["predicted_price"],
        "currency": body["currency"],
        "model_version": body["model_version"],
    })
}

/// Pricing tool backed by an in-process service.
pub fn local_pricing_tool(service: Arc<PricingService>) -> Tool {
    pricing_tool(move |req| {
        let r = service
            .handle_predict_json(req)
            .map_err(|e| format!("{} ({}): {:?}", e.error, e.status, e.details))?;
        Ok(anchor(&serde_json::to_value(r).map_err(|e| e.to_string())?))
    })
}

/// Pricing tool calling `POST {base_url}/predict`.
pub fn http_pricing_tool(base_url: &str) -> Tool {
    let url = format!("{}/predict", base_url.trim_end_matches('/'));
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(Duration::from_secs(10)))
        .http_status_as_error(false)
        .build()
        .into();
    pricing_tool(move |req| {
        let mut resp = agent
            .post(&url)
            .send_json(req)
            .map_err(|e| format!("pricing service unreachable at {url}: {e}"))?;
        let status = resp.status().as_u16();
        let body: Value = resp
            .body_mut()
            .read_json()
            .map_err(|e| format!("unreadable response from {url}: {e}"))?;
        if status != 200 {
            return Err(format!("pricing service answered {status}: {body}"));
        }
        Ok(anchor(&body))
    })
}

/// Registry with the research stubs and the given pricing tool, in that order.
pub fn standard_registry(stubs: ResearchStubs, pricing: Tool) -> ToolRegistry {
    let mut r = ToolRegistry::new();
    for t in stubs.tools() {
        r.register(t).expect("fresh registry");
    }
    r.register(pricing).expect("fresh registry");
    r
}
