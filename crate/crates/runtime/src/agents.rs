//! The research and draft agents. Each run owns its trace and context; the
//! only shared state is the read-only registry and LLM client.

use mlat_core::schema::{
    check_pricing_consistency, draft_schema, extract_features, research_schema,
    score_schema, transcript_facts_schema, validate, Confidence, ExtractError,
    PricingSection, ProposalDoc, ResearchFindings, SchemaDoc, TranscriptFacts,
    ValidationReport,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::llm::{complete_valid, LlmClient, LlmError};
use crate::stubs::{COMPANY_RESEARCH, PRICING_MODEL, REVENUE_LOOKUP};
use crate::tool::{ToolError, ToolRegistry};
use crate::trace::{EventKind, Trace};

pub const RESEARCH_AGENT: &str = "research_agent";
pub const DRAFT_AGENT: &str = "draft_agent";

/// Largest allowed ratio between the adjusted and the model price.
pub const ADJUSTMENT_BOUND: f64 = 1.25;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StageError {
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Tool(#[from] ToolError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error("{0}")]
    Contract(String),
    #[error("{0}")]
    Input(String),
}

impl StageError {
    /// Schema violations behind this failure, if it was a contract breach.
    pub fn report(&self) -> Option<&ValidationReport> {
        match self {
            StageError::Llm(LlmError::Invalid { report, .. })
            | StageError::Tool(ToolError::BadRequest { report, .. })
            | StageError::Tool(ToolError::BadResponse { report, .. }) => Some(report),
            _ => None,
        }
    }
}

/// A failure tagged with the `agent/step` where it happened.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("{stage}: {source}")]
pub struct PipelineError {
    pub stage: String,
    pub source: StageError,
}

fn at(agent: &str, step: &str) -> impl FnOnce(StageError) -> PipelineError {
    let stage = format!("{agent}/{step}");
    move |source| PipelineError { stage, source }
}

fn fail<T>(agent: &str, step: &str, e: impl Into<StageError>) -> Result<T, PipelineError> {
    Err(at(agent, step)(e.into()))
}

/// The structured context `z` gathered by the research agent. Entries are
/// only ever appended.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AgentContext {
    pub transcript: String,
    pub facts: Option<TranscriptFacts>,
    pub tool_results: Vec<(String, Value)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResearchRun {
    pub findings: ResearchFindings,
    pub facts: TranscriptFacts,
    pub context: AgentContext,
    pub trace: Trace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdjustmentType {
    Absolute,
    Percent,
}

/// The agent's bounded adjustment of the model anchor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricingDecision {
    pub model_price: f64,
    pub requested_price: f64,
    pub adjusted_price: f64,
    pub adjustment_rationale: String,
    pub research_confidence: Confidence,
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DraftRun {
    pub proposal: ProposalDoc,
    pub decision: PricingDecision,
    pub trace: Trace,
}

/// Transcript facts schema without the two scores, which come from their own
/// scoring calls.
pub fn fact_extraction_schema() -> SchemaDoc {
    let mut s = transcript_facts_schema().clone();
    for f in ["pain_severity_score", "integration_complexity"] {
        s.properties.remove(f);
        s.required.retain(|r| r != f);
    }
    s
}

pub fn pricing_decision_schema() -> &'static SchemaDoc {
    static CELL: std::sync::OnceLock<SchemaDoc> = std::sync::OnceLock::new();
    CELL.get_or_init(|| {
        SchemaDoc::parse(&json!({
            "type": "object",
            "properties": {
                "adjustment_type": {"type": "string", "enum": ["absolute", "percent"]},
                "adjustment": {"type": "number"},
                "rationale": {"type": "string"}
            },
            "required": ["adjustment_type", "adjustment", "rationale"]
        }))
        .expect("decision schema is well-formed")
    })
}

fn pretty(v: &impl Serialize) -> String {
    serde_json::to_string_pretty(v).expect("serializable")
}

fn ask(
    llm: &dyn LlmClient,
    trace: &mut Trace,
    agent: &str,
    tag: &str,
    prompt: String,
    schema: &SchemaDoc,
) -> Result<Value, PipelineError> {
    let out = complete_valid(llm, tag, &prompt, schema).map_err(|e| at(agent, tag)(e.into()))?;
    trace.record(agent, EventKind::Llm, tag, json!({ "prompt": prompt }), out.clone(), None);
    Ok(out)
}

fn score(
    llm: &dyn LlmClient,
    trace: &mut Trace,
    tag: &str,
    what: &str,
    transcript: &str,
) -> Result<i64, PipelineError> {
    let prompt = format!(
        "Rate the {what} described in this sales call on a 1-5 scale and explain briefly.\n\n{transcript}"
    );
    let out = ask(llm, trace, RESEARCH_AGENT, tag, prompt, score_schema())?;
    let s = out["score"].as_i64().unwrap_or_default();
    if !(1..=5).contains(&s) {
        return fail(RESEARCH_AGENT, tag, StageError::Contract(format!("{what} score {s} is outside 1-5")));
    }
    Ok(s)
}

/// Extract facts, score pain and complexity, query both research tools in
/// parallel and synthesize findings that conform to the research schema.
pub fn run_research_agent(
    transcript: &str,
    llm: &dyn LlmClient,
    registry: &ToolRegistry,
) -> Result<ResearchRun, PipelineError> {
    let a = RESEARCH_AGENT;
    let revenue_tool = registry.get(REVENUE_LOOKUP).map_err(|e| at(a, "registry")(e.into()))?;
    let profile_tool = registry.get(COMPANY_RESEARCH).map_err(|e| at(a, "registry")(e.into()))?;
    if transcript.trim().is_empty() {
        return fail(a, "extract_facts", StageError::Input("transcript is empty".into()));
    }
    let mut trace = Trace::new();
    let mut ctx = AgentContext {
        transcript: transcript.to_string(),
        ..AgentContext::default()
    };

    let prompt = format!(
        "Extract the prospect name, company name, project phase (1-4), estimated duration in weeks and tech stack from this sales call.\n\n{transcript}"
    );
    let mut facts_doc = ask(llm, &mut trace, a, "extract_facts", prompt, &fact_extraction_schema())?;
    let pain = score(llm, &mut trace, "score_pain", "pain severity", transcript)?;
    let complexity = score(llm, &mut trace, "score_complexity", "integration complexity", transcript)?;
    facts_doc["pain_severity_score"] = pain.into();
    facts_doc["integration_complexity"] = complexity.into();
    let report = validate(&facts_doc, transcript_facts_schema());
    if !report.valid {
        return fail(a, "extract_facts", StageError::Contract(report.to_string()));
    }
    let facts: TranscriptFacts = serde_json::from_value(facts_doc)
        .map_err(|e| at(a, "extract_facts")(StageError::Contract(e.to_string())))?;
    ctx.facts = Some(facts.clone());

    let query = json!({ "company_name": facts.company_name });
    let (revenue, profile) = std::thread::scope(|s| {
        let r = s.spawn(|| revenue_tool.call(&query));
        let p = s.spawn(|| profile_tool.call(&query));
        (
            r.join().expect("revenue_lookup thread"),
            p.join().expect("company_research thread"),
        )
    });
    let revenue = revenue.map_err(|e| at(a, REVENUE_LOOKUP)(e.into()))?;
    let profile = profile.map_err(|e| at(a, COMPANY_RESEARCH)(e.into()))?;
    for (name, resp) in [(REVENUE_LOOKUP, &revenue), (COMPANY_RESEARCH, &profile)] {
        trace.record(a, EventKind::Tool, name, query.clone(), resp.clone(), None);
        ctx.tool_results.push((name.to_string(), resp.clone()));
    }

    let prompt = format!(
        "Combine the call facts and research below into the research output. Rate your confidence in the revenue figure.\n\nFacts:\n{}\n\nRevenue lookup:\n{}\n\nCompany research:\n{}",
        pretty(&facts),
        pretty(&revenue),
        pretty(&profile)
    );
    let doc = ask(llm, &mut trace, a, "synthesize_research", prompt, research_schema())?;
    let findings: ResearchFindings = serde_json::from_value(doc)
        .map_err(|e| at(a, "synthesize_research")(StageError::Contract(e.to_string())))?;
    Ok(ResearchRun {
        findings,
        facts,
        context: ctx,
        trace,
    })
}

/// Apply a requested adjustment to the model price, holding the result inside
/// `[model / 1.25, model * 1.25]`.
pub fn bounded_price(model_price: f64, kind: AdjustmentType, adjustment: f64) -> (f64, f64, bool) {
    let requested = match kind {
        AdjustmentType::Absolute => model_price + adjustment,
        AdjustmentType::Percent => model_price * (1.0 + adjustment / 100.0),
    };
    let (lo, hi) = (model_price / ADJUSTMENT_BOUND, model_price * ADJUSTMENT_BOUND);
    let adjusted = if requested.is_nan() { model_price } else { requested.clamp(lo, hi) };
    (requested, adjusted, adjusted != requested)
}

/// Price the deal with exactly one model call, adjust within the policy bound
/// and write a proposal that conforms to the draft schema.
pub fn run_draft_agent(
    findings: &ResearchFindings,
    facts: &TranscriptFacts,
    llm: &dyn LlmClient,
    registry: &ToolRegistry,
) -> Result<DraftRun, PipelineError> {
    let a = DRAFT_AGENT;
    let pricing = registry.get(PRICING_MODEL).map_err(|e| at(a, "registry")(e.into()))?;
    for (doc, schema) in [
        (serde_json::to_value(findings), research_schema()),
        (serde_json::to_value(facts), transcript_facts_schema()),
    ] {
        let doc = doc.map_err(|e| at(a, "inputs")(StageError::Input(e.to_string())))?;
        let report = validate(&doc, schema);
        if !report.valid {
            return fail(a, "inputs", StageError::Input(report.to_string()));
        }
    }
    let mut trace = Trace::new();

    let (raw, confidence) = extract_features(findings, facts).map_err(|e| at(a, "extract_features")(e.into()))?;
    let request = serde_json::to_value(raw).expect("raw features serialize");
    let response = pricing.call(&request).map_err(|e| at(a, "pricing_tool")(e.into()))?;
    trace.record(a, EventKind::Tool, PRICING_MODEL, request, response.clone(), None);
    let model_price = response["predicted_price"].as_f64().unwrap_or(f64::NAN);
    if !(model_price.is_finite() && model_price > 0.0) {
        return fail(a, "pricing_tool", StageError::Contract(format!("model price {model_price} is not positive")));
    }

    let prompt = format!(
        "The pricing model anchors this deal at ${model_price:.2}. Revenue confidence is {confidence}. Decide whether to adjust the price, as an absolute USD amount or a percent, and justify it for the client.\n\nResearch:\n{}\n\nFacts:\n{}",
        pretty(findings),
        pretty(facts)
    );
    let out = complete_valid(llm, "pricing_decision", &prompt, pricing_decision_schema())
        .map_err(|e| at(a, "pricing_decision")(e.into()))?;
    let kind: AdjustmentType = serde_json::from_value(out["adjustment_type"].clone()).expect("enum validated");
    let adjustment = out["adjustment"].as_f64().expect("number validated");
    let (requested, adjusted, clamped) = bounded_price(model_price, kind, adjustment);
    let decision = PricingDecision {
        model_price,
        requested_price: requested,
        adjusted_price: adjusted,
        adjustment_rationale: out["rationale"].as_str().unwrap_or_default().to_string(),
        research_confidence: confidence,
        clamped,
    };
    trace.record(a, EventKind::Llm, "pricing_decision", json!({ "prompt": prompt }), out, None);
    let note = clamped.then(|| {
        format!(
            "clamped: requested {requested:.2} is outside [{:.2}, {:.2}], using {adjusted:.2}",
            model_price / ADJUSTMENT_BOUND,
            model_price * ADJUSTMENT_BOUND
        )
    });
    trace.record(
        a,
        EventKind::Decision,
        "pricing_policy",
        json!({ "model_price": model_price, "requested_price": requested }),
        serde_json::to_value(&decision).expect("decision serializes"),
        note,
    );

    let prompt = format!(
        "Write the project proposal. The total price is ${adjusted:.2} USD.\n\nResearch:\n{}\n\nFacts:\n{}\n\nPricing rationale: {}",
        pretty(findings),
        pretty(facts),
        decision.adjustment_rationale
    );
    let mut doc = ask(llm, &mut trace, a, "draft_proposal", prompt, draft_schema())?;
    let (deposit, final_amount) = PricingSection::split(adjusted);
    doc["pricing_section"] = json!({
        "total_price": adjusted,
        "currency": "USD",
        "deposit_amount": deposit,
        "final_amount": final_amount,
        "value_justification": decision.adjustment_rationale,
    });
    let report = validate(&doc, draft_schema());
    if !report.valid {
        return fail(a, "draft_proposal", StageError::Contract(report.to_string()));
    }
    let proposal: ProposalDoc = serde_json::from_value(doc)
        .map_err(|e| at(a, "draft_proposal")(StageError::Contract(e.to_string())))?;
    check_pricing_consistency(&proposal.pricing_section)
        .map_err(|e| at(a, "draft_proposal")(StageError::Contract(e)))?;
    Ok(DraftRun {
        proposal,
        decision,
        trace,
    })
}
