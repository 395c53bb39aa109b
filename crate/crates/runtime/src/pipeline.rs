use mlat_core::schema::{ProposalDoc, ResearchFindings, TranscriptFacts};

use crate::agents::{run_draft_agent, run_research_agent, PipelineError, PricingDecision, StageError};
use crate::llm::LlmClient;
use crate::render::render_proposal;
use crate::tool::ToolRegistry;
use crate::trace::Trace;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub document: String,
    pub findings: ResearchFindings,
    pub facts: TranscriptFacts,
    pub proposal: ProposalDoc,
    pub decision: PricingDecision,
    pub trace: Trace,
}

/// Research, then draft, then render. The returned trace holds both agents'
/// events in order.
pub fn run_pipeline(
    transcript: &str,
    llm: &dyn LlmClient,
    registry: &ToolRegistry,
    template: &str,
) -> Result<PipelineOutput, PipelineError> {
    let research = run_research_agent(transcript, llm, registry)?;
    let draft = run_draft_agent(&research.findings, &research.facts, llm, registry)?;
    let document = render_proposal(&draft.proposal, template).map_err(|e| PipelineError {
        stage: "render".into(),
        source: StageError::Contract(e.to_string()),
    })?;
    let mut trace = research.trace;
    trace.append(draft.trace);
    Ok(PipelineOutput {
        document,
        findings: research.findings,
        facts: research.facts,
        proposal: draft.proposal,
        decision: draft.decision,
        trace,
    })
}
