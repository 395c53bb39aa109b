//! Agent runtime: a schema-checked tool registry, a pluggable structured-output
//! LLM client, the research and draft agents, and template rendering.

pub mod agents;
pub mod llm;
pub mod pipeline;
pub mod render;
pub mod stubs;
pub mod tool;
pub mod trace;

pub use agents::{
    run_draft_agent, run_research_agent, DraftRun, PipelineError, PricingDecision, ResearchRun,
    StageError,
};
pub use llm::{complete_valid, ExternalAdapter, ExternalConfig, LlmClient, LlmError, ScriptedMock};
pub use pipeline::{run_pipeline, PipelineOutput};
pub use render::{format_money, render_proposal, RenderError};
pub use stubs::{http_pricing_tool, local_pricing_tool, standard_registry, ResearchStubs};
pub use tool::{Tool, ToolError, ToolRegistry};
pub use trace::{EventKind, Trace, TraceEvent};
