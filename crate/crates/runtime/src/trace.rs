use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Tool,
    Llm,
    Decision,
}

/// One step of a run. `seq` is a logical clock: it orders events within a
/// run and is the only timestamp, which keeps traces reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub seq: u64,
    pub agent: String,
    pub kind: EventKind,
    pub name: String,
    pub request: Value,
    pub response: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Append-only, per-run event log.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    events: Vec<TraceEvent>,
}

impl Trace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(
        &mut self,
        agent: &str,
        kind: EventKind,
        name: &str,
        request: Value,
        response: Value,
        note: Option<String>,
    ) {
        self.events.push(TraceEvent {
            seq: self.events.len() as u64,
            agent: agent.to_string(),
            kind,
            name: name.to_string(),
            request,
            response,
            note,
        });
    }

    /// Append another run's events after this one's, continuing the clock.
    pub fn append(&mut self, other: Trace) {
        for mut e in other.events {
            e.seq = self.events.len() as u64;
            self.events.push(e);
        }
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    /// Names of tool calls in order.
    pub fn tool_calls(&self) -> Vec<&str> {
        self.events
            .iter()
            .filter(|e| e.kind == EventKind::Tool)
            .map(|e| e.name.as_str())
            .collect()
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("trace events serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, serde_json::Error> {
        let events = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<Result<Vec<TraceEvent>, _>>()?;
        Ok(Trace { events })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn append_renumbers_and_jsonl_round_trips() {
        let mut a = Trace::new();
        a.record("research_agent", EventKind::Tool, "revenue_lookup", json!({}), json!({}), None);
        let mut b = Trace::new();
        b.record("draft_agent", EventKind::Tool, "pricing_model", json!({"x": 1}), json!(2), None);
        b.record("draft_agent", EventKind::Decision, "pricing_policy", json!(null), json!(null), Some("clamped".into()));
        a.append(b);
        let seqs: Vec<u64> = a.events().iter().map(|e| e.seq).collect();
        assert_eq!(seqs, [0, 1, 2]);
        assert_eq!(a.tool_calls(), ["revenue_lookup", "pricing_model"]);
        let text = a.to_jsonl();
        assert_eq!(text.lines().count(), 3);
        assert_eq!(Trace::from_jsonl(&text).unwrap(), a);
    }
}
