use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use mlat_core::schema::{validate, SchemaDoc, ValidationReport};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LlmError {
    #[error("no scripted output for prompt tag {0:?}")]
    Unscripted(String),
    #[error("output for {tag} does not match the requested schema after a retry: {report}")]
    Invalid { tag: String, report: ValidationReport },
    #[error("mock fixture: {0}")]
    Fixture(String),
    #[error("external model adapter is disabled; set enabled = true and provide the API key")]
    Disabled,
    #[error("external model request failed: {0}")]
    Transport(String),
}

/// Structured-output completion. `tag` names the prompt's purpose so that
/// scripted clients can answer without parsing prompt text.
pub trait LlmClient: Send + Sync {
    fn complete(&self, tag: &str, prompt: &str, output_schema: &SchemaDoc) -> Result<Value, LlmError>;
}

/// Complete and validate, asking once more if the first answer is invalid.
pub fn complete_valid(
    llm: &dyn LlmClient,
    tag: &str,
    prompt: &str,
    schema: &SchemaDoc,
) -> Result<Value, LlmError> {
    let mut last = None;
    for _ in 0..2 {
        let out = llm.complete(tag, prompt, schema)?;
        let report = validate(&out, schema);
        if report.valid {
            return Ok(out);
        }
        last = Some(report);
    }
    Err(LlmError::Invalid {
        tag: tag.to_string(),
        report: last.expect("loop ran"),
    })
}

/// Replays canned outputs per tag in order; once a tag's script is used up
/// its last entry keeps being returned.
#[derive(Debug)]
pub struct ScriptedMock {
    scripts: BTreeMap<String, Vec<Value>>,
    cursors: Mutex<BTreeMap<String, usize>>,
}

impl ScriptedMock {
    pub fn new(scripts: BTreeMap<String, Vec<Value>>) -> Self {
        ScriptedMock {
            scripts,
            cursors: Mutex::new(BTreeMap::new()),
        }
    }

    /// Fixture format: an object mapping each tag to either one output or an
    /// array `{"script": [...]}` of outputs.
    pub fn from_json(text: &str) -> Result<Self, LlmError> {
        let v: Value = serde_json::from_str(text).map_err(|e| LlmError::Fixture(e.to_string()))?;
        let obj = v
            .as_object()
            .ok_or_else(|| LlmError::Fixture("top level must be an object of tags".into()))?;
        let mut scripts = BTreeMap::new();
        for (tag, entry) in obj {
            let outputs = match entry.get("script") {
                Some(Value::Array(items)) if !items.is_empty() => items.clone(),
                Some(_) => {
                    return Err(LlmError::Fixture(format!("{tag}: script must be a non-empty array")))
                }
                None => vec![entry.clone()],
            };
            scripts.insert(tag.clone(), outputs);
        }
        Ok(Self::new(scripts))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LlmError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| LlmError::Fixture(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Replace or add the script for one tag.
    pub fn with_script(mut self, tag: &str, outputs: Vec<Value>) -> Self {
        self.scripts.insert(tag.to_string(), outputs);
        self
    }
}

impl LlmClient for ScriptedMock {
    fn complete(&self, tag: &str, _prompt: &str, _schema: &SchemaDoc) -> Result<Value, LlmError> {
        let script = self
            .scripts
            .get(tag)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| LlmError::Unscripted(tag.to_string()))?;
        let mut cursors = self.cursors.lock().expect("mock cursor lock");
        let i = cursors.entry(tag.to_string()).or_insert(0);
        let out = script[(*i).min(script.len() - 1)].clone();
        *i += 1;
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExternalConfig {
    pub enabled: bool,
    /// Endpoint receiving `{"model", "prompt", "response_schema"}` and
    /// answering with the JSON document.
    pub endpoint: String,
    pub model: String,
    /// Environment variable holding the bearer token.
    pub api_key_env: String,
    pub timeout_secs: u64,
}

impl Default for ExternalConfig {
    fn default() -> Self {
        ExternalConfig {
            enabled: false,
            endpoint: String::new(),
            model: String::new(),
            api_key_env: "MLAT_LLM_API_KEY".into(),
            timeout_secs: 60,
        }
    }
}

/// Adapter for a hosted structured-output model. Does nothing unless enabled
/// in configuration with a key present.
#[derive(Debug)]
pub struct ExternalAdapter {
    config: ExternalConfig,
    key: Option<String>,
}

impl ExternalAdapter {
    pub fn new(config: ExternalConfig) -> Self {
        let key = std::env::var(&config.api_key_env).ok().filter(|k| !k.is_empty());
        ExternalAdapter { config, key }
    }
}

impl LlmClient for ExternalAdapter {
    fn complete(&self, tag: &str, prompt: &str, output_schema: &SchemaDoc) -> Result<Value, LlmError> {
        let key = match (&self.key, self.config.enabled) {
            (Some(k), true) => k,
            _ => return Err(LlmError::Disabled),
        };
        let schema_json = schema_to_json(output_schema);
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(self.config.timeout_secs)))
            .build()
            .into();
        let mut resp = agent
            .post(&self.config.endpoint)
            .header("authorization", &format!("Bearer {key}"))
            .send_json(serde_json::json!({
                "model": self.config.model,
                "tag": tag,
                "prompt": prompt,
                "response_schema": schema_json,
            }))
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        resp.body_mut()
            .read_json()
            .map_err(|e| LlmError::Transport(e.to_string()))
    }
}

fn schema_to_json(s: &SchemaDoc) -> Value {
    use mlat_core::schema::SchemaType;
    let kind = match s.kind {
        SchemaType::Object => "object",
        SchemaType::Array => "array",
        SchemaType::String => "string",
        SchemaType::Number => "number",
        SchemaType::Integer => "integer",
    };
    let mut out = serde_json::Map::new();
    out.insert("type".into(), kind.into());
    if !s.properties.is_empty() {
        let props = s
            .properties
            .iter()
            .map(|(k, v)| (k.clone(), schema_to_json(v)))
            .collect();
        out.insert("properties".into(), Value::Object(props));
    }
    if !s.required.is_empty() {
        out.insert("required".into(), s.required.clone().into());
    }
    if let Some(items) = &s.items {
        out.insert("items".into(), schema_to_json(items));
    }
    if let Some(e) = &s.enum_values {
        out.insert("enum".into(), Value::Array(e.clone()));
    }
    Value::Object(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use mlat_core::schema::score_schema;
    use serde_json::json;

    #[test]
    fn script_advances_then_sticks() {
        let mock = ScriptedMock::from_json(r#"{"a": {"script": [1, 2]}, "b": {"x": true}}"#).unwrap();
        let s = score_schema();
        assert_eq!(mock.complete("a", "", s).unwrap(), json!(1));
        assert_eq!(mock.complete("a", "", s).unwrap(), json!(2));
        assert_eq!(mock.complete("a", "", s).unwrap(), json!(2));
        assert_eq!(mock.complete("b", "", s).unwrap(), json!({"x": true}));
        assert!(matches!(mock.complete("c", "", s), Err(LlmError::Unscripted(_))));
    }

    #[test]
    fn one_retry_then_failure() {
        let good = json!({"score": 4, "rationale": "two legacy systems"});
        let bad = json!({"score": "high", "rationale": "?"});
        let mock = ScriptedMock::new(BTreeMap::new()).with_script("s", vec![bad.clone(), good.clone()]);
        assert_eq!(complete_valid(&mock, "s", "", score_schema()).unwrap(), good);
        let mock = ScriptedMock::new(BTreeMap::new()).with_script("s", vec![bad]);
        let err = complete_valid(&mock, "s", "", score_schema()).unwrap_err();
        match err {
            LlmError::Invalid { report, .. } => assert_eq!(report.violations[0].path, "score"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn external_adapter_is_gated() {
        let a = ExternalAdapter::new(ExternalConfig::default());
        assert_eq!(a.complete("t", "p", score_schema()), Err(LlmError::Disabled));
    }

    #[test]
    fn schema_export_reparses() {
        let s = mlat_core::schema::draft_schema();
        assert_eq!(&SchemaDoc::parse(&schema_to_json(s)).unwrap(), s);
    }
}
