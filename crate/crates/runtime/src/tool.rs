use std::fmt;
use std::sync::Arc;

use indexmap::IndexMap;
use mlat_core::schema::{validate, SchemaDoc, ValidationReport};
use serde_json::Value;
use thiserror::Error;

pub type ToolFn = dyn Fn(&Value) -> Result<Value, String> + Send + Sync;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ToolError {
    #[error("tool {tool}: request does not match its input schema: {report}")]
    BadRequest { tool: String, report: ValidationReport },
    #[error("tool {tool}: response does not match its output schema: {report}")]
    BadResponse { tool: String, report: ValidationReport },
    #[error("tool {tool} failed: {message}")]
    Failed { tool: String, message: String },
    #[error("no tool named {0:?} is registered")]
    Missing(String),
    #[error("a tool named {0:?} is already registered")]
    Duplicate(String),
}

/// A named capability with JSON schemas on both sides.
#[derive(Clone)]
pub struct Tool {
    pub name: String,
    pub description: String,
    pub input_schema: SchemaDoc,
    pub output_schema: SchemaDoc,
    invoke: Arc<ToolFn>,
}

impl fmt::Debug for Tool {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tool")
            .field("name", &self.name)
            .field("description", &self.description)
            .finish_non_exhaustive()
    }
}

impl Tool {
    pub fn new(
        name: impl Into<String>,
        description: impl Into<String>,
        input_schema: SchemaDoc,
        output_schema: SchemaDoc,
        invoke: impl Fn(&Value) -> Result<Value, String> + Send + Sync + 'static,
    ) -> Self {
        Tool {
            name: name.into(),
            description: description.into(),
            input_schema,
            output_schema,
            invoke: Arc::new(invoke),
        }
    }

    /// Invoke with schema checks on the request and the response.
    pub fn call(&self, request: &Value) -> Result<Value, ToolError> {
        let report = validate(request, &self.input_schema);
        if !report.valid {
            return Err(ToolError::BadRequest {
                tool: self.name.clone(),
                report,
            });
        }
        let response = (self.invoke)(request).map_err(|message| ToolError::Failed {
            tool: self.name.clone(),
            message,
        })?;
        let report = validate(&response, &self.output_schema);
        if !report.valid {
            return Err(ToolError::BadResponse {
                tool: self.name.clone(),
                report,
            });
        }
        Ok(response)
    }
}

/// Tools by unique name, listed in registration order.
#[derive(Debug, Clone, Default)]
pub struct ToolRegistry {
    tools: IndexMap<String, Tool>,
}

impl ToolRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, tool: Tool) -> Result<(), ToolError> {
        if self.tools.contains_key(&tool.name) {
            return Err(ToolError::Duplicate(tool.name));
        }
        self.tools.insert(tool.name.clone(), tool);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&Tool, ToolError> {
        self.tools
            .get(name)
            .ok_or_else(|| ToolError::Missing(name.to_string()))
    }

    pub fn names(&self) -> Vec<&str> {
        self.tools.keys().map(String::as_str).collect()
    }

    pub fn len(&self) -> usize {
        self.tools.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tools.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn schema(v: Value) -> SchemaDoc {
        SchemaDoc::parse(&v).unwrap()
    }

    fn echo(name: &str) -> Tool {
        let s = schema(json!({"type": "object", "properties": {"x": {"type": "number"}}, "required": ["x"]}));
        Tool::new(name, "echo", s.clone(), s, |v| Ok(v.clone()))
    }

    #[test]
    fn register_and_lookup() {
        let mut r = ToolRegistry::new();
        r.register(echo("pricing_model")).unwrap();
        assert_eq!(r.get("pricing_model").unwrap().name, "pricing_model");
        assert!(matches!(r.register(echo("pricing_model")), Err(ToolError::Duplicate(_))));
        assert!(matches!(r.get("nope"), Err(ToolError::Missing(_))));
    }

    #[test]
    fn insertion_order() {
        let mut r = ToolRegistry::new();
        for n in ["pricing_model", "revenue_lookup", "company_research"] {
            r.register(echo(n)).unwrap();
        }
        assert_eq!(r.names(), ["pricing_model", "revenue_lookup", "company_research"]);
    }

    #[test]
    fn schemas_enforced_both_ways() {
        let t = echo("t");
        assert_eq!(t.call(&json!({"x": 1})).unwrap(), json!({"x": 1}));
        assert!(matches!(t.call(&json!({"x": "1"})), Err(ToolError::BadRequest { .. })));
        let s = schema(json!({"type": "object", "properties": {"x": {"type": "number"}}, "required": ["x"]}));
        let liar = Tool::new("liar", "", s.clone(), s, |_| Ok(json!({})));
        assert!(matches!(liar.call(&json!({"x": 1})), Err(ToolError::BadResponse { .. })));
        let s = schema(json!({"type": "object"}));
        let broken = Tool::new("broken", "", s.clone(), s, |_| Err("down".into()));
        let err = broken.call(&json!({})).unwrap_err();
        assert_eq!(err.to_string(), "tool broken failed: down");
    }
}
