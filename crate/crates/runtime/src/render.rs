//! Fill a text template's `{{dot.path}}` placeholders from a proposal.

use std::sync::OnceLock;

use mlat_core::report::usd;
use mlat_core::schema::ProposalDoc;
use regex::Regex;
use serde_json::Value;
use thiserror::Error;

const MONEY_FIELDS: [&str; 3] = ["total_price", "deposit_amount", "final_amount"];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RenderError {
    #[error("template placeholders with no matching field: {}", .0.join(", "))]
    UnknownPaths(Vec<String>),
    #[error("placeholder {path} points at an object that has no text form")]
    NotRenderable { path: String },
    #[error("rendered document still contains placeholders: {}", .0.join(", "))]
    Unresolved(Vec<String>),
}

fn placeholder() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\{\{\s*([A-Za-z0-9_.]+)\s*\}\}").expect("valid regex"))
}

/// `$#,###.##`, rounded to cents.
pub fn format_money(amount: f64) -> String {
    usd(amount, true)
}

fn lookup<'a>(root: &'a Value, path: &str) -> Option<&'a Value> {
    path.split('.').try_fold(root, |node, seg| match node {
        Value::Array(items) => items.get(seg.parse::<usize>().ok()?),
        Value::Object(map) => map.get(seg),
        _ => None,
    })
}

fn bullets(items: &[Value]) -> String {
    items
        .iter()
        .map(|v| format!("- {}", scalar(v)))
        .collect::<Vec<_>>()
        .join("\n")
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn week_block(entry: &Value) -> String {
    let list = |key: &str| bullets(entry[key].as_array().map(Vec::as_slice).unwrap_or_default());
    format!(
        "{}: {}\nFocus: {}\nActivities:\n{}\nDeliverables:\n{}",
        scalar(&entry["week"]),
        scalar(&entry["title"]),
        scalar(&entry["focus_goal"]),
        list("activities"),
        list("deliverables"),
    )
}

fn render_value(path: &str, v: &Value) -> Result<String, RenderError> {
    let leaf = path.rsplit('.').next().unwrap_or(path);
    match v {
        Value::Number(n) if MONEY_FIELDS.contains(&leaf) => Ok(format_money(n.as_f64().unwrap_or(0.0))),
        Value::Array(items) if leaf == "timeline_breakdown" => Ok(items
            .iter()
            .map(week_block)
            .collect::<Vec<_>>()
            .join("\n\n")),
        Value::Array(items) if items.iter().all(|i| !i.is_object() && !i.is_array()) => Ok(bullets(items)),
        Value::Object(o) if path.ends_with(|c: char| c.is_ascii_digit()) && o.contains_key("week") => {
            Ok(week_block(v))
        }
        Value::Array(_) | Value::Object(_) => Err(RenderError::NotRenderable { path: path.into() }),
        Value::Null => Ok(String::new()),
        other => Ok(scalar(other)),
    }
}

/// Substitute every placeholder in one pass. Unknown paths are all reported
/// together; substituted text is never expanded again.
pub fn render_proposal(proposal: &ProposalDoc, template: &str) -> Result<String, RenderError> {
    let doc = serde_json::to_value(proposal).expect("proposal serializes");
    let re = placeholder();
    let mut unknown = Vec::new();
    for cap in re.captures_iter(template) {
        let path = &cap[1];
        match lookup(&doc, path) {
            None => {
                if !unknown.iter().any(|u| u == path) {
                    unknown.push(path.to_string());
                }
            }
            Some(v) => {
                render_value(path, v)?;
            }
        }
    }
    if !unknown.is_empty() {
        return Err(RenderError::UnknownPaths(unknown));
    }
    let out = re
        .replace_all(template, |cap: &regex::Captures<'_>| {
            let path = &cap[1];
            render_value(path, lookup(&doc, path).expect("checked above")).expect("checked above")
        })
        .into_owned();
    let left: Vec<String> = re.find_iter(&out).map(|m| m.as_str().to_string()).collect();
    if !left.is_empty() {
        return Err(RenderError::Unresolved(left));
    }
    Ok(out)
}
