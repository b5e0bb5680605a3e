use std::sync::Arc;

use super::AnswerType;
use crate::chat::Generator;
use crate::classify::fnv1a;
use crate::table::Table;
use crate::value::Value;

/// A request to answer a question directly with a language model.
#[derive(Debug, Clone)]
pub struct InferRequest {
    pub prompt: String,
    pub answer_type: Option<AnswerType>,
    pub labels: Vec<String>,
    /// Expected list length for list answers.
    pub length: Option<usize>,
    pub table: Option<Arc<Table>>,
}

pub trait Inferencer: Send + Sync {
    fn infer(&self, request: &InferRequest) -> Result<Value, String>;
}

/// Deterministic stand-in used when no model endpoint is configured. It
/// does not read the data: answers are well-typed guesses derived from a
/// hash of the prompt.
pub struct OfflineInferencer;

impl Inferencer for OfflineInferencer {
    fn infer(&self, req: &InferRequest) -> Result<Value, String> {
        let h = fnv1a(req.prompt.as_bytes()) as usize;
        Ok(match req.answer_type {
            Some(AnswerType::Integer) => Value::int((h % 1500) as i64),
            Some(AnswerType::Real01) => Value::real((h % 1001) as f64 / 1000.0),
            Some(AnswerType::RealList) => Value::List(vec![Value::real(50.0); req.length.unwrap_or(1)]),
            Some(AnswerType::TextList) => Value::List(Vec::new()),
            Some(AnswerType::Label) if !req.labels.is_empty() => Value::text(req.labels[h % req.labels.len()].clone()),
            Some(AnswerType::YesNo) => Value::text(if h % 2 == 0 { "Yes" } else { "No" }),
            _ => Value::text("unknown"),
        })
    }
}

/// Sends the question (plus a preview of any bound table) to a chat model
/// and parses the reply as JSON when possible.
pub struct ChatInferencer {
    pub generator: Arc<dyn Generator>,
}

const PREVIEW_ROWS: usize = 5;

fn render_request(req: &InferRequest) -> String {
    let mut out = String::new();
    if let Some(t) = &req.table {
        out.push_str(&format!(
            "You have a table `{}` with {} rows and columns: {}.\nFirst rows:\n",
            t.name(),
            t.len(),
            t.columns().iter().map(|c| c.name.as_str()).collect::<Vec<_>>().join(", ")
        ));
        for row in t.rows().iter().take(PREVIEW_ROWS) {
            let cells: Vec<String> = row.iter().map(|v| v.to_json().to_string()).collect();
            out.push_str(&cells.join(" | "));
            out.push('\n');
        }
        out.push('\n');
    }
    out.push_str(&req.prompt);
    out.push_str("\n\nReply with the answer only");
    match req.answer_type {
        Some(AnswerType::Integer) => out.push_str(", as a JSON integer."),
        Some(AnswerType::Real01) => out.push_str(", as a JSON number between 0 and 1."),
        Some(AnswerType::RealList) => out.push_str(", as a JSON array of numbers."),
        Some(AnswerType::TextList) => out.push_str(", as a JSON array of strings."),
        Some(AnswerType::Label) if !req.labels.is_empty() => {
            out.push_str(&format!(", exactly one of: {}.", req.labels.join(" | ")))
        }
        Some(AnswerType::YesNo) => out.push_str(", exactly `Yes` or `No`."),
        _ => out.push('.'),
    }
    out
}

/// Strips code fences and quotes, then parses JSON scalars and arrays.
pub(crate) fn parse_reply(reply: &str, ty: Option<AnswerType>) -> Value {
    let mut s = reply.trim();
    if let Some(inner) = s.strip_prefix("```") {
        let inner = inner.trim_start_matches(|c: char| c.is_alphanumeric());
        s = inner.strip_suffix("```").unwrap_or(inner).trim();
    }
    match ty {
        Some(AnswerType::Label) | Some(AnswerType::YesNo) | Some(AnswerType::Text) => {
            Value::text(s.trim_matches(|c| c == '"' || c == '\'' || c == '`' || c == '.').trim())
        }
        _ => match serde_json::from_str::<serde_json::Value>(s) {
            Ok(j) => Value::from_json(&j),
            Err(_) => Value::text(s),
        },
    }
}

impl Inferencer for ChatInferencer {
    fn infer(&self, req: &InferRequest) -> Result<Value, String> {
        let reply = self
            .generator
            .generate(&render_request(req))
            .map_err(|e| e.to_string())?;
        Ok(parse_reply(&reply, req.answer_type))
    }
}
