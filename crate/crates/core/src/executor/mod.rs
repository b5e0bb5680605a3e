//! Runs plans step by step, threading values between tools, and records a
//! trace of every call.

use std::fmt;
use std::str::FromStr;
use std::sync::mpsc;
use std::sync::Arc;
use std::time::{Duration, Instant};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};
use thiserror::Error;

use crate::cost::ToolKind;
use crate::plan::Plan;
use crate::value::{Num, Value};

mod infer;
mod tools;

pub use infer::{ChatInferencer, InferRequest, Inferencer, OfflineInferencer};
pub use tools::{ModelRegistry, Toolbox, ToolError};

pub const DEFAULT_STEP_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerType {
    Integer,
    Real01,
    RealList,
    Text,
    TextList,
    Label,
    YesNo,
}

impl AnswerType {
    pub fn as_str(self) -> &'static str {
        match self {
            AnswerType::Integer => "integer",
            AnswerType::Real01 => "real01",
            AnswerType::RealList => "real_list",
            AnswerType::Text => "text",
            AnswerType::TextList => "text_list",
            AnswerType::Label => "label",
            AnswerType::YesNo => "yes_no",
        }
    }
}

impl fmt::Display for AnswerType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AnswerType {
    type Err = String;

    fn from_str(s: &str) -> Result<AnswerType, String> {
        Ok(match s {
            "integer" => AnswerType::Integer,
            "real01" => AnswerType::Real01,
            "real_list" => AnswerType::RealList,
            "text" => AnswerType::Text,
            "text_list" => AnswerType::TextList,
            "label" => AnswerType::Label,
            "yes_no" => AnswerType::YesNo,
            other => return Err(format!("unknown answer type `{other}`")),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Answer {
    pub value: Value,
    pub declared_type: AnswerType,
}

impl Answer {
    pub fn to_json(&self) -> Json {
        json!({"value": self.value.to_json(), "type": self.declared_type.as_str()})
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExecError {
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("step {index} ({tool}) failed: {kind}: {message}")]
    StepFailed {
        index: usize,
        tool: String,
        kind: String,
        message: String,
    },
    #[error("step {index} references `{name}`, which no earlier step produced")]
    VariableUnresolved { index: usize, name: String },
    #[error("Finish expected {expected}, got {actual}")]
    FinishTypeMismatch { expected: String, actual: String },
    #[error("all {attempts} candidate plans failed")]
    AllPlansFailed { attempts: usize },
}

impl ExecError {
    pub fn kind(&self) -> &'static str {
        match self {
            ExecError::InvalidPlan(_) => "InvalidPlan",
            ExecError::StepFailed { .. } => "StepFailed",
            ExecError::VariableUnresolved { .. } => "VariableUnresolved",
            ExecError::FinishTypeMismatch { .. } => "FinishTypeMismatch",
            ExecError::AllPlansFailed { .. } => "AllPlansFailed",
        }
    }
}

fn mismatch(expected: impl Into<String>, actual: &Value) -> ExecError {
    ExecError::FinishTypeMismatch {
        expected: expected.into(),
        actual: describe(actual),
    }
}

fn describe(v: &Value) -> String {
    match v {
        Value::Number(Num::Int(i)) => format!("integer {i}"),
        Value::Number(Num::Real(r)) => format!("real {r}"),
        Value::Text(s) if s.chars().count() <= 40 => format!("text {s:?}"),
        other => other.kind().to_string(),
    }
}

/// Checks a final value against its declared type. The only coercion is
/// integer to real.
pub fn finish_check(value: Value, declared: AnswerType, labels: Option<&[String]>) -> Result<Answer, ExecError> {
    let ok = |value| Ok(Answer { value, declared_type: declared });
    match declared {
        AnswerType::Integer => match value {
            Value::Number(Num::Int(_)) => ok(value),
            other => Err(mismatch("integer", &other)),
        },
        AnswerType::Real01 => match value.as_num() {
            Some(n) if (0.0..=1.0).contains(&n.as_f64()) => ok(Value::real(n.as_f64())),
            Some(_) => Err(mismatch("real in [0, 1]", &value)),
            None => Err(mismatch("real in [0, 1]", &value)),
        },
        AnswerType::RealList => match &value {
            Value::List(items) => {
                let mut out = Vec::with_capacity(items.len());
                for i in items {
                    match i.as_num() {
                        Some(n) if n.as_f64().is_finite() => out.push(Value::real(n.as_f64())),
                        _ => return Err(mismatch("list of reals", &value)),
                    }
                }
                ok(Value::List(out))
            }
            other => Err(mismatch("list of reals", other)),
        },
        AnswerType::Text => match value {
            Value::Text(_) => ok(value),
            other => Err(mismatch("text", &other)),
        },
        AnswerType::TextList => match &value {
            Value::List(items) if items.iter().all(|i| matches!(i, Value::Text(_))) => ok(value),
            other => Err(mismatch("list of text", other)),
        },
        AnswerType::Label => match &value {
            Value::Text(s) => match labels {
                Some(ls) if !ls.iter().any(|l| l == s) => Err(mismatch(format!("one of {ls:?}"), &value)),
                _ => ok(value),
            },
            other => Err(mismatch("label", other)),
        },
        AnswerType::YesNo => match &value {
            Value::Text(s) if s == "Yes" || s == "No" => ok(value),
            other => Err(mismatch("`Yes` or `No`", other)),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum StepOutcome {
    Ok { value: Json },
    Error { kind: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub index: usize,
    pub tool: String,
    pub args: Json,
    pub cost: f64,
    pub outcome: StepOutcome,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub shadowed: Vec<String>,
    pub duration_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExecutionTrace {
    pub steps: Vec<StepRecord>,
    pub total_cost: f64,
    pub answer: Option<Json>,
    pub error: Option<String>,
}

impl ExecutionTrace {
    /// The trace with every duration zeroed, for replay comparisons.
    pub fn without_durations(&self) -> ExecutionTrace {
        let mut t = self.clone();
        t.steps.iter_mut().for_each(|s| s.duration_ms = 0);
        t
    }
}

pub struct Execution {
    pub trace: ExecutionTrace,
    pub result: Result<Answer, ExecError>,
}

/// Longest list rendered in full inside a trace.
const TRACE_LIST_LIMIT: usize = 20;

/// JSON summary of a value for traces: long lists are cut to their head.
pub fn summarize(v: &Value) -> Json {
    match v {
        Value::List(items) if items.len() > TRACE_LIST_LIMIT => json!({
            "list_len": items.len(),
            "head": items[..TRACE_LIST_LIMIT].iter().map(summarize).collect::<Vec<_>>(),
        }),
        Value::List(items) => Json::Array(items.iter().map(summarize).collect()),
        Value::Map(m) => Json::Object(m.iter().map(|(k, v)| (k.clone(), summarize(v))).collect()),
        other => other.to_json(),
    }
}

type Env = IndexMap<String, Value>;

/// Resolves `$name` and `$name.key...` references; `$$` escapes a literal
/// dollar sign.
fn resolve(j: &Json, env: &Env) -> Result<Value, String> {
    match j {
        Json::String(s) if s.starts_with("$$") => Ok(Value::Text(s[1..].to_string())),
        Json::String(s) if s.starts_with('$') && s.len() > 1 => {
            let mut parts = s[1..].split('.');
            let head = parts.next().unwrap();
            let root = env.get(head).ok_or_else(|| head.to_string())?;
            let rest: Vec<&str> = parts.collect();
            root.get_path(&rest).cloned().ok_or_else(|| s[1..].to_string())
        }
        Json::Array(items) => items.iter().map(|i| resolve(i, env)).collect::<Result<_, _>>().map(Value::List),
        Json::Object(m) => m
            .iter()
            .map(|(k, v)| resolve(v, env).map(|v| (k.clone(), v)))
            .collect::<Result<_, _>>()
            .map(Value::Map),
        other => Ok(Value::from_json(other)),
    }
}

fn run_with_timeout(
    tb: &Arc<Toolbox>,
    kind: ToolKind,
    args: IndexMap<String, Value>,
) -> Result<Value, ToolError> {
    let (tx, rx) = mpsc::channel();
    let tb2 = Arc::clone(tb);
    std::thread::Builder::new()
        .name(format!("step-{kind}"))
        .spawn(move || {
            let _ = tx.send(tools::run_tool(&tb2, kind, &args));
        })
        .map_err(|e| ToolError::new("Spawn", e.to_string()))?;
    match rx.recv_timeout(tb.step_timeout) {
        Ok(r) => r,
        // A timed-out tool thread is left to finish on its own; its result
        // is discarded.
        Err(mpsc::RecvTimeoutError::Timeout) => Err(ToolError::new(
            "Timeout",
            format!("step exceeded {} ms", tb.step_timeout.as_millis()),
        )),
        Err(mpsc::RecvTimeoutError::Disconnected) => Err(ToolError::new("Panic", "tool thread panicked")),
    }
}

/// Executes `plan` sequentially. Output of step i is bound to `s{i}`;
/// mapping outputs also bind each key, and TableLoader also binds `df`.
pub fn execute_plan(plan: &Plan, tb: &Arc<Toolbox>) -> Execution {
    let mut trace = ExecutionTrace {
        steps: Vec::new(),
        total_cost: 0.0,
        answer: None,
        error: None,
    };
    let fail = |mut trace: ExecutionTrace, e: ExecError| {
        trace.error = Some(e.to_string());
        Execution { trace, result: Err(e) }
    };
    if !plan.ends_with_finish() {
        return fail(trace, ExecError::InvalidPlan("plan does not end with Finish".into()));
    }
    let mut costs = Vec::with_capacity(plan.steps.len());
    for s in &plan.steps {
        match tb.costs.tool_cost(s) {
            Ok(c) => costs.push(c),
            Err(e) => return fail(trace, ExecError::InvalidPlan(e.to_string())),
        }
    }
    let mut env: Env = IndexMap::new();
    for (index, (call, cost)) in plan.steps.iter().zip(costs).enumerate() {
        let kind = ToolKind::from_name(&call.tool).expect("costed above");
        let started = Instant::now();
        trace.total_cost += cost;
        let mut record = StepRecord {
            index,
            tool: kind.to_string(),
            args: Json::Object(call.args.clone()),
            cost,
            outcome: StepOutcome::Ok { value: Json::Null },
            shadowed: Vec::new(),
            duration_ms: 0,
        };
        let mut args = IndexMap::new();
        for (k, j) in &call.args {
            match resolve(j, &env) {
                Ok(v) => {
                    args.insert(k.clone(), v);
                }
                Err(name) => {
                    let e = ExecError::VariableUnresolved { index, name };
                    record.outcome = StepOutcome::Error {
                        kind: e.kind().into(),
                        message: e.to_string(),
                    };
                    trace.steps.push(record);
                    return fail(trace, e);
                }
            }
        }
        record.args = Json::Object(args.iter().map(|(k, v)| (k.clone(), summarize(v))).collect());
        // TableScript reads the most recently loaded table unless told otherwise.
        if kind == ToolKind::TableScript && !args.contains_key("df") {
            if let Some(df) = env.get("df") {
                args.insert("df".into(), df.clone());
            }
        }

        if kind == ToolKind::Finish {
            let result = finish_step(&args);
            record.duration_ms = started.elapsed().as_millis() as u64;
            match result {
                Ok(answer) => {
                    record.outcome = StepOutcome::Ok {
                        value: summarize(&answer.value),
                    };
                    trace.steps.push(record);
                    trace.answer = Some(answer.to_json());
                    return Execution {
                        trace,
                        result: Ok(answer),
                    };
                }
                Err(e) => {
                    record.outcome = StepOutcome::Error {
                        kind: e.kind().into(),
                        message: e.to_string(),
                    };
                    trace.steps.push(record);
                    return fail(trace, e);
                }
            }
        }

        let out = run_with_timeout(tb, kind, args);
        record.duration_ms = started.elapsed().as_millis() as u64;
        match out {
            Ok(value) => {
                record.outcome = StepOutcome::Ok { value: summarize(&value) };
                if let Value::Map(m) = &value {
                    for (k, v) in m {
                        if env.insert(k.clone(), v.clone()).is_some() {
                            record.shadowed.push(k.clone());
                        }
                    }
                }
                if kind == ToolKind::TableLoader && env.insert("df".into(), value.clone()).is_some() {
                    record.shadowed.push("df".into());
                }
                env.insert(format!("s{index}"), value);
                trace.steps.push(record);
            }
            Err(te) => {
                let e = ExecError::StepFailed {
                    index,
                    tool: kind.to_string(),
                    kind: te.kind.clone(),
                    message: te.message.clone(),
                };
                record.outcome = StepOutcome::Error {
                    kind: te.kind,
                    message: te.message,
                };
                trace.steps.push(record);
                return fail(trace, e);
            }
        }
    }
    unreachable!("plans ending in Finish return from the loop")
}

fn finish_step(args: &IndexMap<String, Value>) -> Result<Answer, ExecError> {
    let ty_text = args
        .get("type")
        .and_then(Value::as_text)
        .ok_or_else(|| ExecError::InvalidPlan("Finish needs a string `type` argument".into()))?;
    let declared: AnswerType = ty_text.parse().map_err(ExecError::InvalidPlan)?;
    let value = args
        .get("answer")
        .cloned()
        .ok_or_else(|| ExecError::InvalidPlan("Finish needs an `answer` argument".into()))?;
    let labels: Option<Vec<String>> = match args.get("labels") {
        None => None,
        Some(Value::List(items)) => Some(
            items
                .iter()
                .map(|i| i.as_text().map(str::to_string))
                .collect::<Option<_>>()
                .ok_or_else(|| ExecError::InvalidPlan("Finish `labels` must be a list of text".into()))?,
        ),
        Some(_) => return Err(ExecError::InvalidPlan("Finish `labels` must be a list of text".into())),
    };
    finish_check(value, declared, labels.as_deref())
}

pub struct FallbackRun {
    pub result: Result<Answer, ExecError>,
    /// One trace per attempted plan, in attempt order.
    pub traces: Vec<ExecutionTrace>,
    /// Index into the candidate list of each attempted plan.
    pub order: Vec<usize>,
    pub costs: Vec<f64>,
}

impl FallbackRun {
    pub fn attempts(&self) -> usize {
        self.traces.len()
    }
}

/// Tries valid candidates from cheapest to most expensive (earliest first
/// on ties) until one succeeds.
pub fn run_with_fallback(candidates: &[Plan], tb: &Arc<Toolbox>) -> FallbackRun {
    let mut costed: Vec<(usize, f64)> = candidates
        .iter()
        .enumerate()
        .filter(|(_, p)| p.ends_with_finish())
        .filter_map(|(i, p)| tb.costs.plan_cost(&p.steps).ok().map(|c| (i, c)))
        .collect();
    costed.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let mut run = FallbackRun {
        result: Err(ExecError::AllPlansFailed { attempts: 0 }),
        traces: Vec::new(),
        order: Vec::new(),
        costs: Vec::new(),
    };
    for (i, c) in costed {
        let ex = execute_plan(&candidates[i], tb);
        run.traces.push(ex.trace);
        run.order.push(i);
        run.costs.push(c);
        if let Ok(a) = ex.result {
            run.result = Ok(a);
            return run;
        }
    }
    run.result = Err(ExecError::AllPlansFailed {
        attempts: run.traces.len(),
    });
    run
}
