use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use indexmap::IndexMap;

use super::infer::{InferRequest, Inferencer};
use super::AnswerType;
use crate::calculator;
use crate::classify::{train_for_target, ClassifierService, LogRegModel, RemoteModelRef, Target};
use crate::cost::{ClassifierKind, CostTable, ForecastKind, ToolKind};
use crate::forecast;
use crate::script::{self, parse_script};
use crate::table::{train_split, SubsetSpec, TableStore};
use crate::value::{Num, Value};

#[derive(Debug, Clone, PartialEq)]
pub struct ToolError {
    pub kind: String,
    pub message: String,
}

impl ToolError {
    pub fn new(kind: &str, message: impl Into<String>) -> ToolError {
        ToolError {
            kind: kind.to_string(),
            message: message.into(),
        }
    }
}

fn bad_args(message: impl Into<String>) -> ToolError {
    ToolError::new("MalformedArguments", message)
}

/// Natively trained classifiers, trained on first use from the training
/// split of each dataset and optionally cached on disk.
pub struct ModelRegistry {
    store: Arc<TableStore>,
    seed: u64,
    cache_dir: Option<PathBuf>,
    models: Mutex<HashMap<Target, Arc<LogRegModel>>>,
}

impl ModelRegistry {
    pub fn new(store: Arc<TableStore>, seed: u64, cache_dir: Option<PathBuf>) -> ModelRegistry {
        ModelRegistry {
            store,
            seed,
            cache_dir,
            models: Mutex::new(HashMap::new()),
        }
    }

    pub fn get(&self, target: &Target) -> Result<Arc<LogRegModel>, crate::classify::ClassifyError> {
        // Held across training so each target is fitted once.
        let mut models = self.models.lock().unwrap_or_else(|p| p.into_inner());
        if let Some(m) = models.get(target) {
            return Ok(Arc::clone(m));
        }
        let ds = target.dataset();
        let (train, _) = train_split(self.store.full(ds), ds);
        let model = Arc::new(train_for_target(target, &train, self.seed, self.cache_dir.as_deref())?);
        models.insert(target.clone(), Arc::clone(&model));
        Ok(model)
    }
}

/// Everything a plan step can touch.
pub struct Toolbox {
    pub store: Arc<TableStore>,
    pub costs: CostTable,
    pub models: ModelRegistry,
    pub remote: Option<Arc<dyn ClassifierService>>,
    pub remote_endpoint: String,
    pub inferencer: Arc<dyn Inferencer>,
    pub script_budget: u64,
    pub step_timeout: Duration,
}

impl Toolbox {
    pub fn new(store: Arc<TableStore>, inferencer: Arc<dyn Inferencer>) -> Toolbox {
        Toolbox {
            models: ModelRegistry::new(Arc::clone(&store), 0, None),
            store,
            costs: CostTable::default(),
            remote: None,
            remote_endpoint: String::new(),
            inferencer,
            script_budget: script::DEFAULT_STEP_BUDGET,
            step_timeout: super::DEFAULT_STEP_TIMEOUT,
        }
    }
}

type Args = IndexMap<String, Value>;

fn text<'a>(args: &'a Args, key: &str) -> Result<&'a str, ToolError> {
    args.get(key)
        .and_then(Value::as_text)
        .ok_or_else(|| bad_args(format!("missing text argument `{key}`")))
}

fn pair(v: &Value) -> Option<(i64, i64)> {
    match v.as_list()? {
        [Value::Number(Num::Int(a)), Value::Number(Num::Int(b))] => Some((*a, *b)),
        _ => None,
    }
}

fn subset_arg(args: &Args) -> Result<SubsetSpec, ToolError> {
    let Some(v) = args.get("subset") else {
        return Ok(SubsetSpec::All);
    };
    let err = || bad_args("`subset` must be \"all\", {\"years\": [a, b]} or {\"rows\": [a, b]}");
    match v {
        Value::Null => Ok(SubsetSpec::All),
        Value::Text(s) if s == "all" => Ok(SubsetSpec::All),
        Value::Map(m) if m.len() == 1 => {
            let (k, v) = m.get_index(0).unwrap();
            let (a, b) = pair(v).ok_or_else(err)?;
            match k.as_str() {
                "years" => Ok(SubsetSpec::YearRange {
                    start: i32::try_from(a).map_err(|_| err())?,
                    end: i32::try_from(b).map_err(|_| err())?,
                }),
                "rows" if a >= 0 && b >= 0 => Ok(SubsetSpec::RowRange {
                    start: a as usize,
                    end: b as usize,
                }),
                _ => Err(err()),
            }
        }
        _ => Err(err()),
    }
}

fn run_script(tb: &Toolbox, args: &Args, table_bound: bool) -> Result<Value, ToolError> {
    let program = parse_script(text(args, "script")?).map_err(|e| ToolError::new("ScriptError", e.to_string()))?;
    let table = if table_bound {
        let t = args
            .get("df")
            .ok_or_else(|| bad_args("TableScript needs a table in `df` (bind one with TableLoader)"))?;
        Some(Arc::clone(
            t.as_table().ok_or_else(|| bad_args("`df` is not a table"))?,
        ))
    } else {
        None
    };
    let inputs = match args.get("inputs") {
        None => IndexMap::new(),
        Some(Value::Map(m)) => m.clone(),
        Some(_) => return Err(bad_args("`inputs` must be a mapping")),
    };
    script::run(&program, table, &inputs, tb.script_budget)
        .map(Value::Map)
        .map_err(|e| ToolError::new("ScriptError", e.to_string()))
}

fn classify(tb: &Toolbox, args: &Args) -> Result<Value, ToolError> {
    let model = text(args, "model")?;
    let kind = ClassifierKind::from_name(model).ok_or_else(|| bad_args(format!("unknown model `{model}`")))?;
    let target_name = text(args, "target")?;
    let input = text(args, "text")?;
    let (label, score) = match kind {
        ClassifierKind::LogReg => {
            let target: Target = target_name
                .parse()
                .map_err(|e: crate::classify::ClassifyError| bad_args(e.to_string()))?;
            let m = tb
                .models
                .get(&target)
                .map_err(|e| ToolError::new("TrainingFailed", e.to_string()))?;
            m.predict(input)
        }
        ClassifierKind::Cnn | ClassifierKind::Bert => {
            let svc = tb.remote.as_ref().ok_or_else(|| {
                ToolError::new("ServiceUnreachable", "no classifier service is configured")
            })?;
            let r = RemoteModelRef {
                model_id: kind.as_str().to_string(),
                endpoint: tb.remote_endpoint.clone(),
                target: target_name.to_string(),
            };
            svc.classify(&r, input).map_err(|e| {
                let k = match e {
                    crate::classify::ClassifyError::ProtocolError(_) => "ProtocolError",
                    crate::classify::ClassifyError::RemoteModelError(_) => "RemoteModelError",
                    _ => "ServiceUnreachable",
                };
                ToolError::new(k, e.to_string())
            })?
        }
    };
    let mut out = IndexMap::new();
    out.insert("label".to_string(), Value::Text(label));
    out.insert("score".to_string(), Value::real(score));
    Ok(Value::Map(out))
}

pub(super) fn run_tool(tb: &Toolbox, kind: ToolKind, args: &Args) -> Result<Value, ToolError> {
    match kind {
        ToolKind::Calculator => {
            let r = calculator::evaluate(text(args, "expression")?)
                .map_err(|e| ToolError::new("CalculatorError", e.to_string()))?;
            Ok(calculator::to_value(&r))
        }
        ToolKind::TableLoader => {
            let db = text(args, "db_name")?;
            let subset = subset_arg(args)?;
            tb.store
                .load(db, subset)
                .map(Value::Table)
                .map_err(|e| ToolError::new("TableError", e.to_string()))
        }
        ToolKind::TableScript => run_script(tb, args, true),
        ToolKind::PureScript => run_script(tb, args, false),
        ToolKind::Forecaster => {
            let model = text(args, "model")?;
            let kind = ForecastKind::from_name(model).ok_or_else(|| bad_args(format!("unknown model `{model}`")))?;
            let data: Vec<f64> = args
                .get("previous_data")
                .and_then(Value::as_list)
                .and_then(|l| l.iter().map(Value::as_f64).collect())
                .ok_or_else(|| bad_args("`previous_data` must be a list of numbers"))?;
            let horizon = match args.get("forecast_length") {
                Some(Value::Number(Num::Int(h))) if *h >= 1 => *h as usize,
                _ => return Err(bad_args("`forecast_length` must be a positive integer")),
            };
            forecast::forecast(&data, kind, horizon)
                .map(|v| Value::List(v.into_iter().map(Value::real).collect()))
                .map_err(|e| ToolError::new("ForecastError", e.to_string()))
        }
        ToolKind::TextClassifier => classify(tb, args),
        ToolKind::Inferencer => {
            let answer_type = match args.get("answer_type") {
                None => None,
                Some(v) => Some(
                    v.as_text()
                        .ok_or_else(|| bad_args("`answer_type` must be text"))?
                        .parse::<AnswerType>()
                        .map_err(bad_args)?,
                ),
            };
            let labels = match args.get("labels") {
                None => Vec::new(),
                Some(v) => v
                    .as_list()
                    .and_then(|l| l.iter().map(|x| x.as_text().map(str::to_string)).collect())
                    .ok_or_else(|| bad_args("`labels` must be a list of text"))?,
            };
            let length = match args.get("length") {
                None => None,
                Some(Value::Number(Num::Int(n))) if *n >= 0 => Some(*n as usize),
                Some(_) => return Err(bad_args("`length` must be a non-negative integer")),
            };
            let req = InferRequest {
                prompt: text(args, "prompt")?.to_string(),
                answer_type,
                labels,
                length,
                table: args.get("df").and_then(Value::as_table).cloned(),
            };
            tb.inferencer
                .infer(&req)
                .map_err(|e| ToolError::new("InferenceFailed", e))
        }
        ToolKind::Finish => Err(ToolError::new("Internal", "Finish is handled by the executor")),
    }
}
