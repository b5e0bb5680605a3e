//! Reliability/inspectability costs of tool calls and plans.
//!
//! Every tool carries three cost components: performance risk (P), debug
//! difficulty (D) and argument complexity (C). The cost of a call is
//! P + D + C and the cost of a plan is the sum over its steps.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::plan::{Plan, ToolCall};
use crate::script::{parse_statements, Stmt};

#[derive(Debug, Error, PartialEq)]
pub enum CostError {
    #[error("unknown tool `{0}`")]
    UnknownTool(String),
    #[error("malformed arguments for {tool}: {message}")]
    MalformedArguments { tool: String, message: String },
    #[error("invalid cost table: {0}")]
    InvalidTable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ToolKind {
    Calculator,
    TableLoader,
    PureScript,
    TableScript,
    Forecaster,
    TextClassifier,
    Inferencer,
    Finish,
}

impl ToolKind {
    pub const ALL: [ToolKind; 8] = [
        ToolKind::Calculator,
        ToolKind::TableLoader,
        ToolKind::PureScript,
        ToolKind::TableScript,
        ToolKind::Forecaster,
        ToolKind::TextClassifier,
        ToolKind::Inferencer,
        ToolKind::Finish,
    ];

    /// Accepts canonical names and the common aliases used by chat models.
    pub fn from_name(name: &str) -> Option<ToolKind> {
        Some(match name.trim() {
            "Calculator" => ToolKind::Calculator,
            "TableLoader" | "DBLoader" => ToolKind::TableLoader,
            "PureScript" | "PythonInterpreter" => ToolKind::PureScript,
            "TableScript" | "PandasInterpreter" => ToolKind::TableScript,
            "Forecaster" => ToolKind::Forecaster,
            "TextClassifier" | "TextualClassifier" => ToolKind::TextClassifier,
            "Inferencer" | "LLMInferencer" => ToolKind::Inferencer,
            "Finish" => ToolKind::Finish,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ToolKind::Calculator => "Calculator",
            ToolKind::TableLoader => "TableLoader",
            ToolKind::PureScript => "PureScript",
            ToolKind::TableScript => "TableScript",
            ToolKind::Forecaster => "Forecaster",
            ToolKind::TextClassifier => "TextClassifier",
            ToolKind::Inferencer => "Inferencer",
            ToolKind::Finish => "Finish",
        }
    }

    pub fn is_script(self) -> bool {
        matches!(self, ToolKind::PureScript | ToolKind::TableScript)
    }
}

impl fmt::Display for ToolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ForecastKind {
    Ols,
    Arima,
}

impl ForecastKind {
    pub fn from_name(name: &str) -> Option<ForecastKind> {
        match name.trim() {
            "linear_regression" | "ols" | "OLS" => Some(ForecastKind::Ols),
            "ARIMA" | "arima" => Some(ForecastKind::Arima),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ForecastKind::Ols => "linear_regression",
            ForecastKind::Arima => "ARIMA",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassifierKind {
    LogReg,
    Cnn,
    Bert,
}

impl ClassifierKind {
    pub fn from_name(name: &str) -> Option<ClassifierKind> {
        match name.trim() {
            "logistic_regression" | "logreg" => Some(ClassifierKind::LogReg),
            "cnn" => Some(ClassifierKind::Cnn),
            "bert-base-uncased" | "bert" => Some(ClassifierKind::Bert),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::LogReg => "logistic_regression",
            ClassifierKind::Cnn => "cnn",
            ClassifierKind::Bert => "bert-base-uncased",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostComponents {
    #[serde(rename = "P")]
    pub performance_risk: f64,
    #[serde(rename = "D")]
    pub debug_difficulty: f64,
    #[serde(rename = "C")]
    pub argument_complexity: f64,
}

impl CostComponents {
    pub const fn new(p: f64, d: f64, c: f64) -> CostComponents {
        CostComponents {
            performance_risk: p,
            debug_difficulty: d,
            argument_complexity: c,
        }
    }

    pub fn total(&self) -> f64 {
        self.performance_risk + self.debug_difficulty + self.argument_complexity
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScriptComplexity {
    pub lines: usize,
    pub imports: usize,
}

impl ScriptComplexity {
    /// √lines × max(imports, 1).
    pub fn weight(&self) -> f64 {
        (self.lines as f64).sqrt() * self.imports.max(1) as f64
    }
}

/// Counts statements and distinct imported capabilities.
///
/// If the source does not parse, falls back to non-empty, non-comment raw
/// lines with zero imports.
pub fn script_complexity(source: &str) -> ScriptComplexity {
    match parse_statements(source) {
        Ok(stmts) => {
            let mut names: Vec<&str> = Vec::new();
            let mut lines = 0;
            for s in &stmts {
                match s {
                    Stmt::Use { names: ns, .. } => {
                        for n in ns {
                            if !names.contains(&n.as_str()) {
                                names.push(n);
                            }
                        }
                    }
                    Stmt::Assign { .. } => lines += 1,
                }
            }
            ScriptComplexity {
                lines,
                imports: names.len(),
            }
        }
        Err(_) => ScriptComplexity {
            lines: source
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .count(),
            imports: 0,
        },
    }
}

/// A cost-table entry: fixed components, or the script formula whose D and
/// C halves are each `scale × √lines × max(imports, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CostEntry {
    Fixed(CostComponents),
    Script { formula: ScriptFormula, scale: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScriptFormula {
    #[serde(rename = "sqrt_lines_times_imports")]
    SqrtLinesTimesImports,
}

impl CostEntry {
    fn components(&self, script: Option<ScriptComplexity>) -> CostComponents {
        match self {
            CostEntry::Fixed(c) => *c,
            CostEntry::Script { scale, .. } => {
                let half = scale * script.map(|s| s.weight()).unwrap_or(0.0);
                CostComponents::new(0.0, half, half)
            }
        }
    }

    fn describe(&self) -> String {
        match self {
            CostEntry::Fixed(c) => format!(
                "P={} D={} C={} total={}",
                fmt_num(c.performance_risk),
                fmt_num(c.debug_difficulty),
                fmt_num(c.argument_complexity),
                fmt_num(c.total())
            ),
            CostEntry::Script { scale, .. } => format!(
                "P=0 D=sqrt(lines)*max(imports,1)*{s} C=sqrt(lines)*max(imports,1)*{s} total=sqrt(lines)*max(imports,1)*{t}",
                s = fmt_num(*scale),
                t = fmt_num(2.0 * scale)
            ),
        }
    }
}

fn fmt_num(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

/// Keys: tool names, with `.model` suffixes for Forecaster and TextClassifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostTable {
    entries: BTreeMap<String, CostEntry>,
}

const SCRIPT_HALF: CostEntry = CostEntry::Script {
    formula: ScriptFormula::SqrtLinesTimesImports,
    scale: 0.5,
};

impl Default for CostTable {
    fn default() -> CostTable {
        let fixed = |p, d, c| CostEntry::Fixed(CostComponents::new(p, d, c));
        let entries = [
            ("Calculator", fixed(0.0, 1.0, 1.0)),
            ("TableLoader", fixed(0.0, 2.0, 1.0)),
            ("PureScript", SCRIPT_HALF),
            ("TableScript", SCRIPT_HALF),
            ("Forecaster.linear_regression", fixed(3.0, 2.0, 1.0)),
            ("Forecaster.ARIMA", fixed(4.0, 3.0, 1.0)),
            ("TextClassifier.logistic_regression", fixed(3.0, 2.0, 2.0)),
            ("TextClassifier.cnn", fixed(2.0, 7.0, 6.0)),
            ("TextClassifier.bert-base-uncased", fixed(2.0, 10.0, 8.0)),
            ("Inferencer", fixed(1.0, 15.0, 14.0)),
            ("Finish", fixed(0.0, 0.0, 0.0)),
        ];
        CostTable {
            entries: entries.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        }
    }
}

fn malformed(tool: ToolKind, message: impl Into<String>) -> CostError {
    CostError::MalformedArguments {
        tool: tool.to_string(),
        message: message.into(),
    }
}

/// Identifies the cost-table row a call is priced by.
pub fn cost_key(call: &ToolCall) -> Result<String, CostError> {
    let kind = ToolKind::from_name(&call.tool).ok_or_else(|| CostError::UnknownTool(call.tool.clone()))?;
    let model = || {
        call.arg_str("model")
            .ok_or_else(|| malformed(kind, "missing string argument `model`"))
    };
    Ok(match kind {
        ToolKind::Forecaster => {
            let m = model()?;
            let f = ForecastKind::from_name(m).ok_or_else(|| malformed(kind, format!("unknown model `{m}`")))?;
            format!("Forecaster.{}", f.as_str())
        }
        ToolKind::TextClassifier => {
            let m = model()?;
            let c = ClassifierKind::from_name(m).ok_or_else(|| malformed(kind, format!("unknown model `{m}`")))?;
            format!("TextClassifier.{}", c.as_str())
        }
        other => other.as_str().to_string(),
    })
}

impl CostTable {
    /// Reads a JSON object of overrides and merges it over the defaults.
    pub fn from_json_str(text: &str) -> Result<CostTable, CostError> {
        let overrides: BTreeMap<String, CostEntry> =
            serde_json::from_str(text).map_err(|e| CostError::InvalidTable(e.to_string()))?;
        let mut table = CostTable::default();
        for (k, v) in overrides {
            if !table.entries.contains_key(&k) {
                return Err(CostError::InvalidTable(format!("unknown cost key `{k}`")));
            }
            let bad = match &v {
                CostEntry::Fixed(c) => [c.performance_risk, c.debug_difficulty, c.argument_complexity]
                    .iter()
                    .any(|x| !x.is_finite() || *x < 0.0),
                CostEntry::Script { scale, .. } => !scale.is_finite() || *scale < 0.0,
            };
            if bad {
                return Err(CostError::InvalidTable(format!("`{k}` has a negative or non-finite component")));
            }
            table.entries.insert(k, v);
        }
        Ok(table)
    }

    pub fn from_file(path: &Path) -> Result<CostTable, CostError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CostError::InvalidTable(format!("{}: {e}", path.display())))?;
        CostTable::from_json_str(&text)
    }

    pub fn entries(&self) -> &BTreeMap<String, CostEntry> {
        &self.entries
    }

    /// Every component multiplied by `k`.
    pub fn scaled(&self, k: f64) -> CostTable {
        CostTable {
            entries: self
                .entries
                .iter()
                .map(|(name, e)| {
                    let e = match e {
                        CostEntry::Fixed(c) => CostEntry::Fixed(CostComponents::new(
                            c.performance_risk * k,
                            c.debug_difficulty * k,
                            c.argument_complexity * k,
                        )),
                        CostEntry::Script { formula, scale } => CostEntry::Script {
                            formula: *formula,
                            scale: scale * k,
                        },
                    };
                    (name.clone(), e)
                })
                .collect(),
        }
    }

    pub fn components(&self, call: &ToolCall) -> Result<CostComponents, CostError> {
        let key = cost_key(call)?;
        let entry = self
            .entries
            .get(&key)
            .ok_or_else(|| CostError::UnknownTool(key.clone()))?;
        let kind = ToolKind::from_name(&call.tool).expect("cost_key validated the tool");
        let script = if kind.is_script() {
            let src = call
                .arg_str("script")
                .ok_or_else(|| malformed(kind, "missing string argument `script`"))?;
            Some(script_complexity(src))
        } else {
            None
        };
        Ok(entry.components(script))
    }

    pub fn tool_cost(&self, call: &ToolCall) -> Result<f64, CostError> {
        self.components(call).map(|c| c.total())
    }

    pub fn plan_cost(&self, steps: &[ToolCall]) -> Result<f64, CostError> {
        steps.iter().map(|s| self.tool_cost(s)).sum()
    }

    /// Recomputes and stores the plan's authoritative cost.
    pub fn cost_plan(&self, plan: &mut Plan) -> Result<f64, CostError> {
        let c = self.plan_cost(&plan.steps)?;
        plan.cost = Some(c);
        Ok(c)
    }

    /// One line per cost-table row, in key order.
    pub fn render_lines(&self) -> Vec<String> {
        self.entries
            .iter()
            .map(|(k, e)| format!("{k}: {}", e.describe()))
            .collect()
    }
}

/// Cost of a call under the default table.
pub fn tool_cost(call: &ToolCall) -> Result<f64, CostError> {
    CostTable::default().tool_cost(call)
}

/// Cost of a plan under the default table.
pub fn plan_cost(plan: &Plan) -> Result<f64, CostError> {
    CostTable::default().plan_cost(&plan.steps)
}
