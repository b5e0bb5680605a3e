use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use super::score::{score, InstanceScore};
use super::templates::{Params, QuestionInstance, TemplateId};
use super::truth::{ground_truth, Truth};
use crate::executor::{run_with_fallback, Toolbox};
use crate::plan::Plan;
use crate::planner::{baseline_plan, select_plan, CandidateSet, CandidateSource, PlanSource};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    /// Cheapest candidate first, falling back to dearer ones.
    Lit,
    /// Always answer with the Inferencer.
    Baseline,
}

impl Condition {
    pub const ALL: [Condition; 2] = [Condition::Lit, Condition::Baseline];

    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Lit => "lit",
            Condition::Baseline => "baseline",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Condition {
    type Err = String;

    fn from_str(s: &str) -> Result<Condition, String> {
        match s {
            "lit" => Ok(Condition::Lit),
            "baseline" => Ok(Condition::Baseline),
            _ => Err(format!("unknown condition `{s}` (expected lit or baseline)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsideredPlan {
    pub plan: Plan,
    /// Why the plan was excluded from selection, if it was.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excluded: Option<String>,
}

/// Everything recorded about one question under one condition. This is the
/// per-instance trace file; reports are rebuilt from these alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub id: String,
    pub template: TemplateId,
    pub condition: Condition,
    pub question: String,
    pub params: Params,
    pub plans_considered: Vec<ConsideredPlan>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    /// Cost of the plan chosen first.
    pub selected_cost: Option<f64>,
    /// Cost charged to the run: that of the last plan attempted.
    pub cost: f64,
    pub attempts: usize,
    /// Steps of the last attempt.
    pub steps: Json,
    /// Every attempt, in order.
    pub traces: Vec<Json>,
    pub answer: Option<Json>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub truth: Option<Truth>,
    pub score: Option<InstanceScore>,
}

fn candidates_for(
    inst: &QuestionInstance,
    condition: Condition,
    planner: &dyn CandidateSource,
    warnings: &mut Vec<String>,
) -> CandidateSet {
    let baseline = || CandidateSet {
        plans: vec![baseline_plan(inst)],
        source: PlanSource::Scripted,
        warnings: Vec::new(),
    };
    match condition {
        Condition::Baseline => baseline(),
        Condition::Lit => match planner.candidates(inst) {
            Ok(set) => set,
            Err(e) => {
                // The opaque answer is always available as a last resort.
                warnings.push(format!("planner failed ({e}); using the Inferencer plan"));
                baseline()
            }
        },
    }
}

/// Plans, executes and scores one instance.
pub fn evaluate_instance(
    inst: &QuestionInstance,
    condition: Condition,
    planner: &dyn CandidateSource,
    tb: &Arc<Toolbox>,
) -> RunRecord {
    let mut warnings = Vec::new();
    let mut set = candidates_for(inst, condition, planner, &mut warnings);
    warnings.append(&mut set.warnings);
    let selection = select_plan(&set, &tb.costs);
    let (plans_considered, selected_cost) = match &selection {
        Ok(sel) => {
            warnings.extend(sel.discrepancies.iter().cloned());
            let considered: Vec<ConsideredPlan> = set
                .plans
                .iter()
                .zip(&sel.costs)
                .map(|(p, c)| {
                    let mut plan = p.clone();
                    plan.cost = c.as_ref().ok().copied();
                    ConsideredPlan {
                        plan,
                        excluded: c.as_ref().err().cloned(),
                    }
                })
                .collect();
            (considered, sel.plan.cost)
        }
        Err(e) => {
            warnings.push(e.to_string());
            let considered = set
                .plans
                .iter()
                .map(|p| ConsideredPlan {
                    plan: p.clone(),
                    excluded: Some("no valid plan".into()),
                })
                .collect();
            (considered, None)
        }
    };
    let valid: Vec<Plan> = plans_considered
        .iter()
        .filter(|c| c.excluded.is_none())
        .map(|c| c.plan.clone())
        .collect();
    let run = run_with_fallback(&valid, tb);
    let traces: Vec<Json> = run
        .traces
        .iter()
        .map(|t| serde_json::to_value(t).expect("traces serialize"))
        .collect();
    let truth = ground_truth(inst, &tb.store).ok();
    let answer = run.result.as_ref().ok();
    let score = truth.as_ref().map(|t| score(inst, t, answer));
    RunRecord {
        id: inst.id.clone(),
        template: inst.template,
        condition,
        question: inst.text.clone(),
        params: inst.params.clone(),
        plans_considered,
        warnings,
        selected_cost,
        cost: run.costs.last().copied().unwrap_or(0.0),
        attempts: run.attempts(),
        steps: run
            .traces
            .last()
            .map(|t| serde_json::to_value(&t.steps).expect("steps serialize"))
            .unwrap_or(Json::Array(Vec::new())),
        traces,
        answer: answer.map(|a| a.to_json()),
        error: run.result.as_ref().err().map(|e| e.to_string()),
        truth,
        score,
    }
}
