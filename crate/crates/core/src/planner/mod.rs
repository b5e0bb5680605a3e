//! Candidate plan generation, parsing and cost-based selection.

use serde::Serialize;
use thiserror::Error;

use std::sync::Arc;

use crate::benchmark::QuestionInstance;
use crate::chat::{ChatError, Generator};
use crate::cost::{CostTable, ToolKind};
use crate::plan::Plan;

mod parse;
mod prompt;
mod scripted;

pub use parse::{parse_solutions, render, render_plan};
pub use prompt::build_prompt;
pub use scripted::{
    baseline_plan, scripted_candidates, MonthGrouping, ABSTRACT_TITLE_THRESHOLD, TITLE_PAIR_THRESHOLD,
};

pub const MAX_SOLUTIONS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanSource {
    Llm,
    Scripted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub plans: Vec<Plan>,
    pub source: PlanSource,
    pub warnings: Vec<String>,
}

#[derive(Debug, Error, PartialEq)]
pub enum PlannerError {
    #[error("no valid solutions ({})", .warnings.join("; "))]
    NoValidSolutions { warnings: Vec<String> },
    #[error("unknown question template `{0}`")]
    UnknownTemplate(String),
    #[error(transparent)]
    Generator(#[from] ChatError),
}

/// Outcome of costing every candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub plan: Plan,
    pub index: usize,
    /// Recomputed cost of each candidate, or why it was excluded.
    pub costs: Vec<Result<f64, String>>,
    /// Candidates whose claimed cost differs from the recomputed one.
    pub discrepancies: Vec<String>,
}

fn validate(plan: &Plan, table: &CostTable) -> Result<f64, String> {
    if plan.steps.is_empty() {
        return Err("empty plan".into());
    }
    if !plan.ends_with_finish() {
        return Err("plan does not end with Finish".into());
    }
    if let Some(i) = plan.steps[..plan.steps.len() - 1]
        .iter()
        .position(|s| ToolKind::from_name(&s.tool) == Some(ToolKind::Finish))
    {
        return Err(format!("Finish at step {i} is not the last step"));
    }
    table.plan_cost(&plan.steps).map_err(|e| e.to_string())
}

/// Recomputes every candidate's cost and returns the cheapest valid plan,
/// the earliest one on ties. Claimed costs are ignored.
pub fn select_plan(candidates: &CandidateSet, table: &CostTable) -> Result<Selection, PlannerError> {
    let costs: Vec<Result<f64, String>> = candidates.plans.iter().map(|p| validate(p, table)).collect();
    let mut best: Option<(usize, f64)> = None;
    let mut discrepancies = Vec::new();
    for (i, c) in costs.iter().enumerate() {
        let Ok(c) = c else { continue };
        if let Some(claimed) = candidates.plans[i].claimed_cost {
            if (claimed - c).abs() > 1e-9 {
                discrepancies.push(format!("solution {i}: claimed cost {claimed}, recomputed {c}"));
            }
        }
        if best.map_or(true, |(_, b)| *c < b) {
            best = Some((i, *c));
        }
    }
    let Some((index, cost)) = best else {
        let mut warnings = candidates.warnings.clone();
        warnings.extend(
            costs
                .iter()
                .enumerate()
                .filter_map(|(i, c)| c.as_ref().err().map(|e| format!("solution {i}: {e}"))),
        );
        return Err(PlannerError::NoValidSolutions { warnings });
    };
    let mut plan = candidates.plans[index].clone();
    plan.cost = Some(cost);
    Ok(Selection {
        plan,
        index,
        costs,
        discrepancies,
    })
}

/// Stores recomputed costs on every plan that has one.
pub fn cost_all(candidates: &mut CandidateSet, table: &CostTable) {
    for p in &mut candidates.plans {
        p.cost = validate(p, table).ok();
    }
}

/// Asks a generator for solutions to `question`.
pub fn generate_candidates(
    generator: &dyn Generator,
    question: &str,
    table: &CostTable,
) -> Result<CandidateSet, PlannerError> {
    let output = generator.generate(&build_prompt(question, table))?;
    let set = parse_solutions(&output);
    if set.plans.is_empty() {
        return Err(PlannerError::NoValidSolutions { warnings: set.warnings });
    }
    Ok(set)
}

/// Anything that proposes candidate plans for a question.
pub trait CandidateSource: Send + Sync {
    fn candidates(&self, inst: &QuestionInstance) -> Result<CandidateSet, PlannerError>;
}

/// The authored per-template plans.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScriptedPlanner {
    pub grouping: MonthGrouping,
}

impl CandidateSource for ScriptedPlanner {
    fn candidates(&self, inst: &QuestionInstance) -> Result<CandidateSet, PlannerError> {
        scripted_candidates(inst, self.grouping)
    }
}

/// Plans written by a chat model from the planning prompt.
pub struct ChatPlanner {
    pub generator: Arc<dyn Generator>,
    pub costs: CostTable,
}

impl CandidateSource for ChatPlanner {
    fn candidates(&self, inst: &QuestionInstance) -> Result<CandidateSet, PlannerError> {
        generate_candidates(self.generator.as_ref(), &inst.text, &self.costs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::ToolCall;
    use serde_json::json;

    fn classifier_plan(model: &str) -> Plan {
        Plan::new(vec![
            ToolCall::new("TableLoader", json!({"db_name": "hupd"})),
            ToolCall::new("TextClassifier", json!({"model": model, "target": "decision", "text": "x"})),
            ToolCall::new("Finish", json!({"answer": "$s1.label", "type": "label"})),
        ])
    }

    fn set(plans: Vec<Plan>) -> CandidateSet {
        CandidateSet {
            plans,
            source: PlanSource::Scripted,
            warnings: Vec::new(),
        }
    }

    #[test]
    fn logreg_beats_bert() {
        let cs = set(vec![classifier_plan("bert-base-uncased"), classifier_plan("logistic_regression")]);
        let s = select_plan(&cs, &CostTable::default()).unwrap();
        assert_eq!(s.index, 1);
        assert_eq!(s.plan.cost, Some(10.0));
        assert_eq!(s.costs[0], Ok(23.0));
    }

    #[test]
    fn ties_go_to_first() {
        let cs = set(vec![classifier_plan("logreg"), classifier_plan("logistic_regression")]);
        assert_eq!(select_plan(&cs, &CostTable::default()).unwrap().index, 0);
    }

    #[test]
    fn lone_plan_without_finish_is_rejected() {
        let cs = set(vec![Plan::new(vec![ToolCall::new("Calculator", json!({"expression": "1"}))])]);
        assert!(matches!(
            select_plan(&cs, &CostTable::default()),
            Err(PlannerError::NoValidSolutions { .. })
        ));
    }

    #[test]
    fn claimed_costs_are_ignored_but_logged() {
        let mut cheap_claim = classifier_plan("bert");
        cheap_claim.claimed_cost = Some(1.0);
        let cs = set(vec![cheap_claim, classifier_plan("logreg")]);
        let s = select_plan(&cs, &CostTable::default()).unwrap();
        assert_eq!(s.index, 1);
        assert_eq!(s.discrepancies.len(), 1);
    }
}
