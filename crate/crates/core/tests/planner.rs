use std::str::FromStr;

use lit_core::benchmark::{BenchError, Params, QuestionInstance, TemplateId};
use lit_core::chat::{ChatError, Generator};
use lit_core::cost::CostTable;
use lit_core::plan::{Plan, ToolCall};
use lit_core::planner::{
    build_prompt, generate_candidates, parse_solutions, render, render_plan, scripted_candidates, select_plan,
    CandidateSet, MonthGrouping, PlanSource, PlannerError, MAX_SOLUTIONS,
};
use proptest::prelude::*;
use serde_json::json;

struct Canned(String);

impl Generator for Canned {
    fn generate(&self, _prompt: &str) -> Result<String, ChatError> {
        Ok(self.0.clone())
    }
}

fn block(model: &str) -> String {
    format!(
        "```\nsolution:\n- tool: TableLoader\n  args: {{\"db_name\": \"hupd\"}}\n- tool: TextClassifier\n  args: {{\"model\": \"{model}\", \"target\": \"decision\", \"text\": \"$s1\"}}\n- tool: Finish\n  args: {{\"answer\": \"$s2.label\", \"type\": \"label\"}}\ncost: 5\n```\n"
    )
}

fn classifier_plan(model: &str) -> Plan {
    Plan::new(vec![
        ToolCall::new("TextClassifier", json!({"model": model, "target": "decision", "text": "x"})),
        ToolCall::new("Finish", json!({"answer": "$s1.label", "type": "label"})),
    ])
}

fn set(plans: Vec<Plan>) -> CandidateSet {
    CandidateSet {
        plans,
        source: PlanSource::Llm,
        warnings: Vec::new(),
    }
}

#[test]
fn prompt_lists_every_cost_and_the_limit() {
    let t = CostTable::default();
    let p = build_prompt("How many patents were filed in 2010?", &t);
    for line in t.render_lines() {
        assert!(p.contains(&line), "{line}");
    }
    assert!(p.contains("maximum of four"));
    assert!(p.contains("How many patents were filed in 2010?"));
    assert_eq!(p, build_prompt("How many patents were filed in 2010?", &t));
}

#[test]
fn generated_blocks_become_candidates() {
    let t = CostTable::default();
    let two = Canned(format!("Here you go.\n{}\n{}", block("logreg"), block("cnn")));
    let cs = generate_candidates(&two, "q", &t).unwrap();
    assert_eq!(cs.plans.len(), 2);
    assert_eq!(cs.source, PlanSource::Llm);

    let six = Canned((0..6).map(|_| block("bert")).collect::<Vec<_>>().join("\n"));
    let cs = generate_candidates(&six, "q", &t).unwrap();
    assert_eq!(cs.plans.len(), MAX_SOLUTIONS);
    assert!(cs.warnings.iter().any(|w| w.contains("keeping the first")), "{:?}", cs.warnings);

    let prose = Canned("I would load the table and then count the rows.".into());
    assert!(matches!(
        generate_candidates(&prose, "q", &t),
        Err(PlannerError::NoValidSolutions { .. })
    ));
}

#[test]
fn cheaper_classifier_wins() {
    let cs = set(vec![classifier_plan("bert-base-uncased"), classifier_plan("logistic_regression")]);
    let s = select_plan(&cs, &CostTable::default()).unwrap();
    assert_eq!(s.index, 1);
    assert_eq!(s.plan.steps[0].arg_str("model"), Some("logistic_regression"));
    assert_eq!(s.costs, vec![Ok(20.0), Ok(7.0)]);
}

#[test]
fn claimed_costs_are_ignored() {
    let mut cheap_claim = classifier_plan("bert-base-uncased");
    cheap_claim.claimed_cost = Some(1.0);
    let cs = set(vec![cheap_claim, classifier_plan("logistic_regression")]);
    let s = select_plan(&cs, &CostTable::default()).unwrap();
    assert_eq!(s.index, 1);
    assert_eq!(s.discrepancies.len(), 1);
}

#[test]
fn ties_and_invalid_plans() {
    let t = CostTable::default();
    let cs = set(vec![classifier_plan("logreg"), classifier_plan("logistic_regression")]);
    assert_eq!(select_plan(&cs, &t).unwrap().index, 0);

    let no_finish = Plan::new(vec![ToolCall::new("Calculator", json!({"expression": "1+1"}))]);
    assert!(matches!(
        select_plan(&set(vec![no_finish]), &t),
        Err(PlannerError::NoValidSolutions { .. })
    ));
    let early_finish = Plan::new(vec![
        ToolCall::new("Finish", json!({"answer": 1, "type": "real"})),
        ToolCall::new("Finish", json!({"answer": 1, "type": "real"})),
    ]);
    assert!(select_plan(&set(vec![early_finish]), &t).is_err());
}

#[test]
fn scripted_plans_per_template() {
    let q3 = QuestionInstance::new("q3", TemplateId::Q3, Params::YearRatio { year1: 2010, year2: 2011 }).unwrap();
    let cs = scripted_candidates(&q3, MonthGrouping::default()).unwrap();
    assert_eq!(cs.source, PlanSource::Scripted);
    assert!(cs.plans.len() >= 2);
    assert!(cs
        .plans
        .iter()
        .any(|p| p.tool_names() == ["TableLoader", "TableScript", "Finish"]));

    let q10 = QuestionInstance::new(
        "q10",
        TemplateId::Q10,
        Params::Abstract {
            text: "We study sparse attention for long documents.".into(),
        },
    )
    .unwrap();
    let cs = scripted_candidates(&q10, MonthGrouping::default()).unwrap();
    let models: Vec<&str> = cs
        .plans
        .iter()
        .flat_map(|p| p.steps.iter())
        .filter(|s| s.tool == "TextClassifier")
        .filter_map(|s| s.arg_str("model"))
        .collect();
    assert!(models.iter().any(|m| m.contains("logistic")), "{models:?}");
    assert!(models.iter().any(|m| m.contains("bert")), "{models:?}");

    assert!(matches!(TemplateId::from_str("Q99"), Err(BenchError::UnknownTemplate(_))));
}

fn model() -> impl Strategy<Value = &'static str> {
    prop::sample::select(vec!["logistic_regression", "cnn", "bert-base-uncased"])
}

fn plan_strategy() -> impl Strategy<Value = Plan> {
    let step = prop_oneof![
        Just(ToolCall::new("Calculator", json!({"expression": "1+2"}))),
        Just(ToolCall::new("TableLoader", json!({"db_name": "neurips"}))),
        Just(ToolCall::new("Inferencer", json!({"prompt": "x"}))),
        model().prop_map(|m| ToolCall::new("TextClassifier", json!({"model": m, "target": "oral", "text": "t"}))),
        Just(ToolCall::new("Forecaster", json!({"series": [1, 2, 3], "model": "linear_regression", "horizon": 1}))),
    ];
    (prop::collection::vec(step, 0..5), prop::option::of(0u32..100)).prop_map(|(mut steps, claim)| {
        steps.push(ToolCall::new("Finish", json!({"answer": "$s1", "type": "real"})));
        let mut p = Plan::new(steps);
        p.claimed_cost = claim.map(f64::from);
        p
    })
}

proptest! {
    #[test]
    fn selection_is_scale_invariant(plans in prop::collection::vec(plan_strategy(), 1..5), k in 0.1f64..50.0) {
        let cs = set(plans);
        let base = CostTable::default();
        let a = select_plan(&cs, &base).unwrap();
        let b = select_plan(&cs, &base.scaled(k)).unwrap();
        prop_assert_eq!(a.index, b.index);
    }

    #[test]
    fn selected_cost_is_minimal(plans in prop::collection::vec(plan_strategy(), 1..5)) {
        let t = CostTable::default();
        let s = select_plan(&set(plans.clone()), &t).unwrap();
        let chosen = s.plan.cost.unwrap();
        for p in &plans {
            prop_assert!(chosen <= t.plan_cost(&p.steps).unwrap());
        }
    }

    #[test]
    fn rendering_round_trips(plans in prop::collection::vec(plan_strategy(), 1..=4)) {
        let cs = set(plans);
        let back = parse_solutions(&render(&cs));
        prop_assert_eq!(&back.plans, &cs.plans);
        for p in &cs.plans {
            prop_assert_eq!(&parse_solutions(&render_plan(p)).plans, &vec![p.clone()]);
        }
    }
}
