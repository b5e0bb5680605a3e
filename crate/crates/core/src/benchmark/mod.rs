//! Question templates, independent ground truth, scoring and reports.

use thiserror::Error;

mod metrics;
mod report;
mod run;
mod score;
mod templates;
mod truth;

pub use metrics::{
    bootstrap_f1, exact_match, f1, membership, r2, set_overlap, threshold_match, welch_t_one_sided, MetricError,
    WelchTest, BOOTSTRAP_ITERATIONS, THRESHOLD,
};
pub use report::{
    aggregate, render_text, trace_path, Comparison, ConditionReport, InstanceLine, ScoreReport, TemplateCell,
    TierCell, F1_BATCH,
};
pub use run::{evaluate_instance, Condition, ConsideredPlan, RunRecord};
pub use score::{score, InstanceScore};
pub use templates::{
    instantiate, match_question, parse_template_list, render_text as question_text, CategoryScheme, Compare,
    Difficulty, Params, QuestionInstance, TemplateId,
};
pub use truth::{ground_truth, Truth};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum BenchError {
    #[error("unknown question template `{0}`")]
    UnknownTemplate(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("empty condition: {0}")]
    EmptyCondition(String),
}
