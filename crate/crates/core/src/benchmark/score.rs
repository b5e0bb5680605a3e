use serde::{Deserialize, Serialize};

use super::metrics::{exact_match, membership, r2, set_overlap, threshold_match};
use super::templates::{QuestionInstance, TemplateId};
use super::truth::Truth;
use crate::executor::Answer;
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceScore {
    /// Raw score. R^2 is unclamped here; binary templates record 1 for a
    /// correct label and 0 otherwise.
    pub performance: f64,
    /// (predicted positive, truly positive) for the F1-scored templates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<(bool, bool)>,
    /// Why the answer could not be scored normally.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag: Option<String>,
}

impl InstanceScore {
    fn plain(performance: f64) -> InstanceScore {
        InstanceScore {
            performance,
            pair: None,
            flag: None,
        }
    }
}

fn texts(v: &Value) -> Option<Vec<String>> {
    v.as_list()?.iter().map(|x| x.as_text().map(str::to_string)).collect()
}

fn reals(v: &Value) -> Option<Vec<f64>> {
    v.as_list()?.iter().map(Value::as_f64).collect()
}

/// Scores one answer. `None` (or a mistyped answer) scores 0 with a flag;
/// for binary templates the pair is recorded as a wrong prediction.
pub fn score(inst: &QuestionInstance, truth: &Truth, answer: Option<&Answer>) -> InstanceScore {
    let failed = |why: String| {
        let pair = match (inst.positive_label(), truth) {
            (Some(pos), Truth::Label(t)) => {
                let truly = *t == pos;
                Some((!truly, truly))
            }
            _ => None,
        };
        InstanceScore {
            performance: 0.0,
            pair,
            flag: Some(why),
        }
    };
    let Some(answer) = answer else {
        return failed("no answer".into());
    };
    if answer.declared_type != inst.answer_type() {
        return failed(format!(
            "answer declared {} but the question expects {}",
            answer.declared_type,
            inst.answer_type()
        ));
    }
    let v = &answer.value;
    let bad = || failed(format!("answer value {} does not fit the question", v.to_json()));
    use TemplateId::*;
    match (inst.template, truth) {
        (Q1 | Q3 | Q6, Truth::Number(t)) => match v.as_f64() {
            Some(a) => InstanceScore::plain(threshold_match(a, *t)),
            None => bad(),
        },
        (Q2 | Q5, Truth::List(t)) => match texts(v) {
            Some(a) => InstanceScore::plain(set_overlap(&a, t)),
            None => bad(),
        },
        (Q4, Truth::OneOf(t)) => match v.as_text() {
            Some(a) => InstanceScore::plain(membership(a, t)),
            None => bad(),
        },
        (Q7, Truth::Series(t)) => match reals(v).map(|p| r2(&p, t)) {
            Some(Ok(r)) => InstanceScore::plain(r),
            Some(Err(e)) => failed(e.to_string()),
            None => bad(),
        },
        (Q8 | Q9 | Q10 | Q11 | Q12, Truth::Label(t)) => {
            let pos = inst.positive_label().expect("binary template");
            let Some(a) = v.as_text() else { return bad() };
            let allowed = match inst.labels() {
                Some(l) => l.iter().any(|x| x == a),
                None => a == "Yes" || a == "No",
            };
            if !allowed {
                return bad();
            }
            InstanceScore {
                performance: exact_match(a, t),
                pair: Some((a == pos, *t == pos)),
                flag: None,
            }
        }
        (Q13, Truth::Label(t)) => match v.as_text() {
            Some(a) => InstanceScore::plain(exact_match(a, t)),
            None => bad(),
        },
        _ => failed(format!("truth {truth:?} does not match template {}", inst.template)),
    }
}
