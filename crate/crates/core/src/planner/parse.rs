//! Extraction of solution blocks from free-form generator output, and the
//! inverse rendering.

use serde_json::{Map, Value as Json};

use super::{CandidateSet, PlanSource, MAX_SOLUTIONS};
use crate::plan::{Plan, ToolCall};

/// Contents of every ``` fence, with the line number of its opening fence.
fn fences(text: &str) -> Vec<(usize, Vec<&str>)> {
    let mut out = Vec::new();
    let mut current: Option<(usize, Vec<&str>)> = None;
    for (i, line) in text.lines().enumerate() {
        if line.trim_start().starts_with("```") {
            match current.take() {
                Some(block) => out.push(block),
                None => current = Some((i + 1, Vec::new())),
            }
        } else if let Some((_, lines)) = current.as_mut() {
            lines.push(line);
        }
    }
    // An unterminated fence at the end of the output still counts.
    if let Some(block) = current {
        out.push(block);
    }
    out
}

/// Brace depth change of a JSON fragment, ignoring braces inside strings.
fn depth_delta(s: &str, in_string: &mut bool, escaped: &mut bool) -> i64 {
    let mut d = 0;
    for c in s.chars() {
        if *in_string {
            if *escaped {
                *escaped = false;
            } else if c == '\\' {
                *escaped = true;
            } else if c == '"' {
                *in_string = false;
            }
            continue;
        }
        match c {
            '"' => *in_string = true,
            '{' | '[' => d += 1,
            '}' | ']' => d -= 1,
            _ => {}
        }
    }
    d
}

struct Draft {
    steps: Vec<ToolCall>,
    cost: Option<f64>,
}

/// Parses the solutions inside one fence. Returns the drafts and an error
/// for the first malformed solution (which is then dropped).
fn parse_fence(lines: &[&str]) -> Vec<Result<Draft, String>> {
    let mut out: Vec<Result<Draft, String>> = Vec::new();
    let mut current: Option<Result<Draft, String>> = None;
    let mut i = 0;
    while i < lines.len() {
        let line = lines[i].trim();
        i += 1;
        if line.is_empty() {
            continue;
        }
        if line == "solution:" {
            if let Some(d) = current.take() {
                out.push(d);
            }
            current = Some(Ok(Draft { steps: Vec::new(), cost: None }));
            continue;
        }
        let Some(Ok(draft)) = current.as_mut() else {
            // Text outside a solution, or inside one already known to be bad.
            continue;
        };
        let fail = |msg: String| Some(Err(msg));
        if let Some(rest) = line.strip_prefix('-') {
            let rest = rest.trim();
            match rest.strip_prefix("tool:") {
                Some(name) if !name.trim().is_empty() => {
                    draft.steps.push(ToolCall {
                        tool: name.trim().to_string(),
                        args: Map::new(),
                    });
                }
                _ => current = fail(format!("expected `- tool: <name>`, found `{line}`")),
            }
        } else if let Some(rest) = line.strip_prefix("args:") {
            let Some(step) = draft.steps.last_mut() else {
                current = fail("`args:` before any `- tool:` line".into());
                continue;
            };
            if !step.args.is_empty() {
                current = fail(format!("second `args:` for step `{}`", step.tool));
                continue;
            }
            let mut buf = rest.trim().to_string();
            let (mut in_str, mut esc) = (false, false);
            let mut depth = depth_delta(&buf, &mut in_str, &mut esc);
            while depth > 0 && i < lines.len() {
                buf.push('\n');
                buf.push_str(lines[i]);
                depth += depth_delta(lines[i], &mut in_str, &mut esc);
                i += 1;
            }
            match serde_json::from_str::<Json>(&buf) {
                Ok(Json::Object(m)) => step.args = m,
                Ok(_) => current = fail(format!("args of `{}` are not a JSON object", step.tool)),
                Err(e) => current = fail(format!("args of `{}` are not valid JSON: {e}", step.tool)),
            }
        } else if let Some(rest) = line.strip_prefix("cost:") {
            match rest.trim().parse::<f64>() {
                Ok(c) if c.is_finite() => draft.cost = Some(c),
                _ => current = fail(format!("unreadable cost `{}`", rest.trim())),
            }
        } else {
            current = fail(format!("unexpected line `{line}`"));
        }
    }
    if let Some(d) = current {
        out.push(d);
    }
    out
}

/// Extracts up to four plans from fenced `solution:` blocks.
pub fn parse_solutions(text: &str) -> CandidateSet {
    let mut plans = Vec::new();
    let mut warnings = Vec::new();
    for (line, body) in fences(text) {
        for (n, d) in parse_fence(&body).into_iter().enumerate() {
            match d {
                Err(e) => warnings.push(format!("block at line {line}, solution {}: {e}", n + 1)),
                Ok(d) if d.steps.is_empty() => {
                    warnings.push(format!("block at line {line}, solution {}: no steps", n + 1))
                }
                Ok(d) => {
                    let plan = Plan {
                        steps: d.steps,
                        claimed_cost: d.cost,
                        cost: None,
                    };
                    if plan.ends_with_finish() {
                        plans.push(plan);
                    } else {
                        warnings.push(format!(
                            "block at line {line}, solution {}: last step is not Finish",
                            n + 1
                        ));
                    }
                }
            }
        }
    }
    if plans.len() > MAX_SOLUTIONS {
        warnings.push(format!(
            "{} solutions found, keeping the first {MAX_SOLUTIONS}",
            plans.len()
        ));
        plans.truncate(MAX_SOLUTIONS);
    }
    CandidateSet {
        plans,
        source: PlanSource::Llm,
        warnings,
    }
}

/// Renders one plan as a fenced solution block.
pub fn render_plan(plan: &Plan) -> String {
    let mut out = String::from("```\nsolution:\n");
    for s in &plan.steps {
        out.push_str(&format!("- tool: {}\n", s.tool));
        if !s.args.is_empty() {
            out.push_str(&format!("  args: {}\n", Json::Object(s.args.clone())));
        }
    }
    if let Some(c) = plan.claimed_cost {
        out.push_str(&format!("cost: {c}\n"));
    }
    out.push_str("```\n");
    out
}

/// Renders every plan; `parse_solutions` recovers the same plans.
pub fn render(set: &CandidateSet) -> String {
    set.plans.iter().map(render_plan).collect::<Vec<_>>().join("\n")
}
