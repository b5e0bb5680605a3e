use crate::cost::CostTable;
use crate::script::{Capability, BUILTINS};

use super::MAX_SOLUTIONS;

const TOOLS: &str = "\
Calculator(expression): exact arithmetic over + - * / × ÷ % ^ and parentheses.
TableLoader(db_name, subset?): loads `hupd` (patent applications) or `neurips` (papers) and binds it to `df`. subset is {\"years\": [first, last]} (hupd filing years) or {\"rows\": [first, last]}.
TableScript(script, df?): runs a script with the loaded table bound to `df`; returns every variable the script assigns.
PureScript(script, inputs?): runs a script without a table; `inputs` maps names to values visible to the script.
Forecaster(model, previous_data, forecast_length): model is `linear_regression` or `ARIMA`; returns the predicted values.
TextClassifier(model, target, text): model is `logistic_regression`, `cnn` or `bert-base-uncased`; target is `decision` (hupd abstracts), `oral` (neurips abstracts) or `topic:<topic>` (neurips titles); returns {label, score}.
Inferencer(prompt, answer_type?, labels?, length?): answers directly with a language model.
Finish(answer, type, labels?): returns the final answer. type is one of integer, real01, real_list, text, text_list, label, yes_no.";

const REFERENCES: &str = "\
The output of step i (counting from 0) is available as \"$si\". When a step returns a mapping, each key is also available by name, e.g. \"$ans\" or \"$s1.label\". Write \"$$\" for a literal dollar sign.";

const FORMAT: &str = "\
Write each solution in its own fenced block:
```
solution:
- tool: <tool name>
  args: <JSON object>
- tool: Finish
  args: {\"answer\": \"$ans\", \"type\": \"<answer type>\"}
cost: <total cost>
```";

const EXAMPLES: &str = r#"Question: What is 3,240 multiplied by 0.15, plus 12?
```
solution:
- tool: Calculator
  args: {"expression": "3240*0.15+12"}
- tool: Finish
  args: {"answer": "$s0", "type": "integer"}
cost: 2
```
```
solution:
- tool: Inferencer
  args: {"prompt": "What is 3,240 multiplied by 0.15, plus 12?", "answer_type": "integer"}
- tool: Finish
  args: {"answer": "$s0", "type": "integer"}
cost: 30
```
The Calculator solution costs 2 against 30, so it is preferred.

Question: How many neurips papers have the topic Optimization?
```
solution:
- tool: TableLoader
  args: {"db_name": "neurips"}
- tool: TableScript
  args: {"script": "ans = count(filter(df, col(df, 'topic') == 'Optimization'))"}
- tool: Finish
  args: {"answer": "$ans", "type": "integer"}
cost: 4
```
```
solution:
- tool: TableLoader
  args: {"db_name": "neurips"}
- tool: Inferencer
  args: {"prompt": "How many papers have the topic Optimization?", "answer_type": "integer"}
- tool: Finish
  args: {"answer": "$s1", "type": "integer"}
cost: 33
```
A one-line script costs 3 + 1 = 4.

Question: Which inventor city appears most often among hupd applications filed in 2010?
```
solution:
- tool: TableLoader
  args: {"db_name": "hupd", "subset": {"years": [2010, 2010]}}
- tool: TableScript
  args: {"script": "c = agg(groupby(df, 'inventor_city'), 'count')\nans = keys(sort_desc(c))[0]"}
- tool: Finish
  args: {"answer": "$ans", "type": "text"}
cost: 4.414
```
Two statements and no imports cost sqrt(2) = 1.414 on top of the loader.

Question: Monthly sales were 120, 132, 128, 141, 150 and 149. Predict the next 3 months.
```
solution:
- tool: Forecaster
  args: {"model": "linear_regression", "previous_data": [120, 132, 128, 141, 150, 149], "forecast_length": 3}
- tool: Finish
  args: {"answer": "$s0", "type": "real_list"}
cost: 6
```
```
solution:
- tool: Forecaster
  args: {"model": "ARIMA", "previous_data": [120, 132, 128, 141, 150, 149], "forecast_length": 3}
- tool: Finish
  args: {"answer": "$s0", "type": "real_list"}
cost: 8
```
Both forecasters are inspectable; the linear trend is cheaper.

Question: Summarise this abstract in one sentence: "We study sparse attention for long documents and show it matches dense attention at a fraction of the memory."
```
solution:
- tool: Inferencer
  args: {"prompt": "Summarise in one sentence: We study sparse attention for long documents and show it matches dense attention at a fraction of the memory."}
- tool: Finish
  args: {"answer": "$s0", "type": "text"}
cost: 30
```
No cheaper tool can write a summary, so the Inferencer is the only solution."#;

fn script_reference() -> String {
    let mut out = String::from(
        "Scripts are lines of `name = expression`. Operators: + - * / % == != < <= > >= and or not, indexing with [ ]. \
         Arithmetic and comparisons apply elementwise to lists. Builtins outside `core` need a `use <capability>` line first.\n",
    );
    for cap in [Capability::Core, Capability::Stats, Capability::Dates, Capability::Text] {
        let names: Vec<&str> = BUILTINS.iter().filter(|b| b.capability == cap).map(|b| b.name).collect();
        out.push_str(&format!("{}: {}\n", cap.as_str(), names.join(", ")));
    }
    out
}

/// The full planning prompt for `question`. Deterministic for a given
/// cost table.
pub fn build_prompt(question: &str, table: &CostTable) -> String {
    let mut out = String::new();
    out.push_str("You answer questions by composing calls to the tools below. Every tool has a cost that measures how hard its result is to trust and to inspect; cheaper solutions are better.\n\n");
    out.push_str("## Tools\n");
    out.push_str(TOOLS);
    out.push_str("\n\n## Costs (P = performance risk, D = debugging difficulty, C = argument complexity; a solution costs the sum of its steps)\n");
    for line in table.render_lines() {
        out.push_str(&line);
        out.push('\n');
    }
    out.push_str("\n## Scripts\n");
    out.push_str(&script_reference());
    out.push_str("\n## Variables\n");
    out.push_str(REFERENCES);
    out.push_str("\n\n## Instructions\n");
    out.push_str(&format!(
        "Write as many distinct solutions as you can, up to a maximum of {}. Every solution must end with Finish. Give each solution's total cost on a `cost:` line. The cheapest solution will be executed.\n\n",
        number_word(MAX_SOLUTIONS)
    ));
    out.push_str(FORMAT);
    out.push_str("\n\n## Examples\n");
    out.push_str(EXAMPLES);
    out.push_str("\n\n## Question\n");
    out.push_str(question.trim());
    out.push('\n');
    out
}

fn number_word(n: usize) -> String {
    match n {
        4 => "four".into(),
        n => n.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contains_every_cost_line_once() {
        let t = CostTable::default();
        let p = build_prompt("Q?", &t);
        for line in t.render_lines() {
            assert_eq!(p.matches(&line).count(), 1, "{line}");
        }
        assert!(p.contains("up to a maximum of four"));
        assert_eq!(p, build_prompt("Q?", &t));
    }

    #[test]
    fn examples_parse_as_solutions() {
        let cs = crate::planner::parse_solutions(EXAMPLES);
        assert_eq!(cs.plans.len(), 4, "{:?}", cs.warnings);
        assert!(cs.warnings.iter().any(|w| w.contains("keeping the first")));
    }
}
