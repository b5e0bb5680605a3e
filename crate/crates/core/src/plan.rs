use serde::{Deserialize, Serialize};
use serde_json::{Map, Value as Json};

/// One tool invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCall {
    pub tool: String,
    #[serde(default)]
    pub args: Map<String, Json>,
}

impl ToolCall {
    pub fn new(tool: impl Into<String>, args: Json) -> ToolCall {
        let args = match args {
            Json::Object(m) => m,
            Json::Null => Map::new(),
            other => {
                let mut m = Map::new();
                m.insert("value".into(), other);
                m
            }
        };
        ToolCall {
            tool: tool.into(),
            args,
        }
    }

    pub fn arg_str(&self, key: &str) -> Option<&str> {
        self.args.get(key).and_then(Json::as_str)
    }
}

/// An ordered list of tool calls that should end in `Finish`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub steps: Vec<ToolCall>,
    /// Cost as stated by whoever generated the plan. Never used for selection.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub claimed_cost: Option<f64>,
    /// Cost recomputed from the cost table.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<f64>,
}

impl Plan {
    pub fn new(steps: Vec<ToolCall>) -> Plan {
        Plan {
            steps,
            claimed_cost: None,
            cost: None,
        }
    }

    pub fn ends_with_finish(&self) -> bool {
        self.steps
            .last()
            .map(|s| crate::cost::ToolKind::from_name(&s.tool) == Some(crate::cost::ToolKind::Finish))
            .unwrap_or(false)
    }

    pub fn tool_names(&self) -> Vec<&str> {
        self.steps.iter().map(|s| s.tool.as_str()).collect()
    }
}
