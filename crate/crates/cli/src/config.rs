//! Run configuration, layered as flags > config file > environment > defaults.

use std::path::{Path, PathBuf};
use std::time::Duration;

use lit_core::benchmark::{parse_template_list, TemplateId};
use lit_core::executor::DEFAULT_STEP_TIMEOUT;
use lit_core::planner::MonthGrouping;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const ENV_ENDPOINT: &str = "LIT_ENDPOINT";
pub const ENV_MODEL: &str = "LIT_MODEL";
pub const ENV_API_KEY: &str = "LIT_API_KEY";

pub const DEFAULT_COUNT: usize = 100;
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_FIXTURE_SEED: u64 = 42;
pub const DEFAULT_CHAT_TIMEOUT: Duration = Duration::from_secs(120);

/// One configuration layer. Every field is optional; absent fields fall
/// through to the next layer. Also the schema of the JSON config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Layer {
    /// Directory holding `hupd.jsonl` and `neurips.jsonl`. When unset the
    /// fixtures are generated in memory from `fixture_seed`.
    pub data_dir: Option<PathBuf>,
    pub fixture_seed: Option<u64>,
    pub cost_table: Option<PathBuf>,
    /// `scripted` or `chat`.
    pub planner: Option<String>,
    /// `offline` or `chat`.
    pub inferencer: Option<String>,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub api_key: Option<String>,
    pub chat_timeout_secs: Option<f64>,
    /// Remote classifier service for the cnn and bert models.
    pub classifier_endpoint: Option<String>,
    /// e.g. "Q1..Q6,Q9" or "all".
    pub templates: Option<String>,
    pub count: Option<usize>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub step_timeout_secs: Option<f64>,
    pub month_grouping: Option<MonthGrouping>,
    pub model_cache: Option<PathBuf>,
}

impl Layer {
    /// `self` wins wherever it has a value.
    pub fn over(self, lower: Layer) -> Layer {
        Layer {
            data_dir: self.data_dir.or(lower.data_dir),
            fixture_seed: self.fixture_seed.or(lower.fixture_seed),
            cost_table: self.cost_table.or(lower.cost_table),
            planner: self.planner.or(lower.planner),
            inferencer: self.inferencer.or(lower.inferencer),
            endpoint: self.endpoint.or(lower.endpoint),
            model: self.model.or(lower.model),
            api_key: self.api_key.or(lower.api_key),
            chat_timeout_secs: self.chat_timeout_secs.or(lower.chat_timeout_secs),
            classifier_endpoint: self.classifier_endpoint.or(lower.classifier_endpoint),
            templates: self.templates.or(lower.templates),
            count: self.count.or(lower.count),
            seed: self.seed.or(lower.seed),
            jobs: self.jobs.or(lower.jobs),
            out: self.out.or(lower.out),
            step_timeout_secs: self.step_timeout_secs.or(lower.step_timeout_secs),
            month_grouping: self.month_grouping.or(lower.month_grouping),
            model_cache: self.model_cache.or(lower.model_cache),
        }
    }

    pub fn from_env(get: impl Fn(&str) -> Option<String>) -> Layer {
        let get = |k: &str| get(k).filter(|v| !v.is_empty());
        Layer {
            endpoint: get(ENV_ENDPOINT),
            model: get(ENV_MODEL),
            api_key: get(ENV_API_KEY),
            ..Layer::default()
        }
    }

    pub fn from_file(path: &Path) -> Result<Layer, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config file {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("config file {}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChatSettings {
    pub endpoint: String,
    pub model: String,
    #[serde(skip)]
    pub api_key: Option<String>,
    pub timeout: Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum PlannerChoice {
    Scripted,
    Chat,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum InferencerChoice {
    Offline,
    Chat,
}

/// A validated configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub data_dir: Option<PathBuf>,
    pub fixture_seed: u64,
    pub cost_table: Option<PathBuf>,
    pub planner: PlannerChoice,
    pub inferencer: InferencerChoice,
    /// Present when the planner or the inferencer talks to a chat model.
    pub chat: Option<ChatSettings>,
    pub classifier_endpoint: Option<String>,
    pub templates: Vec<TemplateId>,
    pub count: usize,
    pub seed: u64,
    pub jobs: usize,
    pub out: PathBuf,
    pub step_timeout: Duration,
    pub month_grouping: MonthGrouping,
    pub model_cache: Option<PathBuf>,
}

fn secs(name: &str, v: Option<f64>, default: Duration) -> Result<Duration, CliError> {
    match v {
        None => Ok(default),
        Some(s) if s.is_finite() && s > 0.0 => Ok(Duration::from_secs_f64(s)),
        Some(s) => Err(CliError::Config(format!("{name} must be a positive number of seconds, got {s}"))),
    }
}

fn existing(name: &str, p: Option<PathBuf>) -> Result<Option<PathBuf>, CliError> {
    match p {
        Some(p) if !p.exists() => Err(CliError::Config(format!("{name} {} does not exist", p.display()))),
        p => Ok(p),
    }
}

impl RunConfig {
    /// Applies defaults to a merged layer and validates it.
    pub fn resolve(layer: Layer) -> Result<RunConfig, CliError> {
        let planner = match layer.planner.as_deref().unwrap_or("scripted") {
            "scripted" => PlannerChoice::Scripted,
            "chat" => PlannerChoice::Chat,
            other => return Err(CliError::Config(format!("unknown planner `{other}` (expected scripted or chat)"))),
        };
        let inferencer = match layer.inferencer.as_deref().unwrap_or("offline") {
            "offline" => InferencerChoice::Offline,
            "chat" => InferencerChoice::Chat,
            other => {
                return Err(CliError::Config(format!(
                    "unknown inferencer `{other}` (expected offline or chat)"
                )))
            }
        };
        let needs_chat = planner == PlannerChoice::Chat || inferencer == InferencerChoice::Chat;
        let chat = match (layer.endpoint, layer.model) {
            (Some(endpoint), Some(model)) => Some(ChatSettings {
                endpoint,
                model,
                api_key: layer.api_key,
                timeout: secs("chat_timeout_secs", layer.chat_timeout_secs, DEFAULT_CHAT_TIMEOUT)?,
            }),
            _ if needs_chat => {
                return Err(CliError::Config(format!(
                    "the chat planner and inferencer need an endpoint and a model (--endpoint/--model, the config file, or {ENV_ENDPOINT}/{ENV_MODEL})"
                )))
            }
            _ => None,
        };
        let templates = match layer.templates.as_deref() {
            None => TemplateId::ALL.to_vec(),
            Some(s) => parse_template_list(s).map_err(|e| CliError::Config(e.to_string()))?,
        };
        if templates.is_empty() {
            return Err(CliError::Config("no templates selected".into()));
        }
        let jobs = layer.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        if jobs == 0 {
            return Err(CliError::Config("jobs must be at least 1".into()));
        }
        Ok(RunConfig {
            data_dir: existing("data_dir", layer.data_dir)?,
            fixture_seed: layer.fixture_seed.unwrap_or(DEFAULT_FIXTURE_SEED),
            cost_table: existing("cost_table", layer.cost_table)?,
            planner,
            inferencer,
            chat,
            classifier_endpoint: layer.classifier_endpoint,
            templates,
            count: layer.count.unwrap_or(DEFAULT_COUNT),
            seed: layer.seed.unwrap_or(DEFAULT_SEED),
            jobs,
            out: layer.out.unwrap_or_else(|| PathBuf::from("lit-out")),
            step_timeout: secs("step_timeout_secs", layer.step_timeout_secs, DEFAULT_STEP_TIMEOUT)?,
            month_grouping: layer.month_grouping.unwrap_or_default(),
            model_cache: layer.model_cache,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chat_planner_requires_endpoint_and_model() {
        let layer = Layer {
            planner: Some("chat".into()),
            endpoint: Some("http://localhost:1".into()),
            ..Layer::default()
        };
        assert!(matches!(RunConfig::resolve(layer), Err(CliError::Config(_))));
    }

    #[test]
    fn empty_env_values_are_ignored() {
        let env = Layer::from_env(|k| (k == ENV_MODEL).then(String::new));
        assert_eq!(env, Layer::default());
    }
}
