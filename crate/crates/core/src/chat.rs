//! Minimal client for an OpenAI-style chat completions endpoint.

use std::time::Duration;

use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChatError {
    #[error("chat endpoint unreachable: {0}")]
    Unreachable(String),
    #[error("chat endpoint sent a malformed response: {0}")]
    Protocol(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatConfig {
    /// Base URL; `/v1/chat/completions` is appended.
    pub endpoint: String,
    pub model: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
}

/// Anything that turns a prompt into generated text.
pub trait Generator: Send + Sync {
    fn generate(&self, prompt: &str) -> Result<String, ChatError>;
}

pub struct ChatClient {
    config: ChatConfig,
    agent: ureq::Agent,
}

impl ChatClient {
    pub fn new(config: ChatConfig) -> ChatClient {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .build()
            .into();
        ChatClient { config, agent }
    }

    pub fn config(&self) -> &ChatConfig {
        &self.config
    }
}

/// The first choice's message content.
pub(crate) fn parse_chat_response(body: &str) -> Result<String, ChatError> {
    let v: serde_json::Value = serde_json::from_str(body).map_err(|e| ChatError::Protocol(e.to_string()))?;
    v.pointer("/choices/0/message/content")
        .and_then(|c| c.as_str())
        .map(str::to_string)
        .ok_or_else(|| ChatError::Protocol("missing choices[0].message.content".into()))
}

impl Generator for ChatClient {
    fn generate(&self, prompt: &str) -> Result<String, ChatError> {
        let url = format!("{}/v1/chat/completions", self.config.endpoint.trim_end_matches('/'));
        let body = json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": 0,
        });
        let mut req = self.agent.post(&url);
        if let Some(key) = &self.config.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req
            .send_json(&body)
            .map_err(|e| ChatError::Unreachable(format!("{url}: {e}")))?;
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| ChatError::Unreachable(format!("{url}: {e}")))?;
        parse_chat_response(&text)
    }
}
