use std::sync::Mutex;
use std::time::Duration;

use serde_json::json;

use super::ClassifyError;

/// An externally hosted model (for example `bert-base-uncased` or `cnn`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemoteModelRef {
    pub model_id: String,
    pub endpoint: String,
    pub target: String,
}

pub trait ClassifierService: Send + Sync {
    /// Returns the service's (label, score) verbatim.
    fn classify(&self, model: &RemoteModelRef, text: &str) -> Result<(String, f64), ClassifyError>;
}

/// Speaks `POST {endpoint}/v1/classify` with `{model_id, text, target}` and
/// expects `{label, score}` back. A body carrying `error` is a model error.
pub struct HttpClassifier {
    agent: ureq::Agent,
}

impl HttpClassifier {
    pub fn new(timeout: Duration) -> HttpClassifier {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        HttpClassifier { agent }
    }
}

/// Parses a classify response body.
pub(crate) fn parse_classify_response(body: &str) -> Result<(String, f64), ClassifyError> {
    let v: serde_json::Value =
        serde_json::from_str(body).map_err(|e| ClassifyError::ProtocolError(e.to_string()))?;
    if let Some(err) = v.get("error") {
        let msg = err.as_str().map(str::to_string).unwrap_or_else(|| err.to_string());
        return Err(ClassifyError::RemoteModelError(msg));
    }
    let label = v
        .get("label")
        .and_then(|l| l.as_str())
        .ok_or_else(|| ClassifyError::ProtocolError("missing string field `label`".into()))?;
    let score = v
        .get("score")
        .and_then(|s| s.as_f64())
        .ok_or_else(|| ClassifyError::ProtocolError("missing numeric field `score`".into()))?;
    Ok((label.to_string(), score))
}

impl ClassifierService for HttpClassifier {
    fn classify(&self, model: &RemoteModelRef, text: &str) -> Result<(String, f64), ClassifyError> {
        let url = format!("{}/v1/classify", model.endpoint.trim_end_matches('/'));
        let body = json!({"model_id": model.model_id, "text": text, "target": model.target});
        let mut resp = self
            .agent
            .post(&url)
            .send_json(&body)
            .map_err(|e| ClassifyError::ServiceUnreachable(format!("{url}: {e}")))?;
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| ClassifyError::ServiceUnreachable(format!("{url}: {e}")))?;
        parse_classify_response(&text)
    }
}

/// In-process stand-in for a classifier service.
pub struct StubClassifier {
    responder: Box<dyn Fn(&RemoteModelRef, &str) -> Result<(String, f64), ClassifyError> + Send + Sync>,
    calls: Mutex<Vec<(String, String)>>,
}

impl StubClassifier {
    /// Always answers `label` with score 1.0.
    pub fn echo(label: impl Into<String>) -> StubClassifier {
        let label = label.into();
        StubClassifier::with(move |_, _| Ok((label.clone(), 1.0)))
    }

    pub fn with(
        f: impl Fn(&RemoteModelRef, &str) -> Result<(String, f64), ClassifyError> + Send + Sync + 'static,
    ) -> StubClassifier {
        StubClassifier {
            responder: Box::new(f),
            calls: Mutex::new(Vec::new()),
        }
    }

    /// (model_id, text) for every call so far.
    pub fn calls(&self) -> Vec<(String, String)> {
        self.calls.lock().unwrap().clone()
    }
}

impl ClassifierService for StubClassifier {
    fn classify(&self, model: &RemoteModelRef, text: &str) -> Result<(String, f64), ClassifyError> {
        self.calls
            .lock()
            .unwrap()
            .push((model.model_id.clone(), text.to_string()));
        (self.responder)(model, text)
    }
}
