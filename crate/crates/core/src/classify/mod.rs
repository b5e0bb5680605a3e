//! Binary text classification: hashed bag-of-words logistic regression
//! trained in process, plus a wire protocol for externally hosted models.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::table::{Dataset, Table};
use crate::value::Value;

mod remote;

pub use remote::{ClassifierService, HttpClassifier, RemoteModelRef, StubClassifier};

pub const FEATURE_DIM: usize = 1 << 15;
pub const LEARNING_RATE: f64 = 0.5;
pub const L2_STRENGTH: f64 = 1e-4;
pub const EPOCHS: usize = 500;
const CACHE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("training data contains only one class ({0})")]
    SingleClassData(String),
    #[error("unknown classification target `{0}`")]
    UnknownTarget(String),
    #[error("classifier service unreachable: {0}")]
    ServiceUnreachable(String),
    #[error("classifier service sent a malformed response: {0}")]
    ProtocolError(String),
    #[error("classifier service reported an error: {0}")]
    RemoteModelError(String),
    #[error("model cache {path}: {message}")]
    Cache { path: PathBuf, message: String },
}

/// Lowercases and splits on every non-alphanumeric character.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// 32-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u32 {
    let mut h: u32 = 0x811c_9dc5;
    for b in bytes {
        h ^= *b as u32;
        h = h.wrapping_mul(0x0100_0193);
    }
    h
}

#[derive(Debug, Clone, PartialEq)]
pub struct HashedFeatures {
    /// Sorted by index, counts at least 1.
    pub entries: Vec<(u32, u32)>,
}

impl HashedFeatures {
    pub fn from_text(text: &str) -> HashedFeatures {
        let mut idx: Vec<u32> = tokenize(text)
            .iter()
            .map(|t| fnv1a(t.as_bytes()) % FEATURE_DIM as u32)
            .collect();
        idx.sort_unstable();
        let mut entries: Vec<(u32, u32)> = Vec::new();
        for i in idx {
            match entries.last_mut() {
                Some((j, c)) if *j == i => *c += 1,
                _ => entries.push((i, 1)),
            }
        }
        HashedFeatures { entries }
    }

    fn dot(&self, w: &[f64]) -> f64 {
        self.entries.iter().map(|(i, c)| w[*i as usize] * *c as f64).sum()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub target: String,
    pub positive_label: String,
    pub negative_label: String,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainStats {
    pub initial_loss: f64,
    pub final_loss: f64,
}

impl LogRegModel {
    pub fn probability(&self, text: &str) -> f64 {
        sigmoid(HashedFeatures::from_text(text).dot(&self.weights) + self.bias)
    }

    pub fn predict(&self, text: &str) -> (String, f64) {
        let p = self.probability(text);
        let label = if p >= 0.5 {
            &self.positive_label
        } else {
            &self.negative_label
        };
        (label.clone(), p)
    }
}

fn objective(feats: &[HashedFeatures], ys: &[f64], w: &[f64], b: f64) -> f64 {
    let n = feats.len() as f64;
    let data: f64 = feats
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let z = x.dot(w) + b;
            // log(1 + e^z) - y z, computed stably
            let softplus = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
            softplus - y * z
        })
        .sum::<f64>()
        / n;
    data + 0.5 * L2_STRENGTH * w.iter().map(|v| v * v).sum::<f64>()
}

/// Full-batch gradient descent on mean log-loss with an L2 penalty.
///
/// Labels equal to `positive_label` are positive, every other label is
/// negative; the first non-positive label seen names the negative class.
pub fn train_logreg(
    examples: &[(String, String)],
    positive_label: &str,
    seed: u64,
) -> Result<(LogRegModel, TrainStats), ClassifyError> {
    if examples.is_empty() {
        return Err(ClassifyError::EmptyCorpus);
    }
    let negative_label = examples
        .iter()
        .map(|(_, l)| l)
        .find(|l| l.as_str() != positive_label)
        .cloned()
        .ok_or_else(|| ClassifyError::SingleClassData(positive_label.to_string()))?;
    if !examples.iter().any(|(_, l)| l == positive_label) {
        return Err(ClassifyError::SingleClassData(negative_label));
    }
    let feats: Vec<HashedFeatures> = examples.iter().map(|(t, _)| HashedFeatures::from_text(t)).collect();
    let ys: Vec<f64> = examples
        .iter()
        .map(|(_, l)| if l == positive_label { 1.0 } else { 0.0 })
        .collect();
    let n = feats.len() as f64;
    let mut w = vec![0.0; FEATURE_DIM];
    let mut b = 0.0;
    let initial_loss = objective(&feats, &ys, &w, b);
    let mut grad = vec![0.0; FEATURE_DIM];
    for _ in 0..EPOCHS {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut gb = 0.0;
        for (x, y) in feats.iter().zip(&ys) {
            let r = sigmoid(x.dot(&w) + b) - y;
            gb += r;
            for (i, c) in &x.entries {
                grad[*i as usize] += r * *c as f64;
            }
        }
        for (wi, gi) in w.iter_mut().zip(&grad) {
            *wi -= LEARNING_RATE * (gi / n + L2_STRENGTH * *wi);
        }
        b -= LEARNING_RATE * gb / n;
    }
    let final_loss = objective(&feats, &ys, &w, b);
    Ok((
        LogRegModel {
            weights: w,
            bias: b,
            target: String::new(),
            positive_label: positive_label.to_string(),
            negative_label,
            seed,
        },
        TrainStats {
            initial_loss,
            final_loss,
        },
    ))
}

/// What a natively trained model predicts, and from which column.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Target {
    /// hupd abstract → ACCEPTED / not ACCEPTED.
    Decision,
    /// neurips abstract → oral / not oral.
    Oral,
    /// neurips title → `<topic>` / not `<topic>`.
    Topic(String),
}

impl FromStr for Target {
    type Err = ClassifyError;

    fn from_str(s: &str) -> Result<Target, ClassifyError> {
        match s {
            "decision" => Ok(Target::Decision),
            "oral" => Ok(Target::Oral),
            _ => match s.strip_prefix("topic:") {
                Some(t) if !t.trim().is_empty() => Ok(Target::Topic(t.trim().to_string())),
                _ => Err(ClassifyError::UnknownTarget(s.to_string())),
            },
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Decision => f.write_str("decision"),
            Target::Oral => f.write_str("oral"),
            Target::Topic(t) => write!(f, "topic:{t}"),
        }
    }
}

impl Target {
    pub fn dataset(&self) -> Dataset {
        match self {
            Target::Decision => Dataset::Hupd,
            Target::Oral | Target::Topic(_) => Dataset::Neurips,
        }
    }

    pub fn text_column(&self) -> &'static str {
        match self {
            Target::Decision | Target::Oral => "abstract",
            Target::Topic(_) => "title",
        }
    }

    pub fn positive_label(&self) -> String {
        match self {
            Target::Decision => "ACCEPTED".into(),
            Target::Oral => "oral".into(),
            Target::Topic(t) => t.clone(),
        }
    }

    pub fn negative_label(&self) -> String {
        format!("not {}", self.positive_label())
    }

    fn row_label(&self, table: &Table, row: &[Value]) -> Option<String> {
        let cell = |name: &str| table.column_index(name).map(|i| &row[i]);
        let positive = match self {
            Target::Decision => cell("decision")?.as_text()? == "ACCEPTED",
            Target::Oral => matches!(cell("oral")?, Value::Bool(true)),
            Target::Topic(t) => cell("topic")?.as_text()? == t,
        };
        Some(if positive {
            self.positive_label()
        } else {
            self.negative_label()
        })
    }

    /// (text, label) pairs from a table of this target's dataset.
    pub fn examples(&self, table: &Table) -> Vec<(String, String)> {
        let Some(ti) = table.column_index(self.text_column()) else {
            return Vec::new();
        };
        table
            .rows()
            .iter()
            .filter_map(|r| {
                let text = r[ti].as_text()?.to_string();
                Some((text, self.row_label(table, r)?))
            })
            .collect()
    }
}

/// Stable fingerprint of a training table, used in cache keys.
pub fn dataset_hash(table: &Table) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in table.to_jsonl().as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[derive(Serialize, Deserialize)]
struct CacheFile {
    version: u32,
    dataset_hash: u64,
    seed: u64,
    target: String,
    /// Only non-zero weights, as (index, value).
    weights: Vec<(u32, f64)>,
    bias: f64,
    positive_label: String,
    negative_label: String,
}

fn cache_path(dir: &Path, target: &Target, hash: u64, seed: u64) -> PathBuf {
    let slug: String = target
        .to_string()
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect();
    dir.join(format!("logreg-{slug}-{hash:016x}-{seed}.json"))
}

fn cache_err(path: &Path, message: impl fmt::Display) -> ClassifyError {
    ClassifyError::Cache {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

/// Trains a model for `target` on `train`, reusing a cached fit in
/// `cache_dir` when one exists for the same data and seed.
pub fn train_for_target(
    target: &Target,
    train: &Table,
    seed: u64,
    cache_dir: Option<&Path>,
) -> Result<LogRegModel, ClassifyError> {
    let hash = dataset_hash(train);
    let path = cache_dir.map(|d| cache_path(d, target, hash, seed));
    if let Some(p) = &path {
        if let Ok(text) = std::fs::read_to_string(p) {
            let file: CacheFile = serde_json::from_str(&text).map_err(|e| cache_err(p, e))?;
            if file.version == CACHE_VERSION && file.dataset_hash == hash && file.seed == seed {
                let mut weights = vec![0.0; FEATURE_DIM];
                for (i, v) in file.weights {
                    let slot = weights
                        .get_mut(i as usize)
                        .ok_or_else(|| cache_err(p, "weight index out of range"))?;
                    *slot = v;
                }
                return Ok(LogRegModel {
                    weights,
                    bias: file.bias,
                    target: file.target,
                    positive_label: file.positive_label,
                    negative_label: file.negative_label,
                    seed,
                });
            }
        }
    }
    let (mut model, _) = train_logreg(&target.examples(train), &target.positive_label(), seed)?;
    model.target = target.to_string();
    model.negative_label = target.negative_label();
    if let Some(p) = &path {
        let file = CacheFile {
            version: CACHE_VERSION,
            dataset_hash: hash,
            seed,
            target: model.target.clone(),
            weights: model
                .weights
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| (i as u32, *v))
                .collect(),
            bias: model.bias,
            positive_label: model.positive_label.clone(),
            negative_label: model.negative_label.clone(),
        };
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent).map_err(|e| cache_err(p, e))?;
        }
        let tmp = p.with_extension("tmp");
        std::fs::write(&tmp, serde_json::to_string(&file).map_err(|e| cache_err(p, e))?)
            .map_err(|e| cache_err(p, e))?;
        std::fs::rename(&tmp, p).map_err(|e| cache_err(p, e))?;
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizer_lowercases_and_splits() {
        assert_eq!(tokenize("Deep-Learning, GPUs & x2!"), vec!["deep", "learning", "gpus", "x2"]);
        assert!(tokenize("  ,, ").is_empty());
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a(b""), 0x811c9dc5);
        assert_eq!(fnv1a(b"a"), 0xe40c292c);
        assert_eq!(fnv1a(b"foobar"), 0xbf9cf968);
    }

    #[test]
    fn features_count_repeats() {
        let f = HashedFeatures::from_text("alpha Alpha beta");
        assert_eq!(f.entries.iter().map(|(_, c)| c).sum::<u32>(), 3);
        assert!(f.entries.iter().all(|(i, _)| (*i as usize) < FEATURE_DIM));
    }

    #[test]
    fn single_class_and_empty_rejected() {
        let ex = vec![("a".to_string(), "x".to_string()); 3];
        assert!(matches!(train_logreg(&ex, "x", 0), Err(ClassifyError::SingleClassData(_))));
        assert!(matches!(train_logreg(&ex, "y", 0), Err(ClassifyError::SingleClassData(_))));
        assert!(matches!(train_logreg(&[], "y", 0), Err(ClassifyError::EmptyCorpus)));
    }

    #[test]
    fn empty_text_gives_sigmoid_of_bias() {
        let ex = vec![
            ("good".to_string(), "pos".to_string()),
            ("bad".to_string(), "neg".to_string()),
            ("good good".to_string(), "pos".to_string()),
        ];
        let (m, stats) = train_logreg(&ex, "pos", 1).unwrap();
        assert_eq!(m.probability(""), sigmoid(m.bias));
        assert!(stats.final_loss <= stats.initial_loss);
    }

    #[test]
    fn target_parsing() {
        assert_eq!("decision".parse::<Target>().unwrap(), Target::Decision);
        assert_eq!(
            "topic:Reinforcement Learning".parse::<Target>().unwrap(),
            Target::Topic("Reinforcement Learning".into())
        );
        assert!("topic:".parse::<Target>().is_err());
        assert_eq!(Target::Oral.negative_label(), "not oral");
    }
}
