//! Deterministic synthetic datasets with the patent and paper schemas.
//!
//! Abstracts carry a planted lexical signal: accepted patents (and oral
//! papers) draw most of their "signal" tokens from one small vocabulary and
//! the rest from another, so a bag-of-words classifier can learn the label.
//! Titles carry category/topic words for the same reason.

use std::fs;
use std::path::Path;

use chrono::{Datelike, Duration, NaiveDate};
use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{write_dataset, Dataset, Table, TableError};
use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixtureConfig {
    pub seed: u64,
    pub n_patents: usize,
    pub n_papers: usize,
}

impl Default for FixtureConfig {
    fn default() -> Self {
        FixtureConfig {
            seed: 42,
            n_patents: 6000,
            n_papers: 3590,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FixtureSummary {
    pub seed: u64,
    pub hupd_rows: usize,
    pub neurips_rows: usize,
    /// Pearson correlation between planted signal score and label.
    pub hupd_signal_correlation: f64,
    pub neurips_signal_correlation: f64,
}

struct CpcClass {
    code: &'static str,
    subgroups: [&'static str; 3],
    words: [&'static str; 6],
}

const CPC: [CpcClass; 8] = [
    CpcClass { code: "G06F", subgroups: ["G06F 3/01", "G06F 16/20", "G06F 9/50"], words: ["data", "processor", "memory", "computing", "software", "interface"] },
    CpcClass { code: "H04L", subgroups: ["H04L 67/10", "H04L 9/32", "H04L 5/00"], words: ["network", "packet", "wireless", "protocol", "routing", "signal"] },
    CpcClass { code: "A61K", subgroups: ["A61K 31/44", "A61K 9/20", "A61K 38/17"], words: ["pharmaceutical", "compound", "dosage", "therapeutic", "formulation", "drug"] },
    CpcClass { code: "B60L", subgroups: ["B60L 53/10", "B60L 58/12", "B60L 15/20"], words: ["vehicle", "battery", "charging", "electric", "motor", "traction"] },
    CpcClass { code: "C07D", subgroups: ["C07D 401/04", "C07D 213/64", "C07D 487/04"], words: ["heterocyclic", "synthesis", "derivative", "ring", "molecule", "catalyst"] },
    CpcClass { code: "H01L", subgroups: ["H01L 21/02", "H01L 29/78", "H01L 27/12"], words: ["semiconductor", "transistor", "wafer", "substrate", "layer", "gate"] },
    CpcClass { code: "G01N", subgroups: ["G01N 33/53", "G01N 21/64", "G01N 27/30"], words: ["sensor", "sample", "detection", "analysis", "measurement", "assay"] },
    CpcClass { code: "F16H", subgroups: ["F16H 57/02", "F16H 48/08", "F16H 61/00"], words: ["gear", "gearbox", "shaft", "clutch", "torque", "bearing"] },
];

const PATENT_PREFIXES: [&str; 5] = [
    "System and method for",
    "Apparatus for",
    "Method of",
    "Device for",
    "Process for",
];

/// Tokens that mostly appear in accepted patent abstracts.
pub const ACCEPT_WORDS: [&str; 8] = [
    "novel", "efficient", "robust", "integrated", "scalable", "improved", "precise", "reliable",
];
const REJECT_WORDS: [&str; 8] = [
    "conventional", "generic", "obvious", "known", "standard", "ordinary", "routine", "typical",
];
const PATENT_FILLER: [&str; 12] = [
    "the", "invention", "provides", "comprising", "wherein", "configured", "includes", "first",
    "second", "plurality", "unit", "embodiment",
];
const CITIES: [&str; 12] = [
    "Austin", "Boston", "San Jose", "Seattle", "Tokyo", "Munich", "Seoul", "Toronto", "Chicago",
    "Shenzhen", "Paris", "Haifa",
];

/// Paper topics and their characteristic words.
pub const TOPICS: [(&str, [&str; 8]); 8] = [
    ("Reinforcement Learning", ["policy", "reward", "agent", "exploration", "bandit", "offline", "value", "markov"]),
    ("Computer Vision", ["image", "segmentation", "detection", "visual", "video", "pixel", "camera", "scene"]),
    ("Natural Language Processing", ["language", "text", "translation", "token", "dialogue", "summarization", "sentence", "parsing"]),
    ("Optimization", ["gradient", "convex", "stochastic", "convergence", "momentum", "descent", "adaptive", "minimax"]),
    ("Learning Theory", ["bounds", "complexity", "generalization", "sample", "regret", "pac", "rademacher", "hypothesis"]),
    ("Generative Models", ["diffusion", "generative", "sampling", "latent", "score", "flow", "autoencoder", "likelihood"]),
    ("Graph Learning", ["graph", "node", "message", "molecular", "edge", "spectral", "relational", "hypergraph"]),
    ("Fairness and Privacy", ["fairness", "privacy", "bias", "differential", "demographic", "auditing", "equity", "protected"]),
];

/// Tokens that mostly appear in oral-paper abstracts.
pub const ORAL_WORDS: [&str; 8] = [
    "breakthrough", "fundamental", "surprising", "elegant", "principled", "unifying", "landmark",
    "insightful",
];
const POSTER_WORDS: [&str; 8] = [
    "incremental", "marginal", "preliminary", "modest", "heuristic", "empirical", "simple",
    "variant",
];
const PAPER_FILLER: [&str; 12] = [
    "we", "propose", "method", "results", "show", "experiments", "framework", "approach",
    "performance", "demonstrate", "model", "task",
];
const TITLE_PREFIXES: [&str; 6] = ["Towards", "Learning", "Efficient", "On", "Scalable", "Provable"];
const FIRST_NAMES: [&str; 20] = [
    "Ada", "Ben", "Chen", "Dana", "Eli", "Fatima", "Gabriel", "Hana", "Ivan", "Jia", "Kofi",
    "Lena", "Mateo", "Nadia", "Omar", "Priya", "Quinn", "Rosa", "Sven", "Tariq",
];
const LAST_NAMES: [&str; 20] = [
    "Abe", "Brown", "Costa", "Dubois", "Evans", "Fischer", "Garcia", "Huang", "Ito", "Jensen",
    "Kim", "Li", "Moreau", "Nguyen", "Okafor", "Patel", "Rossi", "Singh", "Tanaka", "Wang",
];
/// Weights for author counts 1..=12.
const AUTHOR_COUNT_WEIGHTS: [u32; 12] = [4, 8, 12, 14, 14, 12, 10, 8, 6, 5, 4, 3];

fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid date")
}

fn title_case(w: &str) -> String {
    let mut c = w.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// Draws `k` signal tokens, each from `primary` with probability 0.8.
fn signal_tokens<'a>(
    rng: &mut ChaCha8Rng,
    k: usize,
    primary: &[&'a str],
    secondary: &[&'a str],
) -> (Vec<&'a str>, i32) {
    let mut out = Vec::with_capacity(k);
    let mut score = 0;
    for _ in 0..k {
        if rng.gen::<f64>() < 0.8 {
            out.push(*primary.choose(rng).unwrap());
            score += 1;
        } else {
            out.push(*secondary.choose(rng).unwrap());
            score -= 1;
        }
    }
    (out, score)
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if n < 2.0 {
        return 0.0;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

struct PatentDraft {
    filing: NaiveDate,
    order: usize,
    title: String,
    decision: &'static str,
    issue: Option<NaiveDate>,
    published: NaiveDate,
    ipcr: &'static str,
    cpc: &'static str,
    abstract_text: String,
    city: &'static str,
}

fn generate_patents(rng: &mut ChaCha8Rng, n: usize) -> (Table, f64) {
    let years: Vec<i32> = (2004..=2018).collect();
    let year_weights: Vec<f64> = years.iter().map(|y| 1.0 + 0.1 * (y - 2004) as f64).collect();
    let year_dist = WeightedIndex::new(&year_weights).unwrap();
    let mut drafts = Vec::with_capacity(n);
    let mut scores = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);

    for order in 0..n {
        let year = years[year_dist.sample(rng)];
        let days_in_year = if date(year, 12, 31).ordinal() == 366 { 366 } else { 365 };
        let filing = date(year, 1, 1) + Duration::days(rng.gen_range(0..days_in_year));
        let month = filing.month() as f64;
        let rate = (0.5
            + 0.07 * (2.0 * std::f64::consts::PI * (month - 1.0) / 12.0).sin()
            + 0.01 * (year - 2011) as f64)
            .clamp(0.05, 0.95);
        let mut decision = if rng.gen::<f64>() < rate { "ACCEPTED" } else { "REJECTED" };
        if year >= 2017 && rng.gen::<f64>() < 0.12 {
            decision = "PENDING";
        }
        let accepted = decision == "ACCEPTED";

        let class = &CPC[rng.gen_range(0..CPC.len())];
        let ipcr = *class.subgroups.choose(rng).unwrap();
        let mut title_words: Vec<&str> = class.words.choose_multiple(rng, 3).copied().collect();
        title_words.shuffle(rng);
        let title = format!(
            "{} {}",
            PATENT_PREFIXES.choose(rng).unwrap(),
            title_words.join(" ")
        );

        let (primary, secondary) = if accepted {
            (&ACCEPT_WORDS, &REJECT_WORDS)
        } else {
            (&REJECT_WORDS, &ACCEPT_WORDS)
        };
        let (mut words, score) = signal_tokens(rng, 4, primary, secondary);
        for _ in 0..6 {
            words.push(*class.words.choose(rng).unwrap());
        }
        for _ in 0..12 {
            words.push(*PATENT_FILLER.choose(rng).unwrap());
        }
        words.shuffle(rng);
        // Score in favour of the positive class regardless of the true label.
        scores.push(if accepted { score } else { -score } as f64);
        labels.push(if accepted { 1.0 } else { 0.0 });

        let issue = accepted.then(|| filing + Duration::days(rng.gen_range(300..=1500)));
        let published = filing + Duration::days(rng.gen_range(150..=800));
        drafts.push(PatentDraft {
            filing,
            order,
            title,
            decision,
            issue,
            published,
            ipcr,
            cpc: class.code,
            abstract_text: words.join(" "),
            city: CITIES.choose(rng).unwrap(),
        });
    }
    drafts.sort_by_key(|d| (d.filing, d.order));

    let mut next_number = 9_000_000u32;
    let rows = drafts
        .into_iter()
        .map(|d| {
            let number = d.issue.map(|_| {
                next_number += 1;
                Value::text(format!("US{next_number}"))
            });
            vec![
                number.unwrap_or(Value::Null),
                Value::Text(d.title),
                Value::text(d.decision),
                Value::Date(d.filing),
                d.issue.map(Value::Date).unwrap_or(Value::Null),
                Value::Date(d.published),
                Value::text(d.ipcr),
                Value::text(d.cpc),
                Value::Text(d.abstract_text),
                Value::text(d.city),
            ]
        })
        .collect();
    let table = Table::new("hupd", Dataset::Hupd.schema(), rows).expect("generated rows fit schema");
    (table, pearson(&scores, &labels))
}

fn generate_papers(rng: &mut ChaCha8Rng, n: usize) -> (Table, f64) {
    let authors: Vec<String> = FIRST_NAMES
        .iter()
        .flat_map(|f| LAST_NAMES.iter().map(move |l| format!("{f} {l}")))
        .collect();
    let author_weights: Vec<f64> = (0..authors.len())
        .map(|r| 1.0 / ((r + 1) as f64).powf(0.8))
        .collect();
    let author_dist = WeightedIndex::new(&author_weights).unwrap();
    let count_dist = WeightedIndex::new(AUTHOR_COUNT_WEIGHTS).unwrap();

    let mut rows = Vec::with_capacity(n);
    let mut scores = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let (topic, topic_words) = &TOPICS[rng.gen_range(0..TOPICS.len())];
        let picked: Vec<&str> = topic_words.choose_multiple(rng, 3).copied().collect();
        let mut title = format!(
            "{} {}",
            TITLE_PREFIXES.choose(rng).unwrap(),
            picked.iter().map(|w| title_case(w)).collect::<Vec<_>>().join(" ")
        );
        let llm_rate = if *topic == "Natural Language Processing" { 0.5 } else { 0.12 };
        if rng.gen::<f64>() < llm_rate {
            title.push_str(" with Large Language Models");
        }

        let k = count_dist.sample(rng) + 1;
        let mut names: Vec<String> = Vec::with_capacity(k);
        while names.len() < k {
            let name = &authors[author_dist.sample(rng)];
            if !names.contains(name) {
                names.push(name.clone());
            }
        }

        let oral = rng.gen::<f64>() < 0.4;
        let (primary, secondary) = if oral {
            (&ORAL_WORDS, &POSTER_WORDS)
        } else {
            (&POSTER_WORDS, &ORAL_WORDS)
        };
        let (mut words, score) = signal_tokens(rng, 4, primary, secondary);
        for _ in 0..8 {
            words.push(*topic_words.choose(rng).unwrap());
        }
        for _ in 0..12 {
            words.push(*PAPER_FILLER.choose(rng).unwrap());
        }
        words.shuffle(rng);
        scores.push(if oral { score } else { -score } as f64);
        labels.push(if oral { 1.0 } else { 0.0 });

        rows.push(vec![
            Value::Text(title),
            Value::List(names.into_iter().map(Value::Text).collect()),
            Value::Text(words.join(" ")),
            Value::text(*topic),
            Value::Bool(oral),
        ]);
    }
    let table = Table::new("neurips", Dataset::Neurips.schema(), rows).expect("generated rows fit schema");
    (table, pearson(&scores, &labels))
}

/// Generates both tables in memory.
pub fn generate_tables(cfg: FixtureConfig) -> Result<(Table, Table, FixtureSummary), TableError> {
    if cfg.n_patents == 0 || cfg.n_papers == 0 {
        return Err(TableError::InvalidFixture(
            "fixture sizes must be at least 1".into(),
        ));
    }
    let mut patent_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut paper_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
    let (hupd, hc) = generate_patents(&mut patent_rng, cfg.n_patents);
    let (neurips, nc) = generate_papers(&mut paper_rng, cfg.n_papers);
    // With a handful of rows the correlation can legitimately be undefined.
    let big_enough = cfg.n_patents >= 50 && cfg.n_papers >= 50;
    if big_enough && (hc <= 0.0 || nc <= 0.0) {
        return Err(TableError::InvalidFixture(format!(
            "planted signal missing (correlations {hc:.3}, {nc:.3})"
        )));
    }
    let summary = FixtureSummary {
        seed: cfg.seed,
        hupd_rows: hupd.len(),
        neurips_rows: neurips.len(),
        hupd_signal_correlation: hc,
        neurips_signal_correlation: nc,
    };
    Ok((hupd, neurips, summary))
}

/// Generates both datasets and writes them as JSON-lines into `out_dir`.
pub fn generate_fixtures(cfg: FixtureConfig, out_dir: &Path) -> Result<FixtureSummary, TableError> {
    let (hupd, neurips, summary) = generate_tables(cfg)?;
    fs::create_dir_all(out_dir).map_err(|source| TableError::Io {
        path: out_dir.display().to_string(),
        source,
    })?;
    write_dataset(&out_dir.join(Dataset::Hupd.file_name()), &hupd)?;
    write_dataset(&out_dir.join(Dataset::Neurips.file_name()), &neurips)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{read_dataset, train_split};

    fn small() -> FixtureConfig {
        FixtureConfig {
            seed: 3,
            n_patents: 800,
            n_papers: 400,
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        generate_fixtures(small(), a.path()).unwrap();
        generate_fixtures(small(), b.path()).unwrap();
        for ds in Dataset::ALL {
            let x = fs::read(a.path().join(ds.file_name())).unwrap();
            let y = fs::read(b.path().join(ds.file_name())).unwrap();
            assert_eq!(x, y);
        }
    }

    #[test]
    fn zero_patents_is_an_error() {
        let cfg = FixtureConfig { n_patents: 0, ..small() };
        assert!(matches!(generate_tables(cfg), Err(TableError::InvalidFixture(_))));
    }

    #[test]
    fn default_paper_count_and_split() {
        let cfg = FixtureConfig { n_patents: 100, ..FixtureConfig::default() };
        let (_, papers, _) = generate_tables(cfg).unwrap();
        assert_eq!(papers.len(), 3590);
        let (train, test) = train_split(&papers, Dataset::Neurips);
        assert_eq!((train.len(), test.len()), (3000, 590));
    }

    #[test]
    fn generated_patents_respect_schema_rules() {
        let dir = tempfile::tempdir().unwrap();
        generate_fixtures(small(), dir.path()).unwrap();
        let t = read_dataset(&dir.path().join("hupd.jsonl"), Dataset::Hupd).unwrap();
        let dec = t.column_index("decision").unwrap();
        let num = t.column_index("patent_number").unwrap();
        let issue = t.column_index("patent_issue_date").unwrap();
        let filing = t.column_index("filing_date").unwrap();
        let mut accepted = 0;
        for row in t.rows() {
            let is_acc = row[dec] == Value::text("ACCEPTED");
            accepted += is_acc as usize;
            assert_eq!(row[num].is_null(), !is_acc);
            assert_eq!(row[issue].is_null(), !is_acc);
            if let Value::Date(d) = &row[filing] {
                assert!((2004..=2018).contains(&d.year()));
            } else {
                panic!("filing date missing");
            }
        }
        let rate = accepted as f64 / t.len() as f64;
        assert!((0.4..0.6).contains(&rate), "acceptance base rate {rate}");
    }

    #[test]
    fn signal_is_planted_on_several_seeds() {
        for seed in 0..5 {
            let (_, _, s) = generate_tables(FixtureConfig { seed, ..small() }).unwrap();
            assert!(s.hupd_signal_correlation > 0.3);
            assert!(s.neurips_signal_correlation > 0.3);
        }
    }
}
