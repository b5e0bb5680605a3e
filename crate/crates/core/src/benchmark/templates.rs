//! The thirteen question templates, their parameters and instantiation.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use chrono::Datelike;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::truth::{ground_truth, Truth};
use super::BenchError;
use crate::executor::AnswerType;
use crate::table::{Dataset, TableStore, NEURIPS_TRAIN_ROWS, TOPICS};
use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TemplateId {
    Q1,
    Q2,
    Q3,
    Q4,
    Q5,
    Q6,
    Q7,
    Q8,
    Q9,
    Q10,
    Q11,
    Q12,
    Q13,
}

impl TemplateId {
    pub const ALL: [TemplateId; 13] = [
        TemplateId::Q1,
        TemplateId::Q2,
        TemplateId::Q3,
        TemplateId::Q4,
        TemplateId::Q5,
        TemplateId::Q6,
        TemplateId::Q7,
        TemplateId::Q8,
        TemplateId::Q9,
        TemplateId::Q10,
        TemplateId::Q11,
        TemplateId::Q12,
        TemplateId::Q13,
    ];

    pub fn number(self) -> usize {
        TemplateId::ALL.iter().position(|t| *t == self).unwrap() + 1
    }

    pub fn from_number(n: usize) -> Option<TemplateId> {
        n.checked_sub(1).and_then(|i| TemplateId::ALL.get(i)).copied()
    }

    pub fn difficulty(self) -> Difficulty {
        match self.number() {
            1..=6 => Difficulty::Easy,
            7..=10 => Difficulty::Medium,
            _ => Difficulty::Hard,
        }
    }

    pub fn dataset(self) -> Dataset {
        use TemplateId::*;
        match self {
            Q1 | Q2 | Q3 | Q4 | Q7 | Q8 | Q11 => Dataset::Hupd,
            Q5 | Q6 | Q9 | Q10 | Q12 | Q13 => Dataset::Neurips,
        }
    }

    pub fn answer_type(self) -> AnswerType {
        use TemplateId::*;
        match self {
            Q1 => AnswerType::Integer,
            Q2 | Q5 => AnswerType::TextList,
            Q3 | Q6 => AnswerType::Real01,
            Q4 => AnswerType::Text,
            Q7 => AnswerType::RealList,
            Q8 | Q9 | Q10 | Q13 => AnswerType::Label,
            Q11 | Q12 => AnswerType::YesNo,
        }
    }

    /// Templates scored by bootstrap F1 over (prediction, truth) pairs.
    pub fn is_binary(self) -> bool {
        matches!(self.number(), 8..=12)
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q{}", self.number())
    }
}

impl FromStr for TemplateId {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<TemplateId, BenchError> {
        let t = s.trim();
        let digits = t.strip_prefix(['Q', 'q']).unwrap_or(t);
        digits
            .parse::<usize>()
            .ok()
            .and_then(TemplateId::from_number)
            .ok_or_else(|| BenchError::UnknownTemplate(s.to_string()))
    }
}

/// Parses `Q1..Q6`, `Q8,Q10`, `all`, or combinations separated by commas.
pub fn parse_template_list(s: &str) -> Result<Vec<TemplateId>, BenchError> {
    let mut out = BTreeSet::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if part.eq_ignore_ascii_case("all") {
            out.extend(TemplateId::ALL);
        } else if let Some((a, b)) = part.split_once("..") {
            let (a, b): (TemplateId, TemplateId) = (a.parse()?, b.parse()?);
            out.extend(TemplateId::ALL.iter().filter(|t| (a..=b).contains(t)));
        } else {
            out.insert(part.parse()?);
        }
    }
    if out.is_empty() {
        return Err(BenchError::UnknownTemplate(s.to_string()));
    }
    Ok(out.into_iter().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    Easy,
    Medium,
    Hard,
}

impl Difficulty {
    pub const ALL: [Difficulty; 3] = [Difficulty::Easy, Difficulty::Medium, Difficulty::Hard];

    pub fn as_str(self) -> &'static str {
        match self {
            Difficulty::Easy => "easy",
            Difficulty::Medium => "medium",
            Difficulty::Hard => "hard",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CategoryScheme {
    Ipcr,
    Cpc,
}

impl CategoryScheme {
    pub fn label(self) -> &'static str {
        match self {
            CategoryScheme::Ipcr => "IPCR",
            CategoryScheme::Cpc => "CPC",
        }
    }

    pub fn column(self) -> &'static str {
        match self {
            CategoryScheme::Ipcr => "icpr_category",
            CategoryScheme::Cpc => "cpc_category",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Compare {
    MoreThan,
    FewerThan,
    Exactly,
}

impl Compare {
    pub const ALL: [Compare; 3] = [Compare::MoreThan, Compare::FewerThan, Compare::Exactly];

    pub fn words(self) -> &'static str {
        match self {
            Compare::MoreThan => "more than",
            Compare::FewerThan => "fewer than",
            Compare::Exactly => "exactly",
        }
    }

    pub fn operator(self) -> &'static str {
        match self {
            Compare::MoreThan => ">",
            Compare::FewerThan => "<",
            Compare::Exactly => "==",
        }
    }

    pub fn holds(self, count: usize, n: usize) -> bool {
        match self {
            Compare::MoreThan => count > n,
            Compare::FewerThan => count < n,
            Compare::Exactly => count == n,
        }
    }

    fn from_words(s: &str) -> Option<Compare> {
        Compare::ALL.into_iter().find(|c| c.words() == s)
    }
}

/// Parameter bindings. Each variant belongs to one or two templates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Params {
    /// Q1 and Q4.
    YearRange { start_year: i32, end_year: i32 },
    /// Q2.
    TopCategories { k: usize, scheme: CategoryScheme, year: i32 },
    /// Q3.
    YearRatio { year1: i32, year2: i32 },
    /// Q5.
    TopAuthors { k: usize, llm_only: bool },
    /// Q6.
    AuthorCount { compare: Compare, n: usize },
    /// Q7.
    Monthly { start_year: i32, n: usize },
    /// Q8 and Q10.
    Abstract { text: String },
    /// Q9.
    TitleTopic { title: String, topic: String },
    /// Q11.
    TitlePair { title1: String, title2: String },
    /// Q12.
    AbstractTitle { abstract_text: String, title: String },
    /// Q13.
    TopicChoice { title: String, options: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionInstance {
    pub id: String,
    pub template: TemplateId,
    pub params: Params,
    pub text: String,
    /// Rows of the full dataset the instance was drawn from; empty for
    /// questions that aggregate over the table or were typed by hand.
    #[serde(default)]
    pub source_rows: Vec<usize>,
}

impl QuestionInstance {
    pub fn new(id: impl Into<String>, template: TemplateId, params: Params) -> Result<QuestionInstance, BenchError> {
        let text = render_text(template, &params)?;
        Ok(QuestionInstance {
            id: id.into(),
            template,
            params,
            text,
            source_rows: Vec::new(),
        })
    }

    pub fn difficulty(&self) -> Difficulty {
        self.template.difficulty()
    }

    pub fn dataset(&self) -> Dataset {
        self.template.dataset()
    }

    pub fn answer_type(&self) -> AnswerType {
        self.template.answer_type()
    }

    /// Allowed answers for label questions.
    pub fn labels(&self) -> Option<Vec<String>> {
        match (&self.template, &self.params) {
            (TemplateId::Q8, _) => Some(vec!["ACCEPTED".into(), "not ACCEPTED".into()]),
            (TemplateId::Q9, Params::TitleTopic { topic, .. }) => Some(vec![topic.clone(), format!("not {topic}")]),
            (TemplateId::Q10, _) => Some(vec!["oral".into(), "not oral".into()]),
            (TemplateId::Q13, Params::TopicChoice { options, .. }) => Some(options.clone()),
            _ => None,
        }
    }

    /// The positive class of binary templates.
    pub fn positive_label(&self) -> Option<String> {
        match (&self.template, &self.params) {
            (TemplateId::Q8, _) => Some("ACCEPTED".into()),
            (TemplateId::Q9, Params::TitleTopic { topic, .. }) => Some(topic.clone()),
            (TemplateId::Q10, _) => Some("oral".into()),
            (TemplateId::Q11 | TemplateId::Q12, _) => Some("Yes".into()),
            _ => None,
        }
    }
}

fn mismatch(template: TemplateId, params: &Params) -> BenchError {
    BenchError::InvalidParams(format!("{template} cannot take parameters {params:?}"))
}

/// Substitutes parameters into the template's question text.
pub fn render_text(template: TemplateId, params: &Params) -> Result<String, BenchError> {
    use Params::*;
    use TemplateId::*;
    Ok(match (template, params) {
        (Q1, YearRange { start_year, end_year }) => format!(
            "What was the average time between the filing and issuance of patents from {start_year} to {end_year}? \
             Return an integer representing the number of days by truncating the decimal part."
        ),
        (Q2, TopCategories { k, scheme, year }) => {
            let s = scheme.label();
            format!(
                "What were the top {k} {s} categories with the highest number of accepted patents in {year}? \
                 Return them as a list of {s} categories."
            )
        }
        (Q3, YearRatio { year1, year2 }) => format!(
            "How does the number of patent applications filed in {year1} compare proportionally to those filed in {year2}? \
             Return a number between 0 and 1. Please note that each row represents a patent application, \
             and not all patent applications are assigned a patent number."
        ),
        (Q4, YearRange { start_year, end_year }) => format!(
            "What is the title of the patent filed between {start_year} and {end_year} that took the longest \
             number of days between the filing date and the publication date?"
        ),
        (Q5, TopAuthors { k, llm_only }) => format!(
            "Who were the top {k} authors with the most publications{} at NeurIPS?",
            if *llm_only { " where the titles contain 'Large Language Models'" } else { "" }
        ),
        (Q6, AuthorCount { compare, n }) => format!(
            "What proportion of NeurIPS papers have {} {n} authors? In the authors column of the database, \
             each entry is a list, not a single string. Return a value between 0 and 1.",
            compare.words()
        ),
        (Q7, Monthly { start_year, n }) => format!(
            "First, group the patent applications by month from {start_year} to 2012. For each month, calculate \
             the percentage of applications that were accepted. Then, estimate the percentage of patents filed in \
             the first {n} months of 2013 that will be accepted based on the monthly acceptance rates from the \
             previous years. Return a list of acceptance percentages for each of the first {n} months of 2013, \
             with each percentage expressed as a value between 0 and 100."
        ),
        (Q8, Abstract { text }) => format!(
            "For a patent application, which is not present in the database, with an abstract {text}, predict \
             whether it will get accepted. Return either 'ACCEPTED' or 'not ACCEPTED'."
        ),
        (Q9, TitleTopic { title, topic }) => format!(
            "For a NeurIPS paper, which is not present in the database, with title {title}, predict whether it \
             belongs to {topic}? Return either '{topic}' or 'not {topic}'."
        ),
        (Q10, Abstract { text }) => format!(
            "For a NeurIPS paper, which is not present in the database, with abstract {text}, predict whether it \
             will be accepted as an oral presentation? Return either 'oral' or 'not oral'."
        ),
        (Q11, TitlePair { title1, title2 }) => format!(
            "Predict if the following two patents, which are not present in the database, belong to the same CPC \
             category: {title1}, {title2}? Return 'Yes' or 'No'."
        ),
        (Q12, AbstractTitle { abstract_text, title }) => format!(
            "Predict if this abstract-title pair, which is not present in the database, is from the same NeurIPS \
             paper: Abstract: {abstract_text}. Title: {title}. Return 'Yes' or 'No'."
        ),
        (Q13, TopicChoice { title, options }) if options.len() == 3 => format!(
            "Predict the best fit topic for the title of a NeurIPS paper, which is not present in the database: \
             {title}. Options: {}.",
            options.join(", ")
        ),
        (t, p) => return Err(mismatch(t, p)),
    })
}

struct Pattern {
    template: TemplateId,
    re: Regex,
}

fn patterns() -> &'static [Pattern] {
    static P: OnceLock<Vec<Pattern>> = OnceLock::new();
    P.get_or_init(|| {
        use TemplateId::*;
        let src: [(TemplateId, &str); 13] = [
            (Q1, r"^What was the average time between the filing and issuance of patents from (\d{4}) to (\d{4})\?"),
            (Q2, r"^What were the top (\d+) (IPCR|CPC) categories with the highest number of accepted patents in (\d{4})\?"),
            (Q3, r"^How does the number of patent applications filed in (\d{4}) compare proportionally to those filed in (?:the )?(\d{4})\?"),
            (Q4, r"^What is the title of the patent filed between (\d{4}) and (\d{4}) that took the longest"),
            (Q5, r"^Who were the top (\d+) authors with the most publications( where the titles contain 'Large Language Models')? at NeurIPS\?"),
            (Q6, r"^What proportion of NeurIPS papers have (more than|fewer than|exactly) (\d+) authors\?"),
            (Q7, r"^First, group the patent applications by month from (\d{4}) to 2012\..*?first (\d+) months of 2013"),
            (Q8, r"^For a patent application, which is not present in the database, with an abstract (.+), predict whether it will get accepted\."),
            (Q9, r"^For a NeurIPS paper, which is not present in the database, with title (.+), predict whether it belongs to (.+?)\? Return either"),
            (Q10, r"^For a NeurIPS paper, which is not present in the database, with abstract (.+), predict whether it will be accepted as an oral presentation\?"),
            (Q11, r"^Predict if the following two patents, which are not present in the database, belong to the same CPC category: (.+?), (.+)\? Return 'Yes' or 'No'\.?$"),
            (Q12, r"^Predict if this abstract-title pair, which is not present in the database, is from the same NeurIPS paper: Abstract: (.+)\. Title: (.+)\. Return 'Yes' or 'No'\.?$"),
            (Q13, r"^Predict the best fit topic for the title of a NeurIPS paper, which is not present in the database: (.+)\. Options: (.+?), (.+?), (.+?)\.?$"),
        ];
        src.into_iter()
            .map(|(template, re)| Pattern {
                template,
                re: Regex::new(&format!("(?s){re}")).expect("valid template pattern"),
            })
            .collect()
    })
}

/// Recognizes a question written in one of the template forms and recovers
/// its parameters.
pub fn match_question(text: &str) -> Option<QuestionInstance> {
    let text = text.split_whitespace().collect::<Vec<_>>().join(" ");
    for p in patterns() {
        let Some(c) = p.re.captures(&text) else { continue };
        let s = |i: usize| c.get(i).map(|m| m.as_str().to_string()).unwrap_or_default();
        let int = |i: usize| s(i).parse::<i64>().ok();
        use TemplateId::*;
        let params = match p.template {
            Q1 | Q4 => Params::YearRange {
                start_year: int(1)? as i32,
                end_year: int(2)? as i32,
            },
            Q2 => Params::TopCategories {
                k: int(1)? as usize,
                scheme: if s(2) == "IPCR" { CategoryScheme::Ipcr } else { CategoryScheme::Cpc },
                year: int(3)? as i32,
            },
            Q3 => Params::YearRatio {
                year1: int(1)? as i32,
                year2: int(2)? as i32,
            },
            Q5 => Params::TopAuthors {
                k: int(1)? as usize,
                llm_only: c.get(2).is_some(),
            },
            Q6 => Params::AuthorCount {
                compare: Compare::from_words(&s(1))?,
                n: int(2)? as usize,
            },
            Q7 => Params::Monthly {
                start_year: int(1)? as i32,
                n: int(2)? as usize,
            },
            Q8 | Q10 => Params::Abstract { text: s(1) },
            Q9 => Params::TitleTopic { title: s(1), topic: s(2) },
            Q11 => Params::TitlePair { title1: s(1), title2: s(2) },
            Q12 => Params::AbstractTitle {
                abstract_text: s(1),
                title: s(2),
            },
            Q13 => Params::TopicChoice {
                title: s(1),
                options: vec![s(2), s(3), s(4)],
            },
        };
        return QuestionInstance::new("ask", p.template, params).ok();
    }
    None
}

const MAX_DRAWS: usize = 500;

fn template_rng(seed: u64, template: TemplateId) -> ChaCha8Rng {
    let mix = 0x9e37_79b9_7f4a_7c15u64.wrapping_mul(template.number() as u64);
    ChaCha8Rng::seed_from_u64(seed ^ mix)
}

/// Facts about the fixture needed to draw realizable parameters.
struct Census {
    hupd_years: Vec<i32>,
    hupd_held_out: Vec<usize>,
    neurips_held_out: Vec<usize>,
}

fn census(store: &TableStore) -> Census {
    let hupd = store.full(Dataset::Hupd);
    let fi = hupd.column_index("filing_date").expect("schema column");
    let mut years = BTreeSet::new();
    let mut held_out = Vec::new();
    for (i, row) in hupd.rows().iter().enumerate() {
        if let Value::Date(d) = &row[fi] {
            years.insert(d.year());
            if (2013..=2018).contains(&d.year()) {
                held_out.push(i);
            }
        }
    }
    let papers = store.full(Dataset::Neurips);
    Census {
        hupd_years: years.into_iter().collect(),
        hupd_held_out: held_out,
        neurips_held_out: (NEURIPS_TRAIN_ROWS.min(papers.len())..papers.len()).collect(),
    }
}

fn text_cell(store: &TableStore, ds: Dataset, row: usize, column: &str) -> String {
    store
        .full(ds)
        .cell(row, column)
        .and_then(Value::as_text)
        .unwrap_or_default()
        .to_string()
}

/// Draws one candidate instance; `None` when the draw is not realizable.
fn draw(
    store: &TableStore,
    census: &Census,
    template: TemplateId,
    rng: &mut ChaCha8Rng,
) -> Option<(Params, Vec<usize>)> {
    use TemplateId::*;
    let years = &census.hupd_years;
    let year = |rng: &mut ChaCha8Rng| years.choose(rng).copied();
    let topic_names: Vec<&str> = TOPICS.iter().map(|(t, _)| *t).collect();
    Some(match template {
        Q1 | Q4 => {
            let a = year(rng)?;
            let b = year(rng)?;
            let (start_year, end_year) = (a.min(b), a.max(b));
            if end_year - start_year > 5 {
                return None;
            }
            (Params::YearRange { start_year, end_year }, vec![])
        }
        Q2 => {
            let scheme = if rng.gen_bool(0.5) { CategoryScheme::Cpc } else { CategoryScheme::Ipcr };
            let k = match scheme {
                CategoryScheme::Cpc => rng.gen_range(2..=5),
                CategoryScheme::Ipcr => rng.gen_range(2..=8),
            };
            (Params::TopCategories { k, scheme, year: year(rng)? }, vec![])
        }
        Q3 => {
            let a = year(rng)?;
            let b = year(rng)?;
            if a == b {
                return None;
            }
            (Params::YearRatio { year1: a, year2: b }, vec![])
        }
        Q5 => (
            Params::TopAuthors {
                k: rng.gen_range(2..=6),
                llm_only: rng.gen_bool(0.5),
            },
            vec![],
        ),
        Q6 => (
            Params::AuthorCount {
                compare: *Compare::ALL.choose(rng)?,
                n: rng.gen_range(1..=12),
            },
            vec![],
        ),
        Q7 => (
            Params::Monthly {
                start_year: rng.gen_range(2004..=2010),
                n: rng.gen_range(2..=12),
            },
            vec![],
        ),
        Q8 => {
            let row = *census.hupd_held_out.choose(rng)?;
            (
                Params::Abstract {
                    text: text_cell(store, Dataset::Hupd, row, "abstract"),
                },
                vec![row],
            )
        }
        Q10 => {
            let row = *census.neurips_held_out.choose(rng)?;
            (
                Params::Abstract {
                    text: text_cell(store, Dataset::Neurips, row, "abstract"),
                },
                vec![row],
            )
        }
        Q9 => {
            let row = *census.neurips_held_out.choose(rng)?;
            let truth = text_cell(store, Dataset::Neurips, row, "topic");
            let topic = if rng.gen_bool(0.5) {
                truth
            } else {
                let others: Vec<&&str> = topic_names.iter().filter(|t| **t != truth).collect();
                others.choose(rng)?.to_string()
            };
            (
                Params::TitleTopic {
                    title: text_cell(store, Dataset::Neurips, row, "title"),
                    topic,
                },
                vec![row],
            )
        }
        Q11 => {
            let a = *census.hupd_held_out.choose(rng)?;
            let cat = text_cell(store, Dataset::Hupd, a, "cpc_category");
            let want_same = rng.gen_bool(0.5);
            let pool: Vec<usize> = census
                .hupd_held_out
                .iter()
                .copied()
                .filter(|&r| r != a && (text_cell(store, Dataset::Hupd, r, "cpc_category") == cat) == want_same)
                .collect();
            let b = *pool.choose(rng)?;
            (
                Params::TitlePair {
                    title1: text_cell(store, Dataset::Hupd, a, "title"),
                    title2: text_cell(store, Dataset::Hupd, b, "title"),
                },
                vec![a, b],
            )
        }
        Q12 => {
            let a = *census.neurips_held_out.choose(rng)?;
            let b = if rng.gen_bool(0.5) {
                a
            } else {
                let pool: Vec<usize> = census.neurips_held_out.iter().copied().filter(|&r| r != a).collect();
                *pool.choose(rng)?
            };
            (
                Params::AbstractTitle {
                    abstract_text: text_cell(store, Dataset::Neurips, a, "abstract"),
                    title: text_cell(store, Dataset::Neurips, b, "title"),
                },
                vec![a, b],
            )
        }
        Q13 => {
            let row = *census.neurips_held_out.choose(rng)?;
            let truth = text_cell(store, Dataset::Neurips, row, "topic");
            let others: Vec<&str> = topic_names.iter().copied().filter(|t| *t != truth).collect();
            let mut options: Vec<String> = others.choose_multiple(rng, 2).map(|s| s.to_string()).collect();
            options.push(truth);
            options.shuffle(rng);
            (
                Params::TopicChoice {
                    title: text_cell(store, Dataset::Neurips, row, "title"),
                    options,
                },
                vec![row],
            )
        }
    })
}

/// Extra realizability checks that need the ground truth: a unique top-k
/// boundary for ranking templates, a non-degenerate series for Q7.
fn realizable(inst: &QuestionInstance, truth: &Truth, store: &TableStore) -> bool {
    match (&inst.params, truth) {
        (Params::TopCategories { .. } | Params::TopAuthors { .. }, _) => {
            super::truth::top_k_boundary_is_strict(inst, store).unwrap_or(false)
        }
        (Params::YearRatio { .. }, Truth::Number(x)) => (0.0..=1.0).contains(x),
        (Params::Monthly { .. }, Truth::Series(s)) => s.iter().any(|v| (v - s[0]).abs() > 1e-12),
        _ => true,
    }
}

/// Generates `count` realizable instances of `template`, deterministically
/// in `seed`.
pub fn instantiate(
    store: &TableStore,
    template: TemplateId,
    count: usize,
    seed: u64,
) -> Result<Vec<QuestionInstance>, BenchError> {
    let census = census(store);
    let mut rng = template_rng(seed, template);
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let mut found = None;
        for _ in 0..MAX_DRAWS {
            let Some((mut params, rows)) = draw(store, &census, template, &mut rng) else { continue };
            // Q3 asks for a proportion, so the smaller year goes on top.
            if let Params::YearRatio { year1, year2 } = &mut params {
                let c1 = super::truth::filings_in_year(store, *year1);
                let c2 = super::truth::filings_in_year(store, *year2);
                if c1 == 0 || c2 == 0 {
                    continue;
                }
                if c1 > c2 {
                    std::mem::swap(year1, year2);
                }
            }
            let mut inst = QuestionInstance::new(format!("{template}-{i:03}"), template, params)?;
            inst.source_rows = rows;
            match ground_truth(&inst, store) {
                Ok(t) if realizable(&inst, &t, store) => {
                    found = Some(inst);
                    break;
                }
                _ => continue,
            }
        }
        match found {
            Some(inst) => out.push(inst),
            None => {
                return Err(BenchError::InsufficientData(format!(
                    "{template}: no realizable parameters after {MAX_DRAWS} draws"
                )))
            }
        }
    }
    Ok(out)
}
