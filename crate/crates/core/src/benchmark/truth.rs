//! Ground truth by direct row scans over the full tables. Nothing here goes
//! through the script interpreter or the executor.

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use super::templates::{Params, QuestionInstance, TemplateId};
use super::BenchError;
use crate::table::{Dataset, Table, TableStore};
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Truth {
    Number(f64),
    /// Ranked list; scored by overlap.
    List(Vec<String>),
    /// Any one of these answers is correct.
    OneOf(Vec<String>),
    Series(Vec<f64>),
    Label(String),
}

fn insufficient(inst: &QuestionInstance, why: &str) -> BenchError {
    BenchError::InsufficientData(format!("{}: {why}", inst.template))
}

fn idx(t: &Table, name: &str) -> usize {
    t.column_index(name)
        .unwrap_or_else(|| panic!("table `{}` lacks schema column `{name}`", t.name()))
}

fn date(v: &Value) -> Option<NaiveDate> {
    match v {
        Value::Date(d) => Some(*d),
        _ => None,
    }
}

fn text(v: &Value) -> &str {
    match v {
        Value::Text(s) => s,
        _ => "",
    }
}

pub(crate) fn filings_in_year(store: &TableStore, year: i32) -> usize {
    let t = store.full(Dataset::Hupd);
    let fi = idx(t, "filing_date");
    t.rows()
        .iter()
        .filter(|r| date(&r[fi]).map(|d| d.year()) == Some(year))
        .count()
}

/// Counts keys in first-appearance order, then ranks by count descending.
/// The sort is stable, so equal counts keep first-appearance order.
fn rank<'a>(keys: impl Iterator<Item = &'a str>) -> Vec<(String, usize)> {
    let mut counts: Vec<(String, usize)> = Vec::new();
    for k in keys {
        match counts.iter_mut().find(|(name, _)| name == k) {
            Some((_, c)) => *c += 1,
            None => counts.push((k.to_string(), 1)),
        }
    }
    counts.sort_by(|a, b| b.1.cmp(&a.1));
    counts
}

fn ranking(inst: &QuestionInstance, store: &TableStore) -> Option<(usize, Vec<(String, usize)>)> {
    match &inst.params {
        Params::TopCategories { k, scheme, year } => {
            let t = store.full(Dataset::Hupd);
            let (fi, di, ci) = (idx(t, "filing_date"), idx(t, "decision"), idx(t, scheme.column()));
            let keys = t.rows().iter().filter_map(|r| {
                let in_year = date(&r[fi]).map(|d| d.year()) == Some(*year);
                (in_year && text(&r[di]) == "ACCEPTED").then(|| text(&r[ci]))
            });
            Some((*k, rank(keys)))
        }
        Params::TopAuthors { k, llm_only } => {
            let t = store.full(Dataset::Neurips);
            let (ti, ai) = (idx(t, "title"), idx(t, "authors"));
            let mut names: Vec<&str> = Vec::new();
            for r in t.rows() {
                if *llm_only && !text(&r[ti]).contains("Large Language Models") {
                    continue;
                }
                if let Value::List(items) = &r[ai] {
                    names.extend(items.iter().map(text));
                }
            }
            Some((*k, rank(names.into_iter())))
        }
        _ => None,
    }
}

/// True when the k-th and (k+1)-th ranked keys have different counts, so
/// the top-k set does not depend on tie-breaking.
pub(crate) fn top_k_boundary_is_strict(inst: &QuestionInstance, store: &TableStore) -> Option<bool> {
    let (k, ranked) = ranking(inst, store)?;
    if ranked.len() < k || k == 0 {
        return Some(false);
    }
    Some(ranked.len() == k || ranked[k - 1].1 > ranked[k].1)
}

fn source_row(inst: &QuestionInstance, i: usize) -> Result<usize, BenchError> {
    inst.source_rows
        .get(i)
        .copied()
        .ok_or_else(|| insufficient(inst, "instance carries no source rows"))
}

fn cell<'a>(store: &'a TableStore, ds: Dataset, row: usize, column: &str) -> Result<&'a Value, BenchError> {
    store
        .full(ds)
        .cell(row, column)
        .ok_or_else(|| BenchError::InsufficientData(format!("row {row} missing from {ds}")))
}

/// The correct answer for `inst`, computed from the full tables.
pub fn ground_truth(inst: &QuestionInstance, store: &TableStore) -> Result<Truth, BenchError> {
    use TemplateId::*;
    let hupd = store.full(Dataset::Hupd);
    let papers = store.full(Dataset::Neurips);
    match (inst.template, &inst.params) {
        (Q1, Params::YearRange { start_year, end_year }) => {
            let (fi, ii) = (idx(hupd, "filing_date"), idx(hupd, "patent_issue_date"));
            let (mut total, mut n) = (0i64, 0i64);
            for r in hupd.rows() {
                let (Some(f), Some(i)) = (date(&r[fi]), date(&r[ii])) else { continue };
                if (*start_year..=*end_year).contains(&f.year()) {
                    total += (i - f).num_days();
                    n += 1;
                }
            }
            if n == 0 {
                return Err(insufficient(inst, "no issued patents in range"));
            }
            // Integer division truncates toward zero.
            Ok(Truth::Number((total / n) as f64))
        }
        (Q2 | Q5, _) => {
            let (k, ranked) = ranking(inst, store).expect("ranking params");
            if ranked.len() < k {
                return Err(insufficient(inst, "fewer keys than requested"));
            }
            Ok(Truth::List(ranked.into_iter().take(k).map(|(s, _)| s).collect()))
        }
        (Q3, Params::YearRatio { year1, year2 }) => {
            let (a, b) = (filings_in_year(store, *year1), filings_in_year(store, *year2));
            if b == 0 {
                return Err(insufficient(inst, "no filings in the reference year"));
            }
            Ok(Truth::Number(a as f64 / b as f64))
        }
        (Q4, Params::YearRange { start_year, end_year }) => {
            let (fi, pi, ti) = (idx(hupd, "filing_date"), idx(hupd, "date_published"), idx(hupd, "title"));
            let mut best: Option<i64> = None;
            let mut titles: Vec<String> = Vec::new();
            for r in hupd.rows() {
                let (Some(f), Some(p)) = (date(&r[fi]), date(&r[pi])) else { continue };
                if !(*start_year..=*end_year).contains(&f.year()) {
                    continue;
                }
                let gap = (p - f).num_days();
                if best.map_or(true, |b| gap > b) {
                    best = Some(gap);
                    titles.clear();
                }
                if best == Some(gap) && !titles.iter().any(|t| t == text(&r[ti])) {
                    titles.push(text(&r[ti]).to_string());
                }
            }
            if titles.is_empty() {
                return Err(insufficient(inst, "no filings in range"));
            }
            Ok(Truth::OneOf(titles))
        }
        (Q6, Params::AuthorCount { compare, n }) => {
            let ai = idx(papers, "authors");
            if papers.is_empty() {
                return Err(insufficient(inst, "no papers"));
            }
            let hits = papers
                .rows()
                .iter()
                .filter(|r| matches!(&r[ai], Value::List(l) if compare.holds(l.len(), *n)))
                .count();
            Ok(Truth::Number(hits as f64 / papers.len() as f64))
        }
        (Q7, Params::Monthly { n, .. }) => {
            let (fi, di) = (idx(hupd, "filing_date"), idx(hupd, "decision"));
            let mut acc = vec![0usize; 12];
            let mut all = vec![0usize; 12];
            for r in hupd.rows() {
                let Some(f) = date(&r[fi]) else { continue };
                if f.year() == 2013 {
                    let m = f.month0() as usize;
                    all[m] += 1;
                    acc[m] += (text(&r[di]) == "ACCEPTED") as usize;
                }
            }
            let mut out = Vec::with_capacity(*n);
            for m in 0..(*n).min(12) {
                if all[m] == 0 {
                    return Err(insufficient(inst, "a 2013 month has no filings"));
                }
                out.push(100.0 * acc[m] as f64 / all[m] as f64);
            }
            if out.len() != *n {
                return Err(insufficient(inst, "more than 12 months requested"));
            }
            Ok(Truth::Series(out))
        }
        (Q8, _) => {
            let r = source_row(inst, 0)?;
            let accepted = text(cell(store, Dataset::Hupd, r, "decision")?) == "ACCEPTED";
            Ok(Truth::Label(if accepted { "ACCEPTED" } else { "not ACCEPTED" }.into()))
        }
        (Q9, Params::TitleTopic { topic, .. }) => {
            let r = source_row(inst, 0)?;
            let actual = text(cell(store, Dataset::Neurips, r, "topic")?);
            Ok(Truth::Label(if actual == topic { topic.clone() } else { format!("not {topic}") }))
        }
        (Q10, _) => {
            let r = source_row(inst, 0)?;
            let oral = matches!(cell(store, Dataset::Neurips, r, "oral")?, Value::Bool(true));
            Ok(Truth::Label(if oral { "oral" } else { "not oral" }.into()))
        }
        (Q11, _) => {
            let (a, b) = (source_row(inst, 0)?, source_row(inst, 1)?);
            let same = cell(store, Dataset::Hupd, a, "cpc_category")? == cell(store, Dataset::Hupd, b, "cpc_category")?;
            Ok(Truth::Label(if same { "Yes" } else { "No" }.into()))
        }
        (Q12, _) => {
            let (a, b) = (source_row(inst, 0)?, source_row(inst, 1)?);
            Ok(Truth::Label(if a == b { "Yes" } else { "No" }.into()))
        }
        (Q13, _) => {
            let r = source_row(inst, 0)?;
            Ok(Truth::Label(text(cell(store, Dataset::Neurips, r, "topic")?).to_string()))
        }
        (t, p) => Err(BenchError::InvalidParams(format!("{t} cannot take parameters {p:?}"))),
    }
}
