//! Aggregation of run records into per-template and per-tier tables.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::metrics::{bootstrap_f1, welch_t_one_sided, BOOTSTRAP_ITERATIONS};
use super::run::{Condition, RunRecord};
use super::templates::{Difficulty, TemplateId};
use super::BenchError;

/// Instances per bootstrap batch for the F1-scored templates.
pub const F1_BATCH: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateCell {
    pub instances: usize,
    pub mean_cost: f64,
    /// Absent when no value could be computed (e.g. every F1 batch had a
    /// single true class).
    pub mean_performance: Option<f64>,
    /// Instances whose answer could not be scored normally.
    pub flagged: usize,
    /// Values the mean is taken over: per-instance scores, or per-batch F1.
    pub performance_samples: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TierCell {
    pub templates: usize,
    pub mean_cost: Option<f64>,
    pub mean_performance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub templates: BTreeMap<TemplateId, TemplateCell>,
    pub tiers: BTreeMap<Difficulty, TierCell>,
}

/// One-sided p-values: cost tests lit < baseline, performance tests
/// baseline < lit. Absent when the test is undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub cost_p: Option<f64>,
    pub performance_p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceLine {
    pub id: String,
    pub condition: Condition,
    pub cost: f64,
    pub performance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag: Option<String>,
    pub trace: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub seed: u64,
    pub conditions: BTreeMap<Condition, ConditionReport>,
    pub template_comparisons: BTreeMap<TemplateId, Comparison>,
    pub tier_comparisons: BTreeMap<Difficulty, Comparison>,
    pub instances: Vec<InstanceLine>,
}

/// Relative path of a record's trace file inside a bench output directory.
pub fn trace_path(condition: Condition, id: &str) -> String {
    format!("traces/{condition}/{id}.json")
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

fn batch_seed(seed: u64, template: TemplateId, batch: usize) -> u64 {
    seed ^ ((template.number() as u64) << 40) ^ (batch as u64).wrapping_mul(0x2545_f491_4f6c_dd1d)
}

struct Group<'a> {
    records: Vec<&'a RunRecord>,
}

fn cell(template: TemplateId, g: &Group<'_>, seed: u64) -> TemplateCell {
    let costs: Vec<f64> = g.records.iter().map(|r| r.cost).collect();
    let scores: Vec<_> = g.records.iter().filter_map(|r| r.score.as_ref()).collect();
    let samples: Vec<f64> = if template.is_binary() {
        let pairs: Vec<(bool, bool)> = scores.iter().filter_map(|s| s.pair).collect();
        pairs
            .chunks(F1_BATCH)
            .enumerate()
            .filter_map(|(b, chunk)| bootstrap_f1(chunk, BOOTSTRAP_ITERATIONS, batch_seed(seed, template, b)).ok())
            .collect()
    } else {
        // R^2 may be negative per instance; clamp only here.
        scores.iter().map(|s| s.performance.clamp(0.0, 1.0)).collect()
    };
    TemplateCell {
        instances: g.records.len(),
        mean_cost: mean(&costs).unwrap_or(0.0),
        mean_performance: mean(&samples),
        flagged: scores.iter().filter(|s| s.flag.is_some()).count(),
        performance_samples: samples,
    }
}

fn p_value(a: &[f64], b: &[f64]) -> Option<f64> {
    welch_t_one_sided(a, b).ok().map(|w| w.p_value)
}

/// Builds the report. Records are grouped by condition and template in id
/// order, so the result does not depend on the order they arrive in.
pub fn aggregate(records: &[RunRecord], seed: u64) -> Result<ScoreReport, BenchError> {
    if records.is_empty() {
        return Err(BenchError::EmptyCondition("no records".into()));
    }
    let mut sorted: Vec<&RunRecord> = records.iter().collect();
    sorted.sort_by(|a, b| (a.condition, a.template, &a.id).cmp(&(b.condition, b.template, &b.id)));

    let mut groups: BTreeMap<Condition, BTreeMap<TemplateId, Group>> = BTreeMap::new();
    for r in &sorted {
        groups
            .entry(r.condition)
            .or_default()
            .entry(r.template)
            .or_insert_with(|| Group { records: Vec::new() })
            .records
            .push(r);
    }

    let mut conditions = BTreeMap::new();
    for (cond, by_template) in &groups {
        let templates: BTreeMap<TemplateId, TemplateCell> =
            by_template.iter().map(|(t, g)| (*t, cell(*t, g, seed))).collect();
        let mut tiers = BTreeMap::new();
        for tier in Difficulty::ALL {
            let in_tier: Vec<&TemplateCell> = templates
                .iter()
                .filter(|(t, _)| t.difficulty() == tier)
                .map(|(_, c)| c)
                .collect();
            if in_tier.is_empty() {
                continue;
            }
            let costs: Vec<f64> = in_tier.iter().map(|c| c.mean_cost).collect();
            let perfs: Vec<f64> = in_tier.iter().filter_map(|c| c.mean_performance).collect();
            tiers.insert(
                tier,
                TierCell {
                    templates: in_tier.len(),
                    mean_cost: mean(&costs),
                    mean_performance: mean(&perfs),
                },
            );
        }
        conditions.insert(*cond, ConditionReport { templates, tiers });
    }

    let mut template_comparisons = BTreeMap::new();
    let mut tier_comparisons = BTreeMap::new();
    if let (Some(lit), Some(base)) = (groups.get(&Condition::Lit), groups.get(&Condition::Baseline)) {
        let costs = |g: &Group| g.records.iter().map(|r| r.cost).collect::<Vec<f64>>();
        let lit_cells = &conditions[&Condition::Lit].templates;
        let base_cells = &conditions[&Condition::Baseline].templates;
        let mut pooled: BTreeMap<Difficulty, [Vec<f64>; 4]> = BTreeMap::new();
        for (t, lg) in lit {
            let Some(bg) = base.get(t) else { continue };
            let (lc, bc) = (costs(lg), costs(bg));
            let (lp, bp) = (&lit_cells[t].performance_samples, &base_cells[t].performance_samples);
            template_comparisons.insert(
                *t,
                Comparison {
                    cost_p: p_value(&lc, &bc),
                    performance_p: p_value(bp, lp),
                },
            );
            let acc = pooled.entry(t.difficulty()).or_default();
            acc[0].extend(lc);
            acc[1].extend(bc);
            acc[2].extend(lp);
            acc[3].extend(bp);
        }
        for (tier, [lc, bc, lp, bp]) in pooled {
            tier_comparisons.insert(
                tier,
                Comparison {
                    cost_p: p_value(&lc, &bc),
                    performance_p: p_value(&bp, &lp),
                },
            );
        }
    }

    let instances = sorted
        .iter()
        .map(|r| InstanceLine {
            id: r.id.clone(),
            condition: r.condition,
            cost: r.cost,
            performance: r.score.as_ref().map_or(0.0, |s| s.performance),
            flag: r
                .score
                .as_ref()
                .and_then(|s| s.flag.clone())
                .or_else(|| r.score.is_none().then(|| "no ground truth".to_string())),
            trace: trace_path(r.condition, &r.id),
        })
        .collect();

    Ok(ScoreReport {
        seed,
        conditions,
        template_comparisons,
        tier_comparisons,
        instances,
    })
}

fn num(v: Option<f64>) -> String {
    match v {
        Some(x) if x != 0.0 && x.abs() < 1e-3 => format!("{x:.1e}"),
        Some(x) => format!("{x:.3}"),
        None => "NA".into(),
    }
}

/// Plain-text table: one column per template and tier, rows for each
/// condition's cost and performance, then p-values.
pub fn render_text(report: &ScoreReport) -> String {
    let templates: Vec<TemplateId> = {
        let mut ts: Vec<TemplateId> = report
            .conditions
            .values()
            .flat_map(|c| c.templates.keys().copied())
            .collect();
        ts.sort();
        ts.dedup();
        ts
    };
    let tiers: Vec<Difficulty> = Difficulty::ALL
        .into_iter()
        .filter(|d| report.conditions.values().any(|c| c.tiers.contains_key(d)))
        .collect();
    let mut header = vec![String::new()];
    header.extend(templates.iter().map(|t| t.to_string()));
    header.extend(tiers.iter().map(|d| d.as_str().to_string()));
    let mut rows = vec![header];
    for (cond, c) in &report.conditions {
        for (label, pick) in [("cost", 0), ("performance", 1)] {
            let mut row = vec![format!("{cond} {label}")];
            for t in &templates {
                row.push(num(c.templates.get(t).and_then(|x| {
                    if pick == 0 {
                        Some(x.mean_cost)
                    } else {
                        x.mean_performance
                    }
                })));
            }
            for d in &tiers {
                row.push(num(c.tiers.get(d).and_then(|x| if pick == 0 { x.mean_cost } else { x.mean_performance })));
            }
            rows.push(row);
        }
    }
    if !report.template_comparisons.is_empty() {
        for (label, pick) in [("p cost", 0), ("p performance", 1)] {
            let mut row = vec![label.to_string()];
            let get = |c: &Comparison| if pick == 0 { c.cost_p } else { c.performance_p };
            for t in &templates {
                row.push(num(report.template_comparisons.get(t).and_then(get)));
            }
            for d in &tiers {
                row.push(num(report.tier_comparisons.get(d).and_then(get)));
            }
            rows.push(row);
        }
    }
    let widths: Vec<usize> = (0..rows[0].len())
        .map(|i| rows.iter().map(|r| r[i].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in rows {
        let cells: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(i, c)| if i == 0 { format!("{c:<w$}", w = widths[i]) } else { format!("{c:>w$}", w = widths[i]) })
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}
