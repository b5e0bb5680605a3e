use std::sync::{Arc, OnceLock};

use chrono::{Duration, NaiveDate};
use lit_core::benchmark::{
    aggregate, bootstrap_f1, evaluate_instance, ground_truth, instantiate, membership, r2, set_overlap,
    threshold_match, welch_t_one_sided, Compare, Condition, Difficulty, Params, QuestionInstance, RunRecord,
    TemplateId, Truth, BOOTSTRAP_ITERATIONS,
};
use lit_core::executor::{OfflineInferencer, Toolbox};
use lit_core::planner::ScriptedPlanner;
use lit_core::table::{generate_tables, Dataset, FixtureConfig, Table, TableStore};
use lit_core::value::Value;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn toolbox() -> &'static Arc<Toolbox> {
    static TB: OnceLock<Arc<Toolbox>> = OnceLock::new();
    TB.get_or_init(|| {
        let (h, n, _) = generate_tables(FixtureConfig::default()).unwrap();
        Arc::new(Toolbox::new(Arc::new(TableStore::from_tables(h, n)), Arc::new(OfflineInferencer)))
    })
}

fn default_store() -> &'static TableStore {
    &toolbox().store
}

fn day(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

/// A patents table with one row per (filing date, days until issue).
fn patents(rows: &[(NaiveDate, Option<i64>)]) -> Table {
    let data = rows
        .iter()
        .enumerate()
        .map(|(i, (filed, issue))| {
            vec![
                issue.map_or(Value::Null, |_| Value::text(format!("US{i}"))),
                Value::text(format!("Patent {i}")),
                Value::text(if issue.is_some() { "ACCEPTED" } else { "PENDING" }),
                Value::Date(*filed),
                issue.map_or(Value::Null, |d| Value::Date(*filed + Duration::days(d))),
                Value::Date(*filed + Duration::days(30)),
                Value::text("G06F"),
                Value::text("G06F"),
                Value::text("An abstract."),
                Value::text("Boston"),
            ]
        })
        .collect();
    Table::new("hupd", Dataset::Hupd.schema(), data).unwrap()
}

fn small_papers() -> Table {
    generate_tables(FixtureConfig {
        seed: 1,
        n_patents: 10,
        n_papers: 40,
    })
    .unwrap()
    .1
}

fn number(inst: &QuestionInstance, store: &TableStore) -> f64 {
    match ground_truth(inst, store).unwrap() {
        Truth::Number(x) => x,
        other => panic!("{other:?}"),
    }
}

#[test]
fn instantiation_counts_and_text() {
    let store = default_store();
    let mut total = 0;
    for t in TemplateId::ALL {
        let a = instantiate(store, t, 100, 5).unwrap();
        assert_eq!(a.len(), 100, "{t}");
        if t == TemplateId::Q3 {
            assert!(a[0].text.starts_with("How does the number of patent applications filed in "));
        }
        total += a.len();
    }
    assert_eq!(total, 1300);
    assert!(instantiate(store, TemplateId::Q1, 0, 5).unwrap().is_empty());
    assert_eq!(
        instantiate(store, TemplateId::Q9, 20, 8).unwrap(),
        instantiate(store, TemplateId::Q9, 20, 8).unwrap()
    );
}

#[test]
fn ground_truth_examples() {
    let filed = day(2012, 3, 1);
    let store = TableStore::from_tables(
        patents(&[(filed, Some(100)), (filed, Some(200)), (filed, Some(301)), (day(2013, 1, 1), None)]),
        small_papers(),
    );
    let q1 = QuestionInstance::new("a", TemplateId::Q1, Params::YearRange { start_year: 2012, end_year: 2012 }).unwrap();
    assert_eq!(number(&q1, &store), 200.0);

    let mut rows: Vec<(NaiveDate, Option<i64>)> = (0..120).map(|i| (day(2010, 1 + i % 12, 5), None)).collect();
    rows.extend((0..240).map(|i| (day(2011, 1 + i % 12, 5), Some(400))));
    let store = TableStore::from_tables(patents(&rows), small_papers());
    let q3 = QuestionInstance::new("b", TemplateId::Q3, Params::YearRatio { year1: 2010, year2: 2011 }).unwrap();
    assert_eq!(number(&q3, &store), 0.5);

    let q6 = QuestionInstance::new(
        "c",
        TemplateId::Q6,
        Params::AuthorCount {
            compare: Compare::MoreThan,
            n: 10_000,
        },
    )
    .unwrap();
    assert_eq!(number(&q6, &store), 0.0);
}

#[test]
fn metric_examples() {
    assert_eq!(threshold_match(201.0, 200.0), 1.0);
    assert_eq!(threshold_match(201.5, 200.0), 0.0);
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    assert!((set_overlap(&s(&["a", "c", "e", "z", "a"]), &s(&["a", "b", "c", "d", "e"])) - 0.6).abs() < 1e-12);
    assert_eq!(membership("x", &s(&["y", "x"])), 1.0);
    assert!((r2(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap() - 11.0 / 14.0).abs() < 1e-15);
}

/// Sample mean and variance, then t and Welch-Satterthwaite df by hand.
fn welch_by_hand(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mv = |x: &[f64]| {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        (m, x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0), n)
    };
    let ((ma, va, na), (mb, vb, nb)) = (mv(a), mv(b));
    let se2 = va / na + vb / nb;
    let df = se2 * se2 / ((va / na).powi(2) / (na - 1.0) + (vb / nb).powi(2) / (nb - 1.0));
    ((ma - mb) / se2.sqrt(), df)
}

#[test]
fn welch_reference_values() {
    let cases = [
        (
            [19.1, 21.0, 20.4, 18.7, 20.9],
            [22.3, 21.8, 23.9, 22.0, 24.1],
            -4.115867224264986,
            0.0016859734976828235,
        ),
        (
            [27.5, 21.0, 19.0, 23.6, 17.0],
            [27.1, 22.0, 20.8, 23.4, 23.4],
            -0.813168331778168,
            0.22265075410460106,
        ),
    ];
    for (a, b, t, p) in cases {
        let w = welch_t_one_sided(&a, &b).unwrap();
        let (ht, hdf) = welch_by_hand(&a, &b);
        assert!((w.t - t).abs() < 1e-6 && (w.t - ht).abs() < 1e-12, "t {}", w.t);
        assert!((w.df - hdf).abs() < 1e-9);
        assert!((w.p_value - p).abs() < 1e-6, "p {}", w.p_value);
    }
    assert!(welch_t_one_sided(&[2.0, 2.0], &[3.0, 3.0]).is_err());
}

/// Resampling reimplemented from the contract: `gen_range(0..n)` draws from
/// a seeded ChaCha8, undefined F1 counts as 0.
fn bootstrap_reference(pairs: &[(bool, bool)], iterations: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = pairs.len();
    let mut total = 0.0;
    for _ in 0..iterations {
        let (mut tp, mut fp, mut fneg) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            match pairs[rng.gen_range(0..n)] {
                (true, true) => tp += 1.0,
                (true, false) => fp += 1.0,
                (false, true) => fneg += 1.0,
                _ => {}
            }
        }
        if tp + fp > 0.0 && tp + fneg > 0.0 {
            total += 2.0 * tp / (2.0 * tp + fp + fneg);
        }
    }
    total / iterations as f64
}

#[test]
fn bootstrap_matches_reference_bit_for_bit() {
    let pairs = [
        (true, true),
        (true, false),
        (false, true),
        (true, true),
        (false, false),
        (false, false),
        (true, true),
        (false, true),
        (false, false),
        (true, false),
    ];
    let got = bootstrap_f1(&pairs, BOOTSTRAP_ITERATIONS, 7).unwrap();
    let want = bootstrap_reference(&pairs, BOOTSTRAP_ITERATIONS, 7);
    assert_eq!(got.to_bits(), want.to_bits(), "{got} vs {want}");
    assert_eq!(bootstrap_f1(&pairs, BOOTSTRAP_ITERATIONS, 7).unwrap().to_bits(), got.to_bits());
}

fn records(templates: &[TemplateId], count: usize) -> Vec<RunRecord> {
    let tb = toolbox();
    let mut out = Vec::new();
    for t in templates {
        for inst in instantiate(&tb.store, *t, count, 11).unwrap() {
            for c in Condition::ALL {
                out.push(evaluate_instance(&inst, c, &ScriptedPlanner::default(), tb));
            }
        }
    }
    out
}

#[test]
fn aggregation_structure() {
    use TemplateId::*;
    let recs = records(&[Q1, Q3, Q6, Q8], 6);
    let report = aggregate(&recs, 3).unwrap();
    let lit = &report.conditions[&Condition::Lit];
    assert!(!lit.templates.contains_key(&Q7));
    let easy: Vec<f64> = [Q1, Q3, Q6].iter().map(|t| lit.templates[t].mean_performance.unwrap()).collect();
    let tier = lit.tiers[&Difficulty::Easy].mean_performance.unwrap();
    assert!((tier - easy.iter().sum::<f64>() / 3.0).abs() < 1e-12);
    assert_eq!(lit.tiers[&Difficulty::Medium].templates, 1);
    assert!(!lit.tiers.contains_key(&Difficulty::Hard));
    assert!(report.tier_comparisons.contains_key(&Difficulty::Easy));

    let single: Vec<RunRecord> = recs.iter().filter(|r| r.condition == Condition::Lit).cloned().collect();
    let r = aggregate(&single, 3).unwrap();
    assert!(r.template_comparisons.is_empty() && r.tier_comparisons.is_empty());
    assert!(aggregate(&[], 3).is_err());

    let mut shuffled = recs.clone();
    shuffled.reverse();
    assert_eq!(aggregate(&shuffled, 3).unwrap(), report);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn scores_stay_in_the_unit_interval(t in 1usize..=13, seed in any::<u64>()) {
        let template = TemplateId::from_number(t).unwrap();
        let tb = toolbox();
        let insts = instantiate(&tb.store, template, 1, seed).unwrap();
        for c in Condition::ALL {
            let rec = evaluate_instance(&insts[0], c, &ScriptedPlanner::default(), tb);
            let s = rec.score.unwrap();
            if template != TemplateId::Q7 {
                prop_assert!((0.0..=1.0).contains(&s.performance), "{}", s.performance);
            } else {
                prop_assert!(s.performance <= 1.0);
            }
        }
    }

    #[test]
    fn threshold_match_is_symmetric_in_sign(a in -1e6f64..1e6, t in -1e6f64..1e6) {
        prop_assert_eq!(threshold_match(a, t), threshold_match(-a, -t));
        prop_assert!(threshold_match(t, t) == 1.0);
    }
}
