use std::sync::OnceLock;

use chrono::{Datelike, NaiveDate};
use lit_core::table::{
    apply_subset, generate_fixtures, generate_tables, load, train_split, Dataset, FixtureConfig, SubsetSpec, Table,
    TableError,
};
use lit_core::value::Value;
use proptest::prelude::*;

fn small() -> FixtureConfig {
    FixtureConfig {
        seed: 5,
        n_patents: 1500,
        n_papers: 3200,
    }
}

fn tables() -> &'static (Table, Table) {
    static T: OnceLock<(Table, Table)> = OnceLock::new();
    T.get_or_init(|| {
        let (h, n, _) = generate_tables(small()).unwrap();
        (h, n)
    })
}

fn filing_year(t: &Table, row: &[Value]) -> i32 {
    match &row[t.column_index("filing_date").unwrap()] {
        Value::Date(d) => d.year(),
        other => panic!("filing date {other:?}"),
    }
}

/// True when `sub` appears in `full` in order.
fn is_subsequence(sub: &[Vec<Value>], full: &[Vec<Value>]) -> bool {
    let mut it = full.iter();
    sub.iter().all(|r| it.any(|f| f == r))
}

#[test]
fn files_round_trip_through_the_loader() {
    let dir = tempfile::tempdir().unwrap();
    let summary = generate_fixtures(small(), dir.path()).unwrap();
    let (h, n) = tables();
    let papers = load(dir.path(), "neurips", SubsetSpec::All).unwrap();
    assert_eq!(papers.columns(), Dataset::Neurips.schema().as_slice());
    assert_eq!(papers.len(), summary.neurips_rows);
    assert_eq!(&papers, n);
    assert_eq!(&load(dir.path(), "hupd", SubsetSpec::All).unwrap(), h);
}

#[test]
fn same_seed_writes_identical_files() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    generate_fixtures(small(), a.path()).unwrap();
    generate_fixtures(small(), b.path()).unwrap();
    for ds in Dataset::ALL {
        let fa = std::fs::read(a.path().join(ds.file_name())).unwrap();
        let fb = std::fs::read(b.path().join(ds.file_name())).unwrap();
        assert!(fa == fb, "{ds} differs");
    }
}

#[test]
fn default_fixture_sizes_and_splits() {
    let (h, n, _) = generate_tables(FixtureConfig::default()).unwrap();
    assert_eq!(n.len(), 3590);
    let (train, test) = train_split(&n, Dataset::Neurips);
    assert_eq!((train.len(), test.len()), (3000, 590));
    let (train, test) = train_split(&h, Dataset::Hupd);
    assert!(train.rows().iter().all(|r| (2004..=2012).contains(&filing_year(&train, r))));
    assert!(test.rows().iter().all(|r| (2013..=2018).contains(&filing_year(&test, r))));
    assert!(!test.is_empty());
}

#[test]
fn bad_subsets_and_sizes() {
    let (h, _) = tables();
    assert!(matches!(
        apply_subset(h, Dataset::Hupd, SubsetSpec::RowRange { start: 10, end: 5 }),
        Err(TableError::SubsetOutOfRange(_))
    ));
    let zero = FixtureConfig {
        n_patents: 0,
        ..small()
    };
    assert!(generate_tables(zero).is_err());
}

#[test]
fn empty_year_is_an_empty_table() {
    let (h, _) = tables();
    let date = |y| Value::Date(NaiveDate::from_ymd_opt(y, 3, 1).unwrap());
    let col = h.column_index("filing_date").unwrap();
    let rows: Vec<Vec<Value>> = h
        .rows()
        .iter()
        .filter(|r| filing_year(h, r) != 2015)
        .take(50)
        .cloned()
        .map(|mut r| {
            r[col] = date(2010);
            r
        })
        .collect();
    let no_2015 = Table::new("hupd", Dataset::Hupd.schema(), rows).unwrap();
    let t = apply_subset(&no_2015, Dataset::Hupd, SubsetSpec::YearRange { start: 2015, end: 2015 }).unwrap();
    assert!(t.is_empty());
    assert_eq!(t.columns(), no_2015.columns());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn year_range_matches_a_row_scan(start in 2000i32..2020, len in 0i32..8) {
        let (h, _) = tables();
        let end = start + len;
        let got = apply_subset(h, Dataset::Hupd, SubsetSpec::YearRange { start, end }).unwrap();
        let want: Vec<Vec<Value>> = h
            .rows()
            .iter()
            .filter(|r| (start..=end).contains(&filing_year(h, r)))
            .cloned()
            .collect();
        prop_assert_eq!(got.rows(), want.as_slice());
    }

    #[test]
    fn subsets_are_subsequences(a in 0usize..1500, b in 0usize..1500, y in 2004i32..2019) {
        let (h, _) = tables();
        let (start, end) = (a.min(b), a.max(b));
        let rows = apply_subset(h, Dataset::Hupd, SubsetSpec::RowRange { start, end }).unwrap();
        prop_assert_eq!(rows.len(), end - start + 1);
        prop_assert!(is_subsequence(rows.rows(), h.rows()));
        let years = apply_subset(h, Dataset::Hupd, SubsetSpec::YearRange { start: y, end: y + 1 }).unwrap();
        prop_assert!(is_subsequence(years.rows(), h.rows()));
    }
}
