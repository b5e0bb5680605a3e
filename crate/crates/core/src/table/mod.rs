//! Immutable in-memory tables, the two fixed dataset schemas, and the
//! dataset loader with optional year/row subsetting.
//!
//! Datasets live on disk as UTF-8 JSON-lines, one object per row, keyed by
//! column name. Dates are ISO-8601 (`YYYY-MM-DD`) strings and are parsed to
//! dates at load time.

mod fixtures;

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value as Json};
use thiserror::Error;

use crate::value::Value;

pub use fixtures::{generate_fixtures, generate_tables, FixtureConfig, FixtureSummary, ORAL_WORDS, TOPICS};

#[derive(Debug, Error)]
pub enum TableError {
    #[error("unknown database `{0}` (expected `hupd` or `neurips`)")]
    UnknownDatabase(String),
    #[error("subset out of range: {0}")]
    SubsetOutOfRange(String),
    #[error("corrupt file {path}, line {line}: {message}")]
    CorruptFile {
        path: String,
        line: usize,
        message: String,
    },
    #[error("invalid table: {0}")]
    InvalidTable(String),
    #[error("invalid fixture request: {0}")]
    InvalidFixture(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> TableError + '_ {
    move |source| TableError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ColumnType {
    Number,
    Text,
    Boolean,
    Date,
    TextList,
}

impl ColumnType {
    pub fn admits(self, v: &Value) -> bool {
        match (self, v) {
            (ColumnType::Number, Value::Number(_)) => true,
            (ColumnType::Text, Value::Text(_)) => true,
            (ColumnType::Boolean, Value::Bool(_)) => true,
            (ColumnType::Date, Value::Date(_)) => true,
            (ColumnType::TextList, Value::List(items)) => {
                items.iter().all(|i| matches!(i, Value::Text(_)))
            }
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub ty: ColumnType,
    pub nullable: bool,
}

impl Column {
    pub fn new(name: &str, ty: ColumnType) -> Column {
        Column {
            name: name.to_string(),
            ty,
            nullable: false,
        }
    }

    pub fn nullable(name: &str, ty: ColumnType) -> Column {
        Column {
            name: name.to_string(),
            ty,
            nullable: true,
        }
    }
}

/// A named, typed, row-major table. Immutable once constructed.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    name: String,
    columns: Vec<Column>,
    rows: Vec<Vec<Value>>,
}

impl Table {
    /// Builds a table, checking column-name uniqueness, row arity, cell
    /// types and nullability.
    pub fn new(
        name: impl Into<String>,
        columns: Vec<Column>,
        rows: Vec<Vec<Value>>,
    ) -> Result<Table, TableError> {
        for (i, c) in columns.iter().enumerate() {
            if columns[..i].iter().any(|o| o.name == c.name) {
                return Err(TableError::InvalidTable(format!(
                    "duplicate column `{}`",
                    c.name
                )));
            }
        }
        for (r, row) in rows.iter().enumerate() {
            if row.len() != columns.len() {
                return Err(TableError::InvalidTable(format!(
                    "row {r} has {} cells, expected {}",
                    row.len(),
                    columns.len()
                )));
            }
            for (cell, col) in row.iter().zip(&columns) {
                let ok = if cell.is_null() {
                    col.nullable
                } else {
                    col.ty.admits(cell)
                };
                if !ok {
                    return Err(TableError::InvalidTable(format!(
                        "row {r}, column `{}`: {} does not fit {:?}",
                        col.name,
                        cell.kind(),
                        col.ty
                    )));
                }
            }
        }
        Ok(Table {
            name: name.into(),
            columns,
            rows,
        })
    }

    /// Same table shape with a subset of rows (indices must be valid).
    pub(crate) fn select_rows(&self, indices: impl IntoIterator<Item = usize>) -> Table {
        Table {
            name: self.name.clone(),
            columns: self.columns.clone(),
            rows: indices.into_iter().map(|i| self.rows[i].clone()).collect(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Value>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn column_values(&self, name: &str) -> Option<Vec<Value>> {
        let idx = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[idx].clone()).collect())
    }

    /// Cell by row index and column name.
    pub fn cell(&self, row: usize, column: &str) -> Option<&Value> {
        let idx = self.column_index(column)?;
        self.rows.get(row).map(|r| &r[idx])
    }

    /// Serializes rows as JSON-lines. This is the on-disk dataset format and
    /// doubles as a byte-level fingerprint of the table.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            let mut obj = Map::new();
            for (cell, col) in row.iter().zip(&self.columns) {
                obj.insert(col.name.clone(), cell_to_json(cell));
            }
            out.push_str(&Json::Object(obj).to_string());
            out.push('\n');
        }
        out
    }
}

fn cell_to_json(v: &Value) -> Json {
    match v {
        Value::Date(d) => Json::String(d.format("%Y-%m-%d").to_string()),
        other => other.to_json(),
    }
}

fn cell_from_json(j: &Json, col: &Column) -> Result<Value, String> {
    if j.is_null() {
        return if col.nullable {
            Ok(Value::Null)
        } else {
            Err(format!("column `{}` is not nullable", col.name))
        };
    }
    let bad = || format!("column `{}` expects {:?}, got {j}", col.name, col.ty);
    match col.ty {
        ColumnType::Number => match j.as_i64() {
            Some(i) => Ok(Value::int(i)),
            None => j.as_f64().map(Value::real).ok_or_else(bad),
        },
        ColumnType::Text => j.as_str().map(Value::text).ok_or_else(bad),
        ColumnType::Boolean => j.as_bool().map(Value::Bool).ok_or_else(bad),
        ColumnType::Date => {
            let s = j.as_str().ok_or_else(bad)?;
            NaiveDate::parse_from_str(s, "%Y-%m-%d")
                .map(Value::Date)
                .map_err(|e| format!("column `{}`: bad date `{s}`: {e}", col.name))
        }
        ColumnType::TextList => {
            let items = j.as_array().ok_or_else(bad)?;
            items
                .iter()
                .map(|i| i.as_str().map(Value::text).ok_or_else(bad))
                .collect::<Result<Vec<_>, _>>()
                .map(Value::List)
        }
    }
}

/// The two datasets the loader knows about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dataset {
    Hupd,
    Neurips,
}

impl Dataset {
    pub const ALL: [Dataset; 2] = [Dataset::Hupd, Dataset::Neurips];

    pub fn as_str(self) -> &'static str {
        match self {
            Dataset::Hupd => "hupd",
            Dataset::Neurips => "neurips",
        }
    }

    pub fn file_name(self) -> &'static str {
        match self {
            Dataset::Hupd => "hupd.jsonl",
            Dataset::Neurips => "neurips.jsonl",
        }
    }

    pub fn schema(self) -> Vec<Column> {
        use ColumnType::*;
        match self {
            Dataset::Hupd => vec![
                Column::nullable("patent_number", Text),
                Column::new("title", Text),
                Column::new("decision", Text),
                Column::new("filing_date", Date),
                Column::nullable("patent_issue_date", Date),
                Column::new("date_published", Date),
                Column::new("icpr_category", Text),
                Column::new("cpc_category", Text),
                Column::new("abstract", Text),
                Column::new("inventor_city", Text),
            ],
            Dataset::Neurips => vec![
                Column::new("title", Text),
                Column::new("authors", TextList),
                Column::new("abstract", Text),
                Column::new("topic", Text),
                Column::new("oral", Boolean),
            ],
        }
    }

    /// Column used by year-range subsetting, if the dataset has one.
    pub fn date_column(self) -> Option<&'static str> {
        match self {
            Dataset::Hupd => Some("filing_date"),
            Dataset::Neurips => None,
        }
    }
}

impl FromStr for Dataset {
    type Err = TableError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "hupd" => Ok(Dataset::Hupd),
            "neurips" => Ok(Dataset::Neurips),
            _ => Err(TableError::UnknownDatabase(s.to_string())),
        }
    }
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub const PATENT_DECISIONS: [&str; 3] = ["ACCEPTED", "REJECTED", "PENDING"];

/// Which rows of a dataset to keep. Bounds are inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubsetSpec {
    All,
    YearRange { start: i32, end: i32 },
    RowRange { start: usize, end: usize },
}

/// Parses a dataset file against its fixed schema.
pub fn read_dataset(path: &Path, dataset: Dataset) -> Result<Table, TableError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let schema = dataset.schema();
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let corrupt = |message: String| TableError::CorruptFile {
            path: path.display().to_string(),
            line: i + 1,
            message,
        };
        let obj: Map<String, Json> = serde_json::from_str(&line).map_err(|e| corrupt(e.to_string()))?;
        if let Some(extra) = obj.keys().find(|k| !schema.iter().any(|c| &c.name == *k)) {
            return Err(corrupt(format!("unexpected field `{extra}`")));
        }
        let mut row = Vec::with_capacity(schema.len());
        for col in &schema {
            let cell = obj.get(&col.name).unwrap_or(&Json::Null);
            row.push(cell_from_json(cell, col).map_err(corrupt)?);
        }
        if dataset == Dataset::Hupd {
            let decision = row[2].as_text().unwrap_or_default();
            if !PATENT_DECISIONS.contains(&decision) {
                return Err(corrupt(format!("unknown decision `{decision}`")));
            }
        }
        rows.push(row);
    }
    Table::new(dataset.as_str(), schema, rows)
}

pub fn write_dataset(path: &Path, table: &Table) -> Result<(), TableError> {
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(table.to_jsonl().as_bytes()).map_err(io_err(path))
}

/// Applies a subset to an already-loaded dataset table.
pub fn apply_subset(
    table: &Table,
    dataset: Dataset,
    subset: SubsetSpec,
) -> Result<Table, TableError> {
    match subset {
        SubsetSpec::All => Ok(table.clone()),
        SubsetSpec::YearRange { start, end } => {
            if start > end {
                return Err(TableError::SubsetOutOfRange(format!(
                    "year range {start}..{end} is inverted"
                )));
            }
            let col = dataset.date_column().ok_or_else(|| {
                TableError::SubsetOutOfRange(format!("{dataset} has no date column for year subsetting"))
            })?;
            let idx = table.column_index(col).expect("schema column");
            let keep = table.rows().iter().enumerate().filter_map(|(i, r)| match &r[idx] {
                Value::Date(d) if (start..=end).contains(&d.year()) => Some(i),
                _ => None,
            });
            Ok(table.select_rows(keep.collect::<Vec<_>>()))
        }
        SubsetSpec::RowRange { start, end } => {
            if start > end {
                return Err(TableError::SubsetOutOfRange(format!(
                    "row range {start}..{end} is inverted"
                )));
            }
            if end >= table.len() {
                return Err(TableError::SubsetOutOfRange(format!(
                    "row {end} is past the last row ({})",
                    table.len().saturating_sub(1)
                )));
            }
            Ok(table.select_rows(start..=end))
        }
    }
}

/// Loads `db_name` from `dir` and applies `subset`.
pub fn load(dir: &Path, db_name: &str, subset: SubsetSpec) -> Result<Table, TableError> {
    let dataset: Dataset = db_name.parse()?;
    let table = read_dataset(&dir.join(dataset.file_name()), dataset)?;
    apply_subset(&table, dataset, subset)
}

/// Train / held-out split: patents by filing year (<= 2012 vs >= 2013),
/// papers at row 3000.
pub fn train_split(table: &Table, dataset: Dataset) -> (Table, Table) {
    match dataset {
        Dataset::Hupd => {
            let idx = table.column_index("filing_date").expect("schema column");
            let (mut train, mut test) = (Vec::new(), Vec::new());
            for (i, row) in table.rows().iter().enumerate() {
                if let Value::Date(d) = &row[idx] {
                    if (2004..=2012).contains(&d.year()) {
                        train.push(i);
                    } else if (2013..=2018).contains(&d.year()) {
                        test.push(i);
                    }
                }
            }
            (table.select_rows(train), table.select_rows(test))
        }
        Dataset::Neurips => {
            let cut = NEURIPS_TRAIN_ROWS.min(table.len());
            (table.select_rows(0..cut), table.select_rows(cut..table.len()))
        }
    }
}

pub const NEURIPS_TRAIN_ROWS: usize = 3000;

/// Both datasets loaded once and shared. Subset requests clone rows out of
/// the cached full tables.
#[derive(Debug, Clone)]
pub struct TableStore {
    dir: PathBuf,
    tables: HashMap<Dataset, Arc<Table>>,
}

impl TableStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<TableStore, TableError> {
        let dir = dir.into();
        let mut tables = HashMap::new();
        for ds in Dataset::ALL {
            let t = read_dataset(&dir.join(ds.file_name()), ds)?;
            tables.insert(ds, Arc::new(t));
        }
        Ok(TableStore { dir, tables })
    }

    pub fn from_tables(hupd: Table, neurips: Table) -> TableStore {
        let mut tables = HashMap::new();
        tables.insert(Dataset::Hupd, Arc::new(hupd));
        tables.insert(Dataset::Neurips, Arc::new(neurips));
        TableStore {
            dir: PathBuf::new(),
            tables,
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn full(&self, dataset: Dataset) -> &Arc<Table> {
        &self.tables[&dataset]
    }

    pub fn load(&self, db_name: &str, subset: SubsetSpec) -> Result<Arc<Table>, TableError> {
        let ds: Dataset = db_name.parse()?;
        match subset {
            SubsetSpec::All => Ok(Arc::clone(self.full(ds))),
            s => apply_subset(self.full(ds), ds, s).map(Arc::new),
        }
    }
}
