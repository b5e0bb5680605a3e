//! Builtin functions, grouped into capability namespaces.
//!
//! `core` is always available; `stats`, `dates` and `text` must be brought
//! in with `use`. No builtin touches the filesystem, the network, the clock
//! or a random source.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::sync::Arc;

use chrono::Datelike;
use indexmap::IndexMap;

use super::interp::{Fault, Meter};
use crate::classify::tokenize;
use crate::table::{Column, ColumnType, Table};
use crate::value::{Num, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Capability {
    Core,
    Stats,
    Dates,
    Text,
}

impl Capability {
    pub fn from_name(s: &str) -> Option<Capability> {
        match s {
            "core" => Some(Capability::Core),
            "stats" => Some(Capability::Stats),
            "dates" => Some(Capability::Dates),
            "text" => Some(Capability::Text),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Capability::Core => "core",
            Capability::Stats => "stats",
            Capability::Dates => "dates",
            Capability::Text => "text",
        }
    }
}

type BuiltinFn = fn(&mut Meter, Vec<Value>) -> Result<Value, Fault>;

pub struct BuiltinSpec {
    pub name: &'static str,
    pub capability: Capability,
    pub min_args: usize,
    pub max_args: usize,
    pub(super) func: BuiltinFn,
}

macro_rules! builtin {
    ($name:literal, $cap:ident, $min:literal, $max:literal, $f:ident) => {
        BuiltinSpec {
            name: $name,
            capability: Capability::$cap,
            min_args: $min,
            max_args: $max,
            func: $f,
        }
    };
}

pub static BUILTINS: &[BuiltinSpec] = &[
    builtin!("col", Core, 2, 2, col),
    builtin!("filter", Core, 2, 2, filter),
    builtin!("groupby", Core, 2, 2, groupby),
    builtin!("agg", Core, 2, 3, agg),
    builtin!("count", Core, 1, 1, count),
    builtin!("sum", Core, 1, 1, sum),
    builtin!("mean", Core, 1, 1, mean),
    builtin!("min", Core, 1, 1, min),
    builtin!("max", Core, 1, 1, max),
    builtin!("sort_desc", Core, 1, 2, sort_desc),
    builtin!("sort_asc", Core, 1, 2, sort_asc),
    builtin!("head", Core, 2, 2, head),
    builtin!("tail", Core, 2, 2, tail),
    builtin!("unique", Core, 1, 1, unique),
    builtin!("len", Core, 1, 1, len),
    builtin!("round", Core, 1, 2, round),
    builtin!("int", Core, 1, 1, int),
    builtin!("keys", Core, 1, 1, keys),
    builtin!("values", Core, 1, 1, values),
    builtin!("contains", Core, 2, 2, contains),
    builtin!("lower", Core, 1, 1, lower),
    builtin!("lengths", Core, 1, 1, lengths),
    builtin!("argmax", Core, 1, 1, argmax),
    builtin!("argmin", Core, 1, 1, argmin),
    builtin!("with_col", Core, 3, 3, with_col),
    builtin!("if_else", Core, 3, 3, if_else),
    builtin!("repeat", Core, 2, 2, repeat),
    builtin!("is_null", Core, 1, 1, is_null),
    builtin!("pick", Core, 2, 2, pick),
    builtin!("range", Core, 2, 2, range),
    builtin!("proportion", Stats, 1, 1, proportion),
    builtin!("ratio", Stats, 2, 2, ratio),
    builtin!("year", Dates, 1, 1, year),
    builtin!("month", Dates, 1, 1, month),
    builtin!("ym", Dates, 1, 1, ym),
    builtin!("days_between", Dates, 2, 2, days_between),
    builtin!("explode", Text, 2, 2, explode),
    builtin!("overlap", Text, 2, 2, overlap),
];

pub fn lookup(name: &str) -> Option<&'static BuiltinSpec> {
    BUILTINS.iter().find(|b| b.name == name)
}

fn ty(msg: impl Into<String>) -> Fault {
    Fault::Type(msg.into())
}

fn table_arg<'a>(v: &'a Value, f: &str) -> Result<&'a Arc<Table>, Fault> {
    v.as_table()
        .ok_or_else(|| ty(format!("{f}: expected a table, got {}", v.kind())))
}

fn text_arg<'a>(v: &'a Value, f: &str) -> Result<&'a str, Fault> {
    v.as_text()
        .ok_or_else(|| ty(format!("{f}: expected text, got {}", v.kind())))
}

fn list_arg<'a>(v: &'a Value, f: &str) -> Result<&'a [Value], Fault> {
    v.as_list()
        .ok_or_else(|| ty(format!("{f}: expected a list, got {}", v.kind())))
}

fn count_arg(v: &Value, f: &str) -> Result<usize, Fault> {
    match v {
        Value::Number(Num::Int(i)) if *i >= 0 => Ok(*i as usize),
        other => Err(ty(format!("{f}: expected a non-negative integer, got {other}"))),
    }
}

/// Applies `f` to a scalar or to each element of a list.
fn map_elems(
    meter: &mut Meter,
    v: &Value,
    f: impl Fn(&Value) -> Result<Value, Fault>,
) -> Result<Value, Fault> {
    match v {
        Value::List(items) => {
            meter.tick(items.len() as u64)?;
            items.iter().map(f).collect::<Result<Vec<_>, _>>().map(Value::List)
        }
        other => f(other),
    }
}

fn column_of(t: &Table, name: &str) -> Result<usize, Fault> {
    t.column_index(name)
        .ok_or_else(|| ty(format!("table `{}` has no column `{name}`", t.name())))
}

fn col(m: &mut Meter, a: Vec<Value>) -> Result<Value, Fault> {
    let t = table_arg(&a[0], "col")?;
    let idx = column_of(t, text_arg(&a[1], "col")?)?;
    m.tick(t.len() as u64)?;
    Ok(Value::List(t.rows().iter().map(|r| r[idx].clone()).collect()))
}

fn mask_arg(v: &Value, expected: usize, f: &str) -> Result<Vec<bool>, Fault> {
    let items = list_arg(v, f)?;
    if items.len() != expected {
        return Err(ty(format!(
            "{f}: mask has {} entries, expected {expected}",
            items.len()
        )));
    }
    items
        .iter()
        .map(|b| match b {
            Value::Bool(b) => Ok(*b),
            Value::Null => Ok(false),
            other => Err(ty(format!("{f}: mask entries must be boolean, got {}", other.kind()))),
        })
        .collect()
}

fn filter(m: &mut Meter, a: Vec<Value>) -> Result<Value, Fault> {
    match &a[0] {
        Value::Table(t) => {
            let mask = mask_arg(&a[1], t.len(), "filter")?;
            m.tick(t.len() as u64)?;
            let keep: Vec<usize> = mask.iter().enumerate().filter(|(_, k)| **k).map(|(i, _)| i).collect();
            Ok(Value::Table(Arc::new(t.select_rows(keep))))
        }
        Value::List(items) => {
            let mask = mask_arg(&a[1], items.len(), "filter")?;
            m.tick(items.len() as u64)?;
            Ok(Value::List(
                items.iter().zip(mask).filter(|(_, k)| *k).map(|(v, _)| v.clone()).collect(),
            ))
        }
        other => Err(ty(format!("filter: expected a table or list, got {}", other.kind()))),
    }
}

fn groupby(m: &mut Meter, a: Vec<Value>) -> Result<Value, Fault> {
    let t = table_arg(&a[0], "groupby")?;
    let keys: Vec<Value> = match &a[1] {
        Value::Text(name) => {
            let idx = column_of(t, name)?;
            t.rows().iter().map(|r| r[idx].clone()).collect()
        }
        Value::List(items) if items.len() == t.len() => items.clone(),
        Value::List(items) => {
            return Err(ty(format!(
                "groupby: key list has {} entries, table has {} rows",
                items.len(),
                t.len()
            )))
        }
        other => return Err(ty(format!("groupby: key must be a column name or list, got {}", other.kind()))),
    };
    m.tick(t.len() as u64)?;
    let mut groups: IndexMap<String, Vec<usize>> = IndexMap::new();
    for (i, k) in keys.iter().enumerate() {
        match k {
            Value::Null => continue,
            Value::List(_) | Value::Map(_) | Value::Table(_) => {
                return Err(ty(format!("groupby: keys must be scalars, got {}", k.kind())))
            }
            _ => groups.entry(k.key_text()).or_default().push(i),
        }
    }
    Ok(Value::Map(
        groups
            .into_iter()
            .map(|(k, rows)| (k, Value::Table(Arc::new(t.select_rows(rows)))))
            .collect(),
    ))
}

fn agg(m: &mut Meter, a: Vec<Value>) -> Result<Value, Fault> {
    let groups = a[0]
        .as_map()
        .ok_or_else(|| ty(format!("agg: expected groups from groupby, got {}", a[0].kind())))?;
    let func = text_arg(&a[1], "agg")?;
    let column = a.get(2).map(|c| text_arg(c, "agg")).transpose()?;
    let mut out = IndexMap::new();
    for (key, g) in groups {
        let t = table_arg(g, "agg")?;
        m.tick(t.len() as u64)?;
        let cells = || -> Result<Vec<Value>, Fault> {
            let name = column.ok_or_else(|| ty(format!("agg: `{func}` needs a column")))?;
            let idx = column_of(t, name)?;
            Ok(t.rows().iter().map(|r| r[idx].clone()).collect())
        };
        let v = match func {
            "count" => match column {
                None => Value::int(t.len() as i64),
                Some(_) => agg_count(&cells()?),
            },
            "sum" => agg_sum(&cells()?)?,
            "mean" => agg_mean(&cells()?)?,
            "min" => agg_extreme(&cells()?, Ordering::Less, "min")?,
            "max" => agg_extreme(&cells()?, Ordering::Greater, "max")?,
            other => return Err(ty(format!("agg: unknown aggregate `{other}`"))),
        };
        out.insert(key.clone(), v);
    }
    Ok(Value::Map(out))
}

fn agg_count(items: &[Value]) -> Value {
    Value::int(items.iter().filter(|v| !v.is_null()).count() as i64)
}

/// Numbers (and booleans as 0/1) with nulls dropped.
fn numeric_items(items: &[Value], f: &str) -> Result<Vec<Num>, Fault> {
    items
        .iter()
        .filter(|v| !v.is_null())
        .map(|v| match v {
            Value::Number(n) => Ok(*n),
            Value::Bool(b) => Ok(Num::Int(*b as i64)),
            other => Err(ty(format!("{f}: expected numbers, got {}", other.kind()))),
        })
        .collect()
}

fn agg_sum(items: &[Value]) -> Result<Value, Fault> {
    let nums = numeric_items(items, "sum")?;
    if nums.iter().all(|n| n.is_int()) {
        let mut acc: i64 = 0;
        for n in &nums {
            if let Num::Int(i) = n {
                match acc.checked_add(*i) {
                    Some(s) => acc = s,
                    None => return Ok(Value::real(nums.iter().map(|n| n.as_f64()).sum())),
                }
            }
        }
        Ok(Value::int(acc))
    } else {
        Ok(Value::real(nums.iter().map(|n| n.as_f64()).sum()))
    }
}

fn agg_mean(items: &[Value]) -> Result<Value, Fault> {
    let nums = numeric_items(items, "mean")?;
    if nums.is_empty() {
        return Err(Fault::Empty("mean".into()));
    }
    let total = if nums.iter().all(|n| n.is_int()) {
        nums.iter()
            .map(|n| match n {
                Num::Int(i) => *i as i128,
                Num::Real(_) => unreachable!(),
            })
            .sum::<i128>() as f64
    } else {
        nums.iter().map(|n| n.as_f64()).sum()
    };
    Ok(Value::real(total / nums.len() as f64))
}

fn comparable_items<'a>(items: &'a [Value], f: &str) -> Result<Vec<(usize, &'a Value)>, Fault> {
    let mut kind = None;
    let mut out = Vec::new();
    for (i, v) in items.iter().enumerate() {
        match v {
            Value::Null => continue,
            Value::Number(_) | Value::Text(_) | Value::Bool(_) | Value::Date(_) => {
                let k = v.kind();
                if *kind.get_or_insert(k) != k {
                    return Err(ty(format!("{f}: cannot compare {} with {k}", kind.unwrap())));
                }
                out.push((i, v));
            }
            other => return Err(ty(format!("{f}: cannot order {}", other.kind()))),
        }
    }
    Ok(out)
}

fn extreme_index(items: &[Value], want: Ordering, f: &str) -> Result<usize, Fault> {
    let cands = comparable_items(items, f)?;
    let mut best: Option<(usize, &Value)> = None;
    for (i, v) in cands {
        match best {
            None => best = Some((i, v)),
            Some((_, b)) => {
                if v.partial_cmp_scalar(b) == Some(want) {
                    best = Some((i, v));
                }
            }
        }
    }
    best.map(|(i, _)| i).ok_or_else(|| Fault::Empty(f.to_string()))
}

fn agg_extreme(items: &[Value], want: Ordering, f: &str) -> Result<Value, Fault> {
    extreme_index(items, want, f).map(|i| items[i].clone())
}

fn count(m: &mut Meter, a: Vec<Value>) -> Result<Value, Fault> {
    match &a[0] {
        Value::Table(t) => Ok(Value::int(t.len() as i64)),
        Value::List(items) => {
            m.tick(items.len() as u64)?;
            Ok(agg_count(items))
        }
        other => Err(ty(format!("count: expected a list or table, got {}", other.kind()))),
    }
}

fn sum(m: &mut Meter, a: Vec<Value>) -> Result<Value, Fault> {
    let items = list_arg(&a[0], "sum")?;
    m.tick(items.len() as u64)?;
    agg_sum(items)
}

fn mean(m: &mut Meter, a: Vec<Value>) -> Result<Value, Fault> {
    let items = list_arg(&a[0], "mean")?;
    m.tick(items.len() as u64)?;
    agg_mean(items)
}

fn min(m: &mut Meter, a: Vec<Value>) -> Result<Value, Fault> {
    let items = list_arg(&a[0], "min")?;
    m.tick(items.len() as u64)?;
    agg_extreme(items, Ordering::Less, "min")
}

fn max(m: &mut Meter, a: Vec<Value>) -> Result<Value, Fault> {
    let items = list_arg(&a[0], "max")?;
    m.tick(items.len() as u64)?;
    agg_extreme(items, Ordering::Greater, "max")
}

/// Stable order over comparable scalars with nulls last in both directions.
fn sort_indices(items: &[Value], desc: bool, f: &str) -> Result<Vec<usize>, Fault> {
    comparable_items(items, f)?;
    let mut idx: Vec<usize> = (0..items.len()).collect();
    idx.sort_by(|&i, &j| {
        let (a, b) = (&items[i], &items[j]);
        match (a.is_null(), b.is_null()) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Greater,
            (false, true) => Ordering::Less,
            _ => {
                let o = a.partial_cmp_scalar(b).unwrap_or(Ordering::Equal);
                if desc {
                    o.reverse()
                } else {
                    o
                }
            }
        }
    });
    Ok(idx)
}

fn sort_generic(m: &mut Meter, a: Vec<Value>, desc: bool) -> Result<Value, Fault> {
    let f = if desc { "sort_desc" } else { "sort_asc" };
    match (&a[0], a.get(1)) {
        (Value::List(items), None) => {
            m.tick(items.len() as u64)?;
            let idx = sort_indices(items, desc, f)?;
            Ok(Value::List(idx.into_iter().map(|i| items[i].clone()).collect()))
        }
        (Value::Map(map), None) => {
            m.tick(map.len() as u64)?;
            let vals: Vec<Value> = map.values().cloned().collect();
            let idx = sort_indices(&vals, desc, f)?;
            Ok(Value::Map(
                idx.into_iter()
                    .map(|i| {
                        let (k, v) = map.get_index(i).unwrap();
                        (k.clone(), v.clone())
                    })
                    .collect(),
            ))
        }
        (Value::Table(t), Some(c)) => {
            let ci = column_of(t, text_arg(c, f)?)?;
            m.tick(t.len() as u64)?;
            let cells: Vec<Value> = t.rows().iter().map(|r| r[ci].clone()).collect();
            let idx = sort_indices(&cells, desc, f)?;
            Ok(Value::Table(Arc::new(t.select_rows(idx))))
        }
        (Value::Table(_), None) => Err(ty(format!("{f}: sorting a table needs a column name"))),
        (other, _) => Err(ty(format!("{f}: cannot sort {}", other.kind()))),
    }
}

fn sort_desc(m: &mut Meter, a: Vec<Value>) -> Result<Value, Fault> {
    sort_generic(m, a, true)
}

fn sort_asc(m: &mut Meter, a: Vec<Value>) -> Result<Value, Fault> {
    sort_generic(m, a, false)
}

fn slice_generic(a: Vec<Value>, from_end: bool, f: &str) -> Result<Value, Fault> {
    let n = count_arg(&a[1], f)?;
    let range = |len: usize| {
        let k = n.min(len);
        if from_end {
            len - k..len
        } else {
            0..k
        }
    };
    match &a[0] {
        Value::List(items) => Ok(Value::List(items[range(items.len())].to_vec())),
        Value::Map(map) => Ok(Value::Map(
            map.iter()
                .skip(range(map.len()).start)
                .take(n.min(map.len()))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        )),
        Value::Table(t) => Ok(Value::Table(Arc::new(t.select_rows(range(t.len()))))),
        other => Err(ty(format!("{f}: cannot slice {}", other.kind()))),
    }
}

fn head(_: &mut Meter, a: Vec<Value>) -> Result<Value, Fault> {
    slice_generic(a, false, "head")
}

fn tail(_: &mut Meter, a: Vec<Value>) -> Result<Value, Fault> {
    slice_generic(a, true, "tail")
}

fn unique(m: &mut Meter, a: Vec<Value>) -> Result<Value, Fault> {
    let items = list_arg(&a[0], "unique")?;
    m.tick(items.len() as u64)?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for v in items {
        if matches!(v, Value::Table(_) | Value::Map(_)) {
            return Err(ty(format!("unique: cannot hash {}", v.kind())));
        }
        if seen.insert(format!("{}:{}", v.kind(), v.key_text())) {
            out.push(v.clone());
        }
    }
    Ok(Value::List(out))
}

fn len(_: &mut Meter, a: Vec<Value>) -> Result<Value, Fault> {
    let n = match &a[0] {
        Value::List(items) => items.len(),
        Value::Table(t) => t.len(),
        Value::Map(m) => m.len(),
        Value::Text(s) => s.chars().count(),
        other => return Err(ty(format!("len: no length for {}", other.kind()))),
    };
    Ok(Value::int(n as i64))
}

fn round(m: &mut Meter, a: Vec<Value>) -> Result<Value, Fault> {
    let digits = match a.get(1) {
        None => 0,
        Some(Value::Number(Num::Int(d))) if (0..=15).contains(d) => *d as i32,
        Some(other) => return Err(ty(format!("round: digits must be an integer in 0..=15, got {other}"))),
    };
    map_elems(m, &a[0], |v| match v {
        Value::Null => Ok(Value::Null),
        Value::Number(Num::Int(i)) => Ok(Value::int(*i)),
        Value::Number(Num::Real(r)) => {
            let p = 10f64.powi(digits);
            Ok(Value::real((r * p).round() / p))
        }
        other => Err(ty(format!("round: expected a number, got {}", other.kind()))),
    })
}

fn int(m: &mut Meter, a: Vec<Value>) -> Result<Value, Fault> {
    map_elems(m, &a[0], |v| match v {
        Value::Null => Ok(Value::Null),
        Value::Number(Num::Int(i)) => Ok(Value::int(*i)),
        Value::Number(Num::Real(r)) if r.is_finite() && r.abs() < 9.2e18 => Ok(Value::int(r.trunc() as i64)),
        other => Err(ty(format!("int: cannot truncate {other}"))),
    })
}

fn keys(_: &mut Meter, a: Vec<Value>) -> Result<Value, Fault> {
    let map = a[0]
        .as_map()
        .ok_or_else(|| ty(format!("keys: expected a mapping, got {}", a[0].kind())))?;
    Ok(Value::List(map.keys().cloned().map(Value::Text).collect()))
}

fn values(_: &mut Meter, a: Vec<Value>) -> Result<Value, Fault> {
    let map = a[0]
        .as_map()
        .ok_or_else(|| ty(format!("values: expected a mapping, got {}", a[0].kind())))?;
    Ok(Value::List(map.values().cloned().collect()))
}

fn contains(m: &mut Meter, a: Vec<Value>) -> Result<Value, Fault> {
    let needle = &a[1];
    let one = |hay: &Value| -> Result<Value, Fault> {
        match hay {
            Value::Null => Ok(Value::Bool(false)),
            Value::Text(s) => Ok(Value::Bool(s.contains(text_arg(needle, "contains")?))),
            Value::List(items) => Ok(Value::Bool(items.iter().any(|i| i.loose_eq(needle)))),
            other => Err(ty(format!("contains: cannot search {}", other.kind()))),
        }
    };
    match &a[0] {
        Value::List(items) => {
            m.tick(items.len() as u64)?;
            items.iter().map(one).collect::<Result<Vec<_>, _>>().map(Value::List)
        }
        other => one(other),
    }
}

fn lower(m: &mut Meter, a: Vec<Value>) -> Result<Value, Fault> {
    map_elems(m, &a[0], |v| match v {
        Value::Null => Ok(Value::Null),
        Value::Text(s) => Ok(Value::Text(s.to_lowercase())),
        other => Err(ty(format!("lower: expected text, got {}", other.kind()))),
    })
}

fn lengths(m: &mut Meter, a: Vec<Value>) -> Result<Value, Fault> {
    let items = list_arg(&a[0], "lengths")?;
    m.tick(items.len() as u64)?;
    items
        .iter()
        .map(|v| match v {
            Value::Null => Ok(Value::Null),
            Value::List(x) => Ok(Value::int(x.len() as i64)),
            Value::Text(s) => Ok(Value::int(s.chars().count() as i64)),
            other => Err(ty(format!("lengths: no length for {}", other.kind()))),
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Value::List)
}

fn argmax(m: &mut Meter, a: Vec<Value>) -> Result<Value, Fault> {
    let items = list_arg(&a[0], "argmax")?;
    m.tick(items.len() as u64)?;
    extreme_index(items, Ordering::Greater, "argmax").map(|i| Value::int(i as i64))
}

fn argmin(m: &mut Meter, a: Vec<Value>) -> Result<Value, Fault> {
    let items = list_arg(&a[0], "argmin")?;
    m.tick(items.len() as u64)?;
    extreme_index(items, Ordering::Less, "argmin").map(|i| Value::int(i as i64))
}

fn infer_column(values: &[Value]) -> Result<(ColumnType, bool), Fault> {
    let nullable = values.iter().any(Value::is_null);
    let ty_of = |v: &Value| match v {
        Value::Number(_) => Ok(ColumnType::Number),
        Value::Text(_) => Ok(ColumnType::Text),
        Value::Bool(_) => Ok(ColumnType::Boolean),
        Value::Date(_) => Ok(ColumnType::Date),
        Value::List(_) => Ok(ColumnType::TextList),
        other => Err(ty(format!("with_col: {} cannot be a table cell", other.kind()))),
    };
    match values.iter().find(|v| !v.is_null()) {
        Some(v) => Ok((ty_of(v)?, nullable)),
        None => Ok((ColumnType::Text, true)),
    }
}

fn with_col(m: &mut Meter, a: Vec<Value>) -> Result<Value, Fault> {
    let t = table_arg(&a[0], "with_col")?;
    let name = text_arg(&a[1], "with_col")?;
    let cells = list_arg(&a[2], "with_col")?;
    if cells.len() != t.len() {
        return Err(ty(format!(
            "with_col: {} values for {} rows",
            cells.len(),
            t.len()
        )));
    }
    m.tick(t.len() as u64)?;
    let (cty, nullable) = infer_column(cells)?;
    let column = Column {
        name: name.to_string(),
        ty: cty,
        nullable,
    };
    let mut columns = t.columns().to_vec();
    let replace = t.column_index(name);
    let rows = t
        .rows()
        .iter()
        .zip(cells)
        .map(|(r, c)| {
            let mut r = r.clone();
            match replace {
                Some(i) => r[i] = c.clone(),
                None => r.push(c.clone()),
            }
            r
        })
        .collect();
    match replace {
        Some(i) => columns[i] = column,
        None => columns.push(column),
    }
    Table::new(t.name(), columns, rows)
        .map(|t| Value::Table(Arc::new(t)))
        .map_err(|e| ty(format!("with_col: {e}")))
}

fn if_else(m: &mut Meter, a: Vec<Value>) -> Result<Value, Fault> {
    let pick = |c: &Value, x: &Value, y: &Value| -> Result<Value, Fault> {
        match c {
            Value::Bool(true) => Ok(x.clone()),
            Value::Bool(false) | Value::Null => Ok(y.clone()),
            other => Err(ty(format!("if_else: condition must be boolean, got {}", other.kind()))),
        }
    };
    match &a[0] {
        Value::List(conds) => {
            m.tick(conds.len() as u64)?;
            let branch = |v: &Value, i: usize| -> Result<Value, Fault> {
                match v {
                    Value::List(xs) if xs.len() == conds.len() => Ok(xs[i].clone()),
                    Value::List(_) => Err(ty("if_else: branch length differs from condition")),
                    s => Ok(s.clone()),
                }
            };
            conds
                .iter()
                .enumerate()
                .map(|(i, c)| pick(c, &branch(&a[1], i)?, &branch(&a[2], i)?))
                .collect::<Result<Vec<_>, _>>()
                .map(Value::List)
        }
        c => pick(c, &a[1], &a[2]),
    }
}

fn repeat(m: &mut Meter, a: Vec<Value>) -> Result<Value, Fault> {
    let n = count_arg(&a[1], "repeat")?;
    m.tick(n as u64)?;
    Ok(Value::List(vec![a[0].clone(); n]))
}

fn is_null(m: &mut Meter, a: Vec<Value>) -> Result<Value, Fault> {
    map_elems(m, &a[0], |v| Ok(Value::Bool(v.is_null())))
}

fn pick(m: &mut Meter, a: Vec<Value>) -> Result<Value, Fault> {
    let keys = list_arg(&a[1], "pick")?;
    m.tick(keys.len() as u64)?;
    keys.iter()
        .map(|k| match (&a[0], k) {
            (Value::Map(_), Value::List(_) | Value::Map(_) | Value::Table(_)) => {
                Err(ty(format!("pick: keys must be scalars, got {}", k.kind())))
            }
            (Value::Map(map), k) => map
                .get(&k.key_text())
                .cloned()
                .ok_or_else(|| Fault::Index(format!("pick: no key `{}`", k.key_text()))),
            (Value::List(items), Value::Number(Num::Int(i))) => {
                let n = items.len() as i64;
                let pos = if *i < 0 { n + i } else { *i };
                if pos < 0 || pos >= n {
                    return Err(Fault::Index(format!("pick: index {i} out of range for length {n}")));
                }
                Ok(items[pos as usize].clone())
            }
            (target, k) => Err(ty(format!("pick: cannot index {} with {}", target.kind(), k.kind()))),
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Value::List)
}

fn range(m: &mut Meter, a: Vec<Value>) -> Result<Value, Fault> {
    match (&a[0], &a[1]) {
        (Value::Number(Num::Int(lo)), Value::Number(Num::Int(hi))) => {
            let n = hi.saturating_sub(*lo).max(0);
            m.tick(n as u64)?;
            Ok(Value::List((*lo..*hi).map(Value::int).collect()))
        }
        (x, y) => Err(ty(format!("range: expected integers, got {} and {}", x.kind(), y.kind()))),
    }
}

fn proportion(m: &mut Meter, a: Vec<Value>) -> Result<Value, Fault> {
    let items = list_arg(&a[0], "proportion")?;
    m.tick(items.len() as u64)?;
    if items.is_empty() {
        return Err(Fault::Empty("proportion".into()));
    }
    let mut hits = 0usize;
    for v in items {
        match v {
            Value::Bool(true) => hits += 1,
            Value::Bool(false) | Value::Null => {}
            other => return Err(ty(format!("proportion: expected booleans, got {}", other.kind()))),
        }
    }
    Ok(Value::real(hits as f64 / items.len() as f64))
}

fn ratio(_: &mut Meter, a: Vec<Value>) -> Result<Value, Fault> {
    let num = |v: &Value| {
        v.as_f64()
            .ok_or_else(|| ty(format!("ratio: expected numbers, got {}", v.kind())))
    };
    let (x, y) = (num(&a[0])?, num(&a[1])?);
    if y == 0.0 {
        return Err(Fault::DivZero);
    }
    Ok(Value::real(x / y))
}

fn date_part(m: &mut Meter, v: &Value, f: &'static str) -> Result<Value, Fault> {
    map_elems(m, v, |d| match d {
        Value::Null => Ok(Value::Null),
        Value::Date(d) => Ok(match f {
            "year" => Value::int(d.year() as i64),
            "month" => Value::int(d.month() as i64),
            _ => Value::Text(format!("{:04}-{:02}", d.year(), d.month())),
        }),
        other => Err(ty(format!("{f}: expected a date, got {}", other.kind()))),
    })
}

fn year(m: &mut Meter, a: Vec<Value>) -> Result<Value, Fault> {
    date_part(m, &a[0], "year")
}

fn month(m: &mut Meter, a: Vec<Value>) -> Result<Value, Fault> {
    date_part(m, &a[0], "month")
}

fn ym(m: &mut Meter, a: Vec<Value>) -> Result<Value, Fault> {
    date_part(m, &a[0], "ym")
}

fn days_between(m: &mut Meter, a: Vec<Value>) -> Result<Value, Fault> {
    let one = |x: &Value, y: &Value| match (x, y) {
        (Value::Null, _) | (_, Value::Null) => Ok(Value::Null),
        (Value::Date(s), Value::Date(e)) => Ok(Value::int((*e - *s).num_days())),
        (p, q) => Err(ty(format!("days_between: expected dates, got {} and {}", p.kind(), q.kind()))),
    };
    match (&a[0], &a[1]) {
        (Value::List(xs), Value::List(ys)) => {
            if xs.len() != ys.len() {
                return Err(ty("days_between: lists differ in length"));
            }
            m.tick(xs.len() as u64)?;
            xs.iter().zip(ys).map(|(x, y)| one(x, y)).collect::<Result<Vec<_>, _>>().map(Value::List)
        }
        (Value::List(xs), y) => {
            m.tick(xs.len() as u64)?;
            xs.iter().map(|x| one(x, y)).collect::<Result<Vec<_>, _>>().map(Value::List)
        }
        (x, Value::List(ys)) => {
            m.tick(ys.len() as u64)?;
            ys.iter().map(|y| one(x, y)).collect::<Result<Vec<_>, _>>().map(Value::List)
        }
        (x, y) => one(x, y),
    }
}

fn explode(m: &mut Meter, a: Vec<Value>) -> Result<Value, Fault> {
    let t = table_arg(&a[0], "explode")?;
    let name = text_arg(&a[1], "explode")?;
    let ci = column_of(t, name)?;
    if t.columns()[ci].ty != ColumnType::TextList {
        return Err(ty(format!("explode: column `{name}` is not a text list")));
    }
    let mut rows = Vec::new();
    for r in t.rows() {
        if let Value::List(items) = &r[ci] {
            m.tick(items.len() as u64 + 1)?;
            for item in items {
                let mut row = r.clone();
                row[ci] = item.clone();
                rows.push(row);
            }
        }
    }
    let mut columns = t.columns().to_vec();
    columns[ci].ty = ColumnType::Text;
    columns[ci].nullable = false;
    Table::new(t.name(), columns, rows)
        .map(|t| Value::Table(Arc::new(t)))
        .map_err(|e| ty(format!("explode: {e}")))
}

fn overlap(_: &mut Meter, a: Vec<Value>) -> Result<Value, Fault> {
    let x: HashSet<String> = tokenize(text_arg(&a[0], "overlap")?).into_iter().collect();
    let y: HashSet<String> = tokenize(text_arg(&a[1], "overlap")?).into_iter().collect();
    let union = x.union(&y).count();
    if union == 0 {
        return Ok(Value::real(0.0));
    }
    Ok(Value::real(x.intersection(&y).count() as f64 / union as f64))
}
