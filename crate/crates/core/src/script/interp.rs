use std::sync::Arc;

use indexmap::IndexMap;

use super::builtins;
use super::parse::{BinOp, Expr, Stmt, UnOp};
use super::{Program, ScriptError};
use crate::table::Table;
use crate::value::{Num, Value};

/// Runtime failure before it is tagged with a source line.
#[derive(Debug)]
pub(crate) enum Fault {
    Type(String),
    Empty(String),
    DivZero,
    Index(String),
    Undefined(String),
    Budget,
}

pub(crate) struct Meter {
    used: u64,
    budget: u64,
}

impl Meter {
    pub(crate) fn tick(&mut self, n: u64) -> Result<(), Fault> {
        self.used = self.used.saturating_add(n);
        if self.used > self.budget {
            Err(Fault::Budget)
        } else {
            Ok(())
        }
    }
}

struct Interp<'a> {
    meter: Meter,
    globals: &'a IndexMap<String, Value>,
    locals: IndexMap<String, Value>,
}

impl Interp<'_> {
    fn lookup(&self, name: &str) -> Result<Value, Fault> {
        self.locals
            .get(name)
            .or_else(|| self.globals.get(name))
            .cloned()
            .ok_or_else(|| Fault::Undefined(name.to_string()))
    }

    fn eval(&mut self, e: &Expr) -> Result<Value, Fault> {
        self.meter.tick(1)?;
        match e {
            Expr::Lit(v) => Ok(v.clone()),
            Expr::Var(name) => self.lookup(name),
            Expr::List(items) => items
                .iter()
                .map(|i| self.eval(i))
                .collect::<Result<Vec<_>, _>>()
                .map(Value::List),
            Expr::Call { name, args } => {
                let spec = builtins::lookup(name)
                    .ok_or_else(|| Fault::Type(format!("unknown builtin `{name}`")))?;
                let vals = args.iter().map(|a| self.eval(a)).collect::<Result<Vec<_>, _>>()?;
                (spec.func)(&mut self.meter, vals)
            }
            Expr::Index { target, index } => {
                let t = self.eval(target)?;
                let i = self.eval(index)?;
                index_value(&t, &i)
            }
            Expr::Unary { op, expr } => {
                let v = self.eval(expr)?;
                self.broadcast1(&v, |x| unary(op, x))
            }
            Expr::Binary { op, lhs, rhs } => {
                let a = self.eval(lhs)?;
                let b = self.eval(rhs)?;
                self.broadcast2(&a, &b, |x, y| binary(*op, x, y))
            }
        }
    }

    fn broadcast1(&mut self, v: &Value, f: impl Fn(&Value) -> Result<Value, Fault>) -> Result<Value, Fault> {
        match v {
            Value::List(xs) => {
                self.meter.tick(xs.len() as u64)?;
                xs.iter().map(f).collect::<Result<Vec<_>, _>>().map(Value::List)
            }
            other => f(other),
        }
    }

    fn broadcast2(
        &mut self,
        a: &Value,
        b: &Value,
        f: impl Fn(&Value, &Value) -> Result<Value, Fault>,
    ) -> Result<Value, Fault> {
        match (a, b) {
            (Value::List(xs), Value::List(ys)) => {
                if xs.len() != ys.len() {
                    return Err(Fault::Type(format!(
                        "elementwise operation on lists of length {} and {}",
                        xs.len(),
                        ys.len()
                    )));
                }
                self.meter.tick(xs.len() as u64)?;
                xs.iter().zip(ys).map(|(x, y)| f(x, y)).collect::<Result<Vec<_>, _>>().map(Value::List)
            }
            (Value::List(xs), y) => {
                self.meter.tick(xs.len() as u64)?;
                xs.iter().map(|x| f(x, y)).collect::<Result<Vec<_>, _>>().map(Value::List)
            }
            (x, Value::List(ys)) => {
                self.meter.tick(ys.len() as u64)?;
                ys.iter().map(|y| f(x, y)).collect::<Result<Vec<_>, _>>().map(Value::List)
            }
            (x, y) => f(x, y),
        }
    }
}

fn truthy(v: &Value) -> Result<bool, Fault> {
    match v {
        Value::Bool(b) => Ok(*b),
        Value::Null => Ok(false),
        other => Err(Fault::Type(format!("expected a boolean, got {}", other.kind()))),
    }
}

fn unary(op: &UnOp, v: &Value) -> Result<Value, Fault> {
    match (op, v) {
        (_, Value::Null) => Ok(Value::Null),
        (UnOp::Neg, Value::Number(Num::Int(i))) => i
            .checked_neg()
            .map(Value::int)
            .ok_or_else(|| Fault::Type("integer overflow".into())),
        (UnOp::Neg, Value::Number(Num::Real(r))) => Ok(Value::real(-r)),
        (UnOp::Not, v) => Ok(Value::Bool(!truthy(v)?)),
        (UnOp::Neg, other) => Err(Fault::Type(format!("cannot negate {}", other.kind()))),
    }
}

fn floor_rem_i(x: i64, y: i64) -> i64 {
    let r = x % y;
    if r != 0 && ((r < 0) != (y < 0)) {
        r + y
    } else {
        r
    }
}

fn floor_rem_f(x: f64, y: f64) -> f64 {
    let r = x % y;
    if r != 0.0 && ((r < 0.0) != (y < 0.0)) {
        r + y
    } else {
        r
    }
}

fn arith(op: BinOp, x: Num, y: Num) -> Result<Value, Fault> {
    if let (Num::Int(a), Num::Int(b)) = (x, y) {
        let exact = match op {
            BinOp::Add => a.checked_add(b),
            BinOp::Sub => a.checked_sub(b),
            BinOp::Mul => a.checked_mul(b),
            BinOp::Rem => {
                if b == 0 {
                    return Err(Fault::DivZero);
                }
                Some(floor_rem_i(a, b))
            }
            _ => None,
        };
        if let Some(v) = exact {
            return Ok(Value::int(v));
        }
    }
    let (a, b) = (x.as_f64(), y.as_f64());
    let r = match op {
        BinOp::Add => a + b,
        BinOp::Sub => a - b,
        BinOp::Mul => a * b,
        BinOp::Div | BinOp::Rem if b == 0.0 => return Err(Fault::DivZero),
        BinOp::Div => a / b,
        BinOp::Rem => floor_rem_f(a, b),
        _ => unreachable!("arith called with a non-arithmetic operator"),
    };
    Ok(Value::real(r))
}

fn binary(op: BinOp, a: &Value, b: &Value) -> Result<Value, Fault> {
    use BinOp::*;
    match op {
        Eq => Ok(Value::Bool(a.loose_eq(b))),
        Ne => Ok(Value::Bool(!a.loose_eq(b))),
        And => Ok(Value::Bool(truthy(a)? && truthy(b)?)),
        Or => Ok(Value::Bool(truthy(a)? || truthy(b)?)),
        Lt | Le | Gt | Ge => {
            if a.is_null() || b.is_null() {
                return Ok(Value::Bool(false));
            }
            let o = a.partial_cmp_scalar(b).ok_or_else(|| {
                Fault::Type(format!("cannot compare {} with {}", a.kind(), b.kind()))
            })?;
            Ok(Value::Bool(match op {
                Lt => o.is_lt(),
                Le => o.is_le(),
                Gt => o.is_gt(),
                _ => o.is_ge(),
            }))
        }
        Add | Sub | Mul | Div | Rem => match (a, b) {
            (Value::Null, _) | (_, Value::Null) => Ok(Value::Null),
            (Value::Number(x), Value::Number(y)) => arith(op, *x, *y),
            (Value::Text(x), Value::Text(y)) if op == Add => Ok(Value::Text(format!("{x}{y}"))),
            _ => Err(Fault::Type(format!(
                "unsupported operands {} and {}",
                a.kind(),
                b.kind()
            ))),
        },
    }
}

fn index_value(target: &Value, index: &Value) -> Result<Value, Fault> {
    match (target, index) {
        (Value::List(items), Value::Number(Num::Int(i))) => {
            let n = items.len() as i64;
            let pos = if *i < 0 { n + i } else { *i };
            if pos < 0 || pos >= n {
                return Err(Fault::Index(format!("index {i} out of range for length {n}")));
            }
            Ok(items[pos as usize].clone())
        }
        (Value::Map(map), key) if !matches!(key, Value::List(_) | Value::Map(_) | Value::Table(_)) => map
            .get(&key.key_text())
            .cloned()
            .ok_or_else(|| Fault::Index(format!("no key `{}`", key.key_text()))),
        (t, i) => Err(Fault::Type(format!("cannot index {} with {}", t.kind(), i.kind()))),
    }
}

fn tag(fault: Fault, line: usize, budget: u64) -> ScriptError {
    match fault {
        Fault::Type(message) => ScriptError::TypeMismatch { line, message },
        Fault::Empty(function) => ScriptError::EmptyAggregate { line, function },
        Fault::DivZero => ScriptError::DivisionByZero { line },
        Fault::Index(message) => ScriptError::IndexOutOfRange { line, message },
        Fault::Undefined(name) => ScriptError::UndefinedVariable { line, name },
        Fault::Budget => ScriptError::BudgetExceeded { budget },
    }
}

/// Runs `program` with `df` bound to `table` (when given) and `inputs` as
/// read-only globals. Returns every assigned variable in order of first
/// assignment.
pub fn run(
    program: &Program,
    table: Option<Arc<Table>>,
    inputs: &IndexMap<String, Value>,
    budget: u64,
) -> Result<IndexMap<String, Value>, ScriptError> {
    let mut globals = inputs.clone();
    if let Some(t) = table {
        globals.insert("df".to_string(), Value::Table(t));
    }
    let mut it = Interp {
        meter: Meter { used: 0, budget },
        globals: &globals,
        locals: IndexMap::new(),
    };
    for stmt in &program.statements {
        if let Stmt::Assign { name, expr, line } = stmt {
            let v = it.eval(expr).map_err(|f| tag(f, *line, budget))?;
            it.locals.insert(name.clone(), v);
        }
    }
    Ok(it.locals)
}
