//! Arithmetic expression evaluator backing the Calculator tool.
//!
//! Evaluation is exact: every literal becomes a big rational and results are
//! rendered to a number only at the end.
//!
//! Precedence, highest first: `^` (right associative), unary `-`,
//! `* × / ÷ %`, `+ -`. `÷` is read as `/`.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::value::Value;

/// Largest integer exponent accepted by `^`.
pub const MAX_EXPONENT: u32 = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CalcError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unbalanced parentheses at byte {offset}")]
    UnbalancedParens { offset: usize },
    #[error("division by zero")]
    DivisionByZero,
    #[error("unsupported exponent: {0}")]
    UnsupportedExponent(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    /// The `×` sign, kept distinct so the tree re-serializes faithfully.
    Times,
    Div,
    Rem,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Times => "×",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(BigRational),
    Neg(Box<Expr>),
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Group(Box<Expr>),
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Number(r) => f.write_str(&render_exact(r).expect("literal is a finite decimal")),
            Expr::Neg(e) => write!(f, "-{e}"),
            Expr::Binary { op, lhs, rhs } => write!(f, "{lhs} {} {rhs}", op.symbol()),
            Expr::Group(e) => write!(f, "({e})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(BigRational),
    Op(BinOp),
    LParen,
    RParen,
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, CalcError> {
    let mut out = Vec::new();
    let mut chars = src.char_indices().peekable();
    while let Some(&(i, c)) = chars.peek() {
        let tok = match c {
            c if c.is_whitespace() => {
                chars.next();
                continue;
            }
            '0'..='9' | '.' => {
                let mut end = i;
                let mut seen_dot = false;
                while let Some(&(j, d)) = chars.peek() {
                    if d.is_ascii_digit() {
                        end = j + 1;
                    } else if d == '.' && !seen_dot {
                        seen_dot = true;
                        end = j + 1;
                    } else {
                        break;
                    }
                    chars.next();
                }
                let text = &src[i..end];
                out.push((i, Tok::Num(parse_decimal(text, i)?)));
                continue;
            }
            '+' => Tok::Op(BinOp::Add),
            '-' | '−' => Tok::Op(BinOp::Sub),
            '*' => Tok::Op(BinOp::Mul),
            '×' => Tok::Op(BinOp::Times),
            '/' | '÷' => Tok::Op(BinOp::Div),
            '%' => Tok::Op(BinOp::Rem),
            '^' => Tok::Op(BinOp::Pow),
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            other => {
                return Err(CalcError::Syntax {
                    offset: i,
                    message: format!("unexpected character `{other}`"),
                })
            }
        };
        out.push((i, tok));
        chars.next();
    }
    Ok(out)
}

fn parse_decimal(text: &str, offset: usize) -> Result<BigRational, CalcError> {
    let bad = || CalcError::Syntax {
        offset,
        message: format!("malformed number `{text}`"),
    };
    let (int_part, frac_part) = match text.split_once('.') {
        Some((a, b)) => (a, b),
        None => (text, ""),
    };
    if int_part.is_empty() || (text.contains('.') && frac_part.is_empty()) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = digits.parse().map_err(|_| bad())?;
    let denom = num_traits::pow(BigInt::from(10), frac_part.len());
    Ok(BigRational::new(numer, denom))
}

fn check_parens(src: &str) -> Result<(), CalcError> {
    let mut stack = Vec::new();
    for (i, c) in src.char_indices() {
        match c {
            '(' => stack.push(i),
            ')' => {
                if stack.pop().is_none() {
                    return Err(CalcError::UnbalancedParens { offset: i });
                }
            }
            _ => {}
        }
    }
    match stack.first() {
        Some(&offset) => Err(CalcError::UnbalancedParens { offset }),
        None => Ok(()),
    }
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(o, _)| *o).unwrap_or(self.end)
    }

    fn err<T>(&self, message: &str) -> Result<T, CalcError> {
        Err(CalcError::Syntax {
            offset: self.offset(),
            message: message.to_string(),
        })
    }

    fn additive(&mut self) -> Result<Expr, CalcError> {
        let mut lhs = self.multiplicative()?;
        while let Some(Tok::Op(op @ (BinOp::Add | BinOp::Sub))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.multiplicative()?;
            lhs = Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) };
        }
        Ok(lhs)
    }

    fn multiplicative(&mut self) -> Result<Expr, CalcError> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Op(op @ (BinOp::Mul | BinOp::Times | BinOp::Div | BinOp::Rem))) =
            self.peek().cloned()
        {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, CalcError> {
        if let Some(Tok::Op(BinOp::Sub)) = self.peek() {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, CalcError> {
        let base = self.primary()?;
        if let Some(Tok::Op(BinOp::Pow)) = self.peek() {
            self.pos += 1;
            // The exponent may itself carry a sign; `2^3^2` nests to the right.
            let exp = self.unary()?;
            return Ok(Expr::Binary { op: BinOp::Pow, lhs: Box::new(base), rhs: Box::new(exp) });
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, CalcError> {
        match self.peek().cloned() {
            Some(Tok::Num(r)) => {
                self.pos += 1;
                Ok(Expr::Number(r))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.additive()?;
                match self.peek() {
                    Some(Tok::RParen) => {
                        self.pos += 1;
                        Ok(Expr::Group(Box::new(inner)))
                    }
                    _ => self.err("expected `)`"),
                }
            }
            Some(_) => self.err("expected a number or `(`"),
            None => self.err("unexpected end of expression"),
        }
    }
}

/// Parses an arithmetic expression into a tree.
pub fn parse_expr(source: &str) -> Result<Expr, CalcError> {
    check_parens(source)?;
    let toks = lex(source)?;
    let mut p = Parser { toks, pos: 0, end: source.len() };
    let e = p.additive()?;
    if p.pos != p.toks.len() {
        return p.err("unexpected trailing input");
    }
    Ok(e)
}

fn floor_rational(r: &BigRational) -> BigRational {
    BigRational::from_integer(r.floor().to_integer())
}

/// Evaluates a parsed tree exactly.
pub fn eval_expr(e: &Expr) -> Result<BigRational, CalcError> {
    match e {
        Expr::Number(r) => Ok(r.clone()),
        Expr::Neg(inner) => Ok(-eval_expr(inner)?),
        Expr::Group(inner) => eval_expr(inner),
        Expr::Binary { op, lhs, rhs } => {
            let a = eval_expr(lhs)?;
            let b = eval_expr(rhs)?;
            match op {
                BinOp::Add => Ok(a + b),
                BinOp::Sub => Ok(a - b),
                BinOp::Mul | BinOp::Times => Ok(a * b),
                BinOp::Div => {
                    if b.is_zero() {
                        Err(CalcError::DivisionByZero)
                    } else {
                        Ok(a / b)
                    }
                }
                BinOp::Rem => {
                    if b.is_zero() {
                        return Err(CalcError::DivisionByZero);
                    }
                    // Floored remainder: the result takes the divisor's sign.
                    let q = floor_rational(&(&a / &b));
                    Ok(a - b * q)
                }
                BinOp::Pow => pow_rational(a, &b),
            }
        }
    }
}

fn pow_rational(base: BigRational, exp: &BigRational) -> Result<BigRational, CalcError> {
    if !exp.is_integer() {
        return Err(CalcError::UnsupportedExponent(format!(
            "non-integer exponent {}",
            render_approx(exp, 12)
        )));
    }
    let e = exp.to_integer();
    let mag = e
        .abs()
        .to_u32()
        .filter(|m| *m <= MAX_EXPONENT)
        .ok_or_else(|| CalcError::UnsupportedExponent(format!("|{e}| exceeds {MAX_EXPONENT}")))?;
    if e.is_negative() {
        if base.is_zero() {
            return Err(CalcError::DivisionByZero);
        }
        Ok(num_traits::pow(base.recip(), mag as usize))
    } else if mag == 0 {
        Ok(BigRational::one())
    } else {
        Ok(num_traits::pow(base, mag as usize))
    }
}

/// Parses and evaluates `source` exactly.
pub fn evaluate(source: &str) -> Result<BigRational, CalcError> {
    eval_expr(&parse_expr(source)?)
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Number value for tool output: integers that fit stay integers.
pub fn to_value(r: &BigRational) -> Value {
    if r.is_integer() {
        if let Some(i) = r.to_integer().to_i64() {
            return Value::int(i);
        }
    }
    Value::real(to_f64(r))
}

/// Exact decimal text if the expansion terminates, within 10k digits.
pub fn render_exact(r: &BigRational) -> Option<String> {
    let s = render_approx(r, 10_000);
    // Terminating iff the reduced denominator has only factors 2 and 5.
    let mut d = r.denom().clone();
    for p in [2u32, 5] {
        let p = BigInt::from(p);
        while (&d % &p).is_zero() {
            d /= &p;
        }
    }
    d.is_one().then_some(s)
}

/// Decimal text truncated to at most `max_frac` fractional digits, with
/// trailing zeros removed.
pub fn render_approx(r: &BigRational, max_frac: usize) -> String {
    let neg = r.is_negative();
    let r = r.abs();
    let int = r.numer() / r.denom();
    let mut rem = r.numer() % r.denom();
    let mut frac = String::new();
    let ten = BigInt::from(10);
    while !rem.is_zero() && frac.len() < max_frac {
        rem *= &ten;
        let digit = &rem / r.denom();
        rem %= r.denom();
        frac.push_str(&digit.to_string());
    }
    let mut s = String::new();
    if neg && !(int.is_zero() && frac.is_empty()) {
        s.push('-');
    }
    s.push_str(&int.to_string());
    if !frac.is_empty() {
        s.push('.');
        s.push_str(&frac);
    }
    s
}
