use std::collections::BTreeSet;

use super::builtins::{self, Capability};
use super::{Program, ScriptError};
use crate::value::Value;

#[derive(Debug, Clone, PartialEq)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Lit(Value),
    Var(String),
    Call { name: String, args: Vec<Expr> },
    List(Vec<Expr>),
    Index { target: Box<Expr>, index: Box<Expr> },
    Unary { op: UnOp, expr: Box<Expr> },
    Binary { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    Use { names: Vec<String>, line: usize },
    Assign { name: String, expr: Expr, line: usize },
}

impl Stmt {
    pub fn line(&self) -> usize {
        match self {
            Stmt::Use { line, .. } | Stmt::Assign { line, .. } => *line,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Real(f64),
    Str(String),
    Sym(&'static str),
    Newline,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const SYMBOLS: [&str; 17] = [
    "==", "!=", "<=", ">=", "<", ">", "=", "+", "-", "*", "/", "%", "(", ")", "[", "]", ",",
];

fn syntax(line: usize, column: usize, message: impl Into<String>) -> ScriptError {
    ScriptError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn lex(src: &str) -> Result<Vec<Token>, ScriptError> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    for (li, raw) in src.lines().enumerate() {
        let line = li + 1;
        let chars: Vec<char> = raw.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            if c == '#' {
                break;
            }
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c.is_ascii_digit() {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let mut is_real = false;
                if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                    is_real = true;
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                let text: String = chars[start..i].iter().collect();
                let tok = if is_real {
                    Tok::Real(text.parse().map_err(|_| syntax(line, col, "bad number"))?)
                } else {
                    match text.parse::<i64>() {
                        Ok(n) => Tok::Int(n),
                        Err(_) => Tok::Real(text.parse().map_err(|_| syntax(line, col, "bad number"))?),
                    }
                };
                out.push(Token { tok, line, col });
                continue;
            }
            if c.is_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Token {
                    tok: Tok::Ident(chars[start..i].iter().collect()),
                    line,
                    col,
                });
                continue;
            }
            if c == '\'' || c == '"' {
                let quote = c;
                i += 1;
                let mut s = String::new();
                loop {
                    match chars.get(i) {
                        None => return Err(syntax(line, col, "unterminated string")),
                        Some(&ch) if ch == quote => {
                            i += 1;
                            break;
                        }
                        Some('\\') => {
                            let esc = chars.get(i + 1).ok_or_else(|| syntax(line, col, "unterminated string"))?;
                            s.push(match esc {
                                'n' => '\n',
                                't' => '\t',
                                other => *other,
                            });
                            i += 2;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                out.push(Token { tok: Tok::Str(s), line, col });
                continue;
            }
            let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
            let sym = SYMBOLS
                .iter()
                .find(|s| rest.starts_with(**s))
                .ok_or_else(|| syntax(line, col, format!("unexpected character `{c}`")))?;
            match *sym {
                "(" | "[" => depth += 1,
                ")" | "]" => depth = depth.saturating_sub(1),
                _ => {}
            }
            out.push(Token { tok: Tok::Sym(sym), line, col });
            i += sym.len();
        }
        // Newlines inside brackets continue the statement.
        if depth == 0 && out.last().is_some_and(|t| t.tok != Tok::Newline) {
            out.push(Token { tok: Tok::Newline, line, col: chars.len() + 1 });
        }
    }
    if out.last().is_some_and(|t| t.tok != Tok::Newline) {
        let last = out.last().unwrap();
        let (line, col) = (last.line, last.col + 1);
        out.push(Token { tok: Tok::Newline, line, col });
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    last_line: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn here(&self) -> (usize, usize) {
        match self.toks.get(self.pos) {
            Some(t) => (t.line, t.col),
            None => (self.last_line, 1),
        }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ScriptError> {
        let (l, c) = self.here();
        Err(syntax(l, c, msg))
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.tok.clone());
        self.pos += 1;
        t
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Sym(x)) if *x == s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), ScriptError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`"))
        }
    }

    fn eat_keyword(&mut self, k: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Ident(x)) if x == k) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn statement(&mut self) -> Result<Stmt, ScriptError> {
        let (line, _) = self.here();
        if self.eat_keyword("use") {
            let mut names = Vec::new();
            loop {
                match self.bump() {
                    Some(Tok::Ident(n)) => names.push(n),
                    _ => {
                        self.pos -= 1;
                        return self.err("expected a capability name after `use`");
                    }
                }
                if !self.eat_sym(",") {
                    break;
                }
            }
            self.end_of_statement()?;
            return Ok(Stmt::Use { names, line });
        }
        let name = match self.bump() {
            Some(Tok::Ident(n)) if !is_keyword(&n) => n,
            _ => {
                self.pos -= 1;
                return self.err("expected `name = expression` or `use ...`");
            }
        };
        self.expect_sym("=")?;
        if matches!(self.peek(), Some(Tok::Newline) | None) {
            return self.err("expected an expression after `=`");
        }
        let expr = self.expr()?;
        self.end_of_statement()?;
        Ok(Stmt::Assign { name, expr, line })
    }

    fn end_of_statement(&mut self) -> Result<(), ScriptError> {
        match self.peek() {
            Some(Tok::Newline) => {
                self.pos += 1;
                Ok(())
            }
            None => Ok(()),
            _ => self.err("expected end of line"),
        }
    }

    fn expr(&mut self) -> Result<Expr, ScriptError> {
        self.or_expr()
    }

    fn or_expr(&mut self) -> Result<Expr, ScriptError> {
        let mut lhs = self.and_expr()?;
        while self.eat_keyword("or") {
            let rhs = self.and_expr()?;
            lhs = Expr::Binary { op: BinOp::Or, lhs: Box::new(lhs), rhs: Box::new(rhs) };
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr, ScriptError> {
        let mut lhs = self.not_expr()?;
        while self.eat_keyword("and") {
            let rhs = self.not_expr()?;
            lhs = Expr::Binary { op: BinOp::And, lhs: Box::new(lhs), rhs: Box::new(rhs) };
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> Result<Expr, ScriptError> {
        if self.eat_keyword("not") {
            let e = self.not_expr()?;
            return Ok(Expr::Unary { op: UnOp::Not, expr: Box::new(e) });
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Expr, ScriptError> {
        let lhs = self.additive()?;
        let op = match self.peek() {
            Some(Tok::Sym("==")) => BinOp::Eq,
            Some(Tok::Sym("!=")) => BinOp::Ne,
            Some(Tok::Sym("<")) => BinOp::Lt,
            Some(Tok::Sym("<=")) => BinOp::Le,
            Some(Tok::Sym(">")) => BinOp::Gt,
            Some(Tok::Sym(">=")) => BinOp::Ge,
            _ => return Ok(lhs),
        };
        self.pos += 1;
        let rhs = self.additive()?;
        Ok(Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) })
    }

    fn additive(&mut self) -> Result<Expr, ScriptError> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Sym("+")) => BinOp::Add,
                Some(Tok::Sym("-")) => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.multiplicative()?;
            lhs = Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) };
        }
    }

    fn multiplicative(&mut self) -> Result<Expr, ScriptError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Sym("*")) => BinOp::Mul,
                Some(Tok::Sym("/")) => BinOp::Div,
                Some(Tok::Sym("%")) => BinOp::Rem,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) };
        }
    }

    fn unary(&mut self) -> Result<Expr, ScriptError> {
        if self.eat_sym("-") {
            let e = self.unary()?;
            return Ok(Expr::Unary { op: UnOp::Neg, expr: Box::new(e) });
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<Expr, ScriptError> {
        let mut e = self.primary()?;
        while self.eat_sym("[") {
            let idx = self.expr()?;
            self.expect_sym("]")?;
            e = Expr::Index { target: Box::new(e), index: Box::new(idx) };
        }
        Ok(e)
    }

    fn primary(&mut self) -> Result<Expr, ScriptError> {
        match self.bump() {
            Some(Tok::Int(i)) => Ok(Expr::Lit(Value::int(i))),
            Some(Tok::Real(r)) => Ok(Expr::Lit(Value::real(r))),
            Some(Tok::Str(s)) => Ok(Expr::Lit(Value::Text(s))),
            Some(Tok::Sym("(")) => {
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Some(Tok::Sym("[")) => {
                let items = self.comma_list("]")?;
                Ok(Expr::List(items))
            }
            Some(Tok::Ident(name)) => match name.as_str() {
                "true" => Ok(Expr::Lit(Value::Bool(true))),
                "false" => Ok(Expr::Lit(Value::Bool(false))),
                "null" => Ok(Expr::Lit(Value::Null)),
                k if is_keyword(k) => {
                    self.pos -= 1;
                    self.err(format!("unexpected keyword `{k}`"))
                }
                _ => {
                    if self.eat_sym("(") {
                        let args = self.comma_list(")")?;
                        Ok(Expr::Call { name, args })
                    } else {
                        Ok(Expr::Var(name))
                    }
                }
            },
            _ => {
                self.pos -= 1;
                self.err("expected an expression")
            }
        }
    }

    fn comma_list(&mut self, close: &str) -> Result<Vec<Expr>, ScriptError> {
        let mut items = Vec::new();
        if self.eat_sym(close) {
            return Ok(items);
        }
        loop {
            items.push(self.expr()?);
            if self.eat_sym(close) {
                return Ok(items);
            }
            self.expect_sym(",")?;
        }
    }
}

fn is_keyword(s: &str) -> bool {
    matches!(s, "use" | "and" | "or" | "not" | "true" | "false" | "null")
}

/// Grammar-only pass: statements without capability or builtin checks.
pub fn parse_statements(source: &str) -> Result<Vec<Stmt>, ScriptError> {
    let toks = lex(source)?;
    let last_line = toks.last().map(|t| t.line).unwrap_or(1);
    let mut p = Parser { toks, pos: 0, last_line };
    let mut out = Vec::new();
    while p.peek().is_some() {
        out.push(p.statement()?);
    }
    Ok(out)
}

fn check_calls(e: &Expr, line: usize, imported: &BTreeSet<Capability>) -> Result<(), ScriptError> {
    match e {
        Expr::Lit(_) | Expr::Var(_) => Ok(()),
        Expr::Call { name, args } => {
            let spec = builtins::lookup(name).ok_or_else(|| ScriptError::UnknownBuiltin {
                line,
                name: name.clone(),
            })?;
            if spec.capability != Capability::Core && !imported.contains(&spec.capability) {
                return Err(ScriptError::CapabilityNotImported {
                    line,
                    name: name.clone(),
                    capability: spec.capability.as_str().to_string(),
                });
            }
            if args.len() < spec.min_args || args.len() > spec.max_args {
                return Err(syntax(
                    line,
                    1,
                    format!(
                        "`{name}` takes {} argument(s), got {}",
                        if spec.min_args == spec.max_args {
                            spec.min_args.to_string()
                        } else {
                            format!("{}-{}", spec.min_args, spec.max_args)
                        },
                        args.len()
                    ),
                ));
            }
            args.iter().try_for_each(|a| check_calls(a, line, imported))
        }
        Expr::List(items) => items.iter().try_for_each(|a| check_calls(a, line, imported)),
        Expr::Index { target, index } => {
            check_calls(target, line, imported)?;
            check_calls(index, line, imported)
        }
        Expr::Unary { expr, .. } => check_calls(expr, line, imported),
        Expr::Binary { lhs, rhs, .. } => {
            check_calls(lhs, line, imported)?;
            check_calls(rhs, line, imported)
        }
    }
}

/// Parses and checks a script: builtins must exist and gated ones must be
/// imported by an earlier `use`.
pub fn parse_script(source: &str) -> Result<Program, ScriptError> {
    let statements = parse_statements(source)?;
    let mut imported = BTreeSet::new();
    for stmt in &statements {
        match stmt {
            Stmt::Use { names, line } => {
                for n in names {
                    let cap = Capability::from_name(n).ok_or_else(|| ScriptError::UnknownCapability {
                        line: *line,
                        name: n.clone(),
                    })?;
                    imported.insert(cap);
                }
            }
            Stmt::Assign { expr, line, .. } => check_calls(expr, *line, &imported)?,
        }
    }
    Ok(Program { statements, imports: imported })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_statement_program() {
        let p = parse_script(
            "use dates\nd = days_between(col(df,'filing_date'), col(df,'patent_issue_date'))\nans = mean(d)",
        )
        .unwrap();
        assert_eq!(p.statements.len(), 3);
        assert!(p.imports.contains(&Capability::Dates));
    }

    #[test]
    fn dangling_assignment_is_syntax_error_on_line_one() {
        match parse_script("x = ") {
            Err(ScriptError::Syntax { line, .. }) => assert_eq!(line, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn gated_builtin_needs_use() {
        assert!(matches!(
            parse_script("y = year(col(df,'filing_date'))"),
            Err(ScriptError::CapabilityNotImported { .. })
        ));
        // Importing after the call is too late.
        assert!(matches!(
            parse_script("y = year(col(df,'filing_date'))\nuse dates"),
            Err(ScriptError::CapabilityNotImported { .. })
        ));
    }

    #[test]
    fn unknown_builtin_and_capability() {
        assert!(matches!(parse_script("x = open('f')"), Err(ScriptError::UnknownBuiltin { .. })));
        assert!(matches!(parse_script("use os"), Err(ScriptError::UnknownCapability { .. })));
    }

    #[test]
    fn brackets_span_lines_and_comments_are_ignored() {
        let p = parse_script("# header\nx = [1,\n  2, # two\n  3]\ny = x[0]").unwrap();
        assert_eq!(p.statements.len(), 2);
    }

    #[test]
    fn precedence_of_boolean_operators() {
        let stmts = parse_statements("x = not a == 1 and b or c").unwrap();
        match &stmts[0] {
            Stmt::Assign { expr: Expr::Binary { op: BinOp::Or, lhs, .. }, .. } => {
                assert!(matches!(**lhs, Expr::Binary { op: BinOp::And, .. }));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn arity_is_checked() {
        assert!(matches!(parse_script("x = len(1, 2)"), Err(ScriptError::Syntax { .. })));
    }
}
