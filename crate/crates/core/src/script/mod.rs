//! A small sandboxed table-scripting language.
//!
//! Scripts are sequences of assignments. Builtins outside `core` have to be
//! imported with `use` before they are called. Evaluation is metered by a
//! step budget so that a runaway script fails instead of hanging.

use std::collections::BTreeSet;

use thiserror::Error;

mod builtins;
mod interp;
mod parse;

pub use builtins::{lookup, BuiltinSpec, Capability, BUILTINS};
pub use interp::run;
pub use parse::{parse_script, parse_statements, BinOp, Expr, Stmt, UnOp};

pub const DEFAULT_STEP_BUDGET: u64 = 5_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub statements: Vec<Stmt>,
    pub imports: BTreeSet<Capability>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScriptError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: unknown builtin `{name}`")]
    UnknownBuiltin { line: usize, name: String },
    #[error("line {line}: `{name}` needs `use {capability}`")]
    CapabilityNotImported {
        line: usize,
        name: String,
        capability: String,
    },
    #[error("line {line}: unknown capability `{name}`")]
    UnknownCapability { line: usize, name: String },
    #[error("line {line}: undefined variable `{name}`")]
    UndefinedVariable { line: usize, name: String },
    #[error("line {line}: type mismatch: {message}")]
    TypeMismatch { line: usize, message: String },
    #[error("line {line}: {function} of an empty collection")]
    EmptyAggregate { line: usize, function: String },
    #[error("line {line}: division by zero")]
    DivisionByZero { line: usize },
    #[error("line {line}: {message}")]
    IndexOutOfRange { line: usize, message: String },
    #[error("step budget of {budget} exceeded")]
    BudgetExceeded { budget: u64 },
}
