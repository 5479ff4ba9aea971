//! The small data-frame language: statements, row selectors and the
//! static metadata (input files, train/test variables) the checks need.

mod parser;
mod print;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use parser::{parse_program, ParseError};

/// A row bound: a natural constant, `symbol + offset`, or the open end.
///
/// Symbols stand for data-dependent naturals (a split point, a row count).
/// `Sym { offset }` may be negative, but the whole expression always denotes
/// a natural under admissible valuations.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RowExpr {
    Const(u64),
    Sym { name: String, offset: i64 },
    Inf,
}

impl RowExpr {
    pub fn sym(name: impl Into<String>, offset: i64) -> Self {
        RowExpr::Sym {
            name: name.into(),
            offset,
        }
    }

    pub fn is_symbolic(&self) -> bool {
        matches!(self, RowExpr::Sym { .. })
    }

    /// Adds a signed constant. Constants saturate at zero.
    pub fn shift(&self, by: i64) -> RowExpr {
        match self {
            RowExpr::Const(c) => RowExpr::Const((*c as i64 + by).max(0) as u64),
            RowExpr::Sym { name, offset } => RowExpr::Sym {
                name: name.clone(),
                offset: offset + by,
            },
            RowExpr::Inf => RowExpr::Inf,
        }
    }

    /// The largest constant known to be `<=` this expression.
    pub fn lower_bound(&self) -> u64 {
        match self {
            RowExpr::Const(c) => *c,
            RowExpr::Sym { offset, .. } => (*offset).max(0) as u64,
            RowExpr::Inf => u64::MAX,
        }
    }

    /// Three-valued `self <= other`: `None` when the answer depends on the
    /// valuation of symbols.
    pub fn le(&self, other: &RowExpr) -> Option<bool> {
        use RowExpr::*;
        match (self, other) {
            (_, Inf) => Some(true),
            (Inf, _) => Some(false),
            (Const(a), Const(b)) => Some(a <= b),
            (Sym { name: a, offset: x }, Sym { name: b, offset: y }) if a == b => Some(x <= y),
            (Const(c), Sym { offset, .. }) if *c <= (*offset).max(0) as u64 => Some(true),
            (Sym { offset, .. }, Const(c)) if (*offset).max(0) as u64 > *c => Some(false),
            _ => None,
        }
    }

    pub fn lt(&self, other: &RowExpr) -> Option<bool> {
        other.le(self).map(|b| !b)
    }
}

impl fmt::Display for RowExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowExpr::Const(c) => write!(f, "{c}"),
            RowExpr::Sym { name, offset } if *offset == 0 => write!(f, "{name}"),
            RowExpr::Sym { name, offset } if *offset > 0 => write!(f, "{name}+{offset}"),
            RowExpr::Sym { name, offset } => write!(f, "{name}{offset}"),
            RowExpr::Inf => write!(f, "inf"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RowSelector {
    /// Explicit row indexes, in order; repeats allowed.
    List(Vec<RowExpr>),
    /// Half-open `lo..hi`, like a Python slice. `hi = Inf` runs to the end.
    Range { lo: RowExpr, hi: RowExpr },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MergeOp {
    Concat,
    Join,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Function {
    /// Whole-frame transformation: every output row depends on every input row.
    Normalize,
    /// Any row-wise, non-tainting function.
    Other(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum UseKind {
    Train,
    Test,
}

impl fmt::Display for UseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UseKind::Train => "train",
            UseKind::Test => "test",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Statement {
    Read {
        target: String,
        file: String,
    },
    Select {
        target: String,
        source: String,
        rows: Option<RowSelector>,
        cols: Option<BTreeSet<String>>,
    },
    Merge {
        target: String,
        op: MergeOp,
        left: String,
        right: String,
    },
    Apply {
        target: String,
        func: Function,
        source: String,
    },
    Use {
        kind: UseKind,
        args: BTreeSet<String>,
    },
    /// Both arms are analyzed and their results joined.
    Branch {
        then_body: Vec<Stmt>,
        else_body: Vec<Stmt>,
    },
    /// Body analyzed to a fixpoint.
    Loop { body: Vec<Stmt> },
}

impl Statement {
    pub fn target(&self) -> Option<&str> {
        match self {
            Statement::Read { target, .. }
            | Statement::Select { target, .. }
            | Statement::Merge { target, .. }
            | Statement::Apply { target, .. } => Some(target),
            _ => None,
        }
    }

    /// Variables read by this statement (not descending into blocks).
    pub fn reads(&self) -> Vec<&str> {
        match self {
            Statement::Read { .. } | Statement::Branch { .. } | Statement::Loop { .. } => vec![],
            Statement::Select { source, .. } | Statement::Apply { source, .. } => vec![source],
            Statement::Merge { left, right, .. } => vec![left, right],
            Statement::Use { args, .. } => args.iter().map(String::as_str).collect(),
        }
    }

    /// Calls `f` with the variable names of this statement, renamed in place.
    pub fn rename_vars(&mut self, f: &mut impl FnMut(&mut String, bool)) {
        match self {
            Statement::Read { target, .. } => f(target, true),
            Statement::Select { target, source, .. } | Statement::Apply { target, source, .. } => {
                f(source, false);
                f(target, true);
            }
            Statement::Merge {
                target,
                left,
                right,
                ..
            } => {
                f(left, false);
                f(right, false);
                f(target, true);
            }
            Statement::Use { args, .. } => {
                *args = std::mem::take(args)
                    .into_iter()
                    .map(|mut a| {
                        f(&mut a, false);
                        a
                    })
                    .collect();
            }
            Statement::Branch {
                then_body,
                else_body,
            } => {
                for s in then_body.iter_mut().chain(else_body.iter_mut()) {
                    s.node.rename_vars(f);
                }
            }
            Statement::Loop { body } => {
                for s in body {
                    s.node.rename_vars(f);
                }
            }
        }
    }
}

/// A statement with its source line. The line is location metadata and does
/// not take part in equality.
#[derive(Clone, Debug, Eq, Serialize, Deserialize)]
pub struct Stmt {
    pub line: usize,
    pub node: Statement,
}

impl PartialEq for Stmt {
    fn eq(&self, other: &Self) -> bool {
        self.node == other.node
    }
}

impl Stmt {
    pub fn new(line: usize, node: Statement) -> Self {
        Stmt { line, node }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Program {
    pub statements: Vec<Stmt>,
}

impl Program {
    pub fn new(statements: Vec<Stmt>) -> Self {
        Program { statements }
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }
}

fn walk<'a>(stmts: &'a [Stmt], f: &mut impl FnMut(&'a Statement)) {
    for s in stmts {
        f(&s.node);
        match &s.node {
            Statement::Branch {
                then_body,
                else_body,
            } => {
                walk(then_body, f);
                walk(else_body, f);
            }
            Statement::Loop { body } => walk(body, f),
            _ => {}
        }
    }
}

/// Every statement of `stmts`, including those nested in blocks, in order.
pub fn for_each_statement<'a>(stmts: &'a [Stmt], mut f: impl FnMut(&'a Statement)) {
    walk(stmts, &mut f);
}

/// Files read by `read` statements.
pub fn input_sources(p: &Program) -> BTreeSet<String> {
    let mut files = BTreeSet::new();
    for_each_statement(&p.statements, |s| {
        if let Statement::Read { file, .. } = s {
            files.insert(file.clone());
        }
    });
    files
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct UsedVars {
    pub train: BTreeSet<String>,
    pub test: BTreeSet<String>,
}

pub fn used_vars(p: &Program) -> UsedVars {
    let mut used = UsedVars::default();
    for_each_statement(&p.statements, |s| {
        if let Statement::Use { kind, args } = s {
            let set = match kind {
                UseKind::Train => &mut used.train,
                UseKind::Test => &mut used.test,
            };
            set.extend(args.iter().cloned());
        }
    });
    used
}

/// Variables read before being assigned in `stmts`, in first-use order.
pub fn free_variables(stmts: &[Stmt]) -> Vec<String> {
    fn go(stmts: &[Stmt], bound: &mut BTreeSet<String>, free: &mut Vec<String>) {
        for s in stmts {
            for r in s.node.reads() {
                if !bound.contains(r) && !free.iter().any(|f| f == r) {
                    free.push(r.to_string());
                }
            }
            match &s.node {
                Statement::Branch {
                    then_body,
                    else_body,
                } => {
                    let mut b1 = bound.clone();
                    go(then_body, &mut b1, free);
                    let mut b2 = bound.clone();
                    go(else_body, &mut b2, free);
                    // Only names bound on both arms are definitely bound.
                    bound.extend(b1.intersection(&b2).cloned());
                }
                Statement::Loop { body } => {
                    let mut b = bound.clone();
                    go(body, &mut b, free);
                }
                node => {
                    if let Some(t) = node.target() {
                        bound.insert(t.to_string());
                    }
                }
            }
        }
    }
    let mut free = Vec::new();
    go(stmts, &mut BTreeSet::new(), &mut free);
    free
}
