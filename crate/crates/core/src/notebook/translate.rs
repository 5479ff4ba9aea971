//! Python cell source to data-frame statements.
//!
//! Only calls the knowledge base knows about produce statements. Everything
//! else is dropped with a warning, which makes the translation (and so the
//! analysis of a notebook) unsound for code outside that subset.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use rustpython_parser::ast::{self, Constant, Expr, Ranged};
use rustpython_parser::Parse;

use super::inline::{FunctionDef, FunctionTable, InlineFrame};
use super::kb::{CallClass, KnowledgeBase};
use crate::lang::{Function, MergeOp, RowExpr, RowSelector, Statement, Stmt, UseKind};

/// What the rest of the notebook tells the translation of one cell.
#[derive(Clone, Debug, Default)]
pub struct Scope {
    /// Names that some cell binds to a data frame.
    pub frames: BTreeSet<String>,
    /// Names bound to normalizing transformers.
    pub scalers: BTreeSet<String>,
    /// Import aliases: local name to dotted module or object path.
    pub modules: BTreeMap<String, String>,
    /// Functions available for inlining.
    pub functions: FunctionTable,
    /// When set, an argument of a train or test call only counts as data
    /// if it is known to be a frame. Otherwise any bare name does.
    pub closed: bool,
}

/// The result of translating one cell.
#[derive(Clone, Debug, Default)]
pub struct Translation {
    pub statements: Vec<Stmt>,
    pub warnings: Vec<String>,
    /// Base name to the SSA name holding its last value.
    pub exports: BTreeMap<String, String>,
    pub frames: BTreeSet<String>,
    pub scalers: BTreeSet<String>,
    pub modules: BTreeMap<String, String>,
    pub functions: FunctionTable,
    pub parse_error: bool,
}

/// Accessors and attributes of a frame that are not columns.
const NON_COLUMN_ATTRS: &[&str] = &[
    "shape", "columns", "index", "dtypes", "size", "ndim", "empty", "iloc", "loc", "iat", "at", "plot", "str",
];
/// Builtins that never return a data frame.
const SCALAR_BUILTINS: &[&str] = &[
    "len", "print", "int", "float", "str", "bool", "round", "sum", "max", "min", "list", "range", "type",
    "isinstance", "display", "enumerate", "zip", "dict", "set", "tuple", "sorted", "abs", "repr", "format",
];

/// Replaces IPython magics and shell escapes by blank lines so line
/// numbers are kept.
pub fn strip_magics(source: &str) -> String {
    source
        .lines()
        .map(|l| {
            let t = l.trim_start();
            if t.starts_with('%') || t.starts_with('!') || (t.ends_with('?') && !t.starts_with('#')) {
                ""
            } else {
                l
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Translates a cell on its own, with no knowledge of other cells.
pub fn translate_source(source: &str, kb: &KnowledgeBase) -> Translation {
    translate_in(source, kb, &Scope::default(), "cell")
}

/// Translates a cell given what the other cells define. `cell` names the
/// cell in generated symbols.
pub fn translate_in(source: &str, kb: &KnowledgeBase, scope: &Scope, cell: &str) -> Translation {
    let text = strip_magics(source);
    let suite = match ast::Suite::parse(&text, "<cell>") {
        Ok(s) => s,
        Err(e) => {
            return Translation {
                warnings: vec![format!("parse error: {e}")],
                parse_error: true,
                ..Translation::default()
            }
        }
    };
    let src: Arc<str> = Arc::from(text.as_str());
    let mut t = Translator::new(kb, scope, cell, src);
    t.block(&suite);
    t.finish()
}

#[derive(Clone, Debug)]
pub(super) enum Dest {
    Temp,
    /// A variable of the program, at the given inlining level.
    Var { base: String, level: usize },
}

enum RowKey {
    All,
    Rows(RowSelector),
    /// Rows picked by something we cannot read (a mask, a variable).
    Filter,
}

enum Bound {
    At(RowExpr),
    FromEnd,
}

enum Callee<'e> {
    Module {
        class: CallClass,
        op: Option<MergeOp>,
        func: String,
    },
    Method {
        class: CallClass,
        op: Option<MergeOp>,
        func: String,
        recv: &'e Expr,
        frame_recv: bool,
    },
    User(String),
    Unknown {
        func: String,
        recv: Option<&'e Expr>,
    },
}

#[derive(Default)]
struct Uses {
    train: BTreeSet<String>,
    test: BTreeSet<String>,
}

pub(super) struct Translator<'a> {
    kb: &'a KnowledgeBase,
    scope: &'a Scope,
    cell: String,
    pub(super) src: Arc<str>,
    line_starts: Vec<usize>,
    line: usize,
    versions: HashMap<String, usize>,
    seen: BTreeSet<String>,
    depth: usize,
    local_frames: BTreeSet<String>,
    local_nonframes: BTreeSet<String>,
    local_scalers: BTreeSet<String>,
    modules: BTreeMap<String, String>,
    pub(super) functions: FunctionTable,
    columns: HashMap<String, BTreeSet<String>>,
    temps: usize,
    pub(super) warnings: Vec<String>,
    out: Vec<Vec<Stmt>>,
    pub(super) inlining: Vec<InlineFrame>,
}

fn line_starts(src: &str) -> Vec<usize> {
    std::iter::once(0)
        .chain(src.match_indices('\n').map(|(i, _)| i + 1))
        .collect()
}

/// A boolean row mask such as `df['x'] > 3` or `(a > 1) & ~b`.
fn is_mask(e: &Expr) -> bool {
    match e {
        Expr::Compare(_) | Expr::BoolOp(_) => true,
        Expr::UnaryOp(u) => matches!(u.op, ast::UnaryOp::Invert | ast::UnaryOp::Not) && is_mask(&u.operand),
        Expr::BinOp(b) => matches!(b.op, ast::Operator::BitAnd | ast::Operator::BitOr) && (is_mask(&b.left) || is_mask(&b.right)),
        _ => false,
    }
}

fn name_of(e: &Expr) -> Option<&str> {
    match e {
        Expr::Name(n) => Some(n.id.as_str()),
        _ => None,
    }
}

fn str_const(e: &Expr) -> Option<String> {
    match e {
        Expr::Constant(ast::ExprConstant {
            value: Constant::Str(s), ..
        }) => Some(s.clone()),
        _ => None,
    }
}

fn str_list(e: &Expr) -> Option<BTreeSet<String>> {
    match e {
        Expr::List(ast::ExprList { elts, .. }) | Expr::Tuple(ast::ExprTuple { elts, .. }) => {
            elts.iter().map(str_const).collect()
        }
        _ => str_const(e).map(|s| BTreeSet::from([s])),
    }
}

fn int_const(e: &Expr) -> Option<i64> {
    match e {
        Expr::Constant(ast::ExprConstant {
            value: Constant::Int(i), ..
        }) => i.to_string().parse().ok(),
        Expr::UnaryOp(ast::ExprUnaryOp {
            op: ast::UnaryOp::USub,
            operand,
            ..
        }) => int_const(operand).map(|v| -v),
        _ => None,
    }
}

fn keyword<'e>(call: &'e ast::ExprCall, name: &str) -> Option<&'e Expr> {
    call.keywords
        .iter()
        .find(|k| k.arg.as_ref().is_some_and(|a| a.as_str() == name))
        .map(|k| &k.value)
}

fn is_true(e: Option<&Expr>) -> bool {
    matches!(
        e,
        Some(Expr::Constant(ast::ExprConstant {
            value: Constant::Bool(true),
            ..
        }))
    )
}

fn ns_of(path: &str) -> &str {
    path.split('.').next().unwrap_or(path)
}

fn default_module(name: &str) -> Option<&'static str> {
    match name {
        "pd" | "pandas" => Some("pandas"),
        "np" | "numpy" => Some("numpy"),
        "sklearn" => Some("sklearn"),
        _ => None,
    }
}

impl<'a> Translator<'a> {
    fn new(kb: &'a KnowledgeBase, scope: &'a Scope, cell: &str, src: Arc<str>) -> Self {
        Translator {
            kb,
            scope,
            cell: cell.to_string(),
            line_starts: line_starts(&src),
            src,
            line: 1,
            versions: HashMap::new(),
            seen: BTreeSet::new(),
            depth: 0,
            local_frames: BTreeSet::new(),
            local_nonframes: BTreeSet::new(),
            local_scalers: BTreeSet::new(),
            modules: BTreeMap::new(),
            functions: FunctionTable::default(),
            columns: HashMap::new(),
            temps: 0,
            warnings: Vec::new(),
            out: vec![Vec::new()],
            inlining: Vec::new(),
        }
    }

    fn finish(mut self) -> Translation {
        let exports = self
            .versions
            .iter()
            .filter(|(b, v)| **v > 0 && !b.contains('.'))
            .map(|(b, v)| (b.clone(), format!("{b}{}", "'".repeat(*v))))
            .collect();
        Translation {
            statements: self.out.pop().unwrap_or_default(),
            warnings: self.warnings,
            exports,
            frames: self.local_frames,
            scalers: self.local_scalers,
            modules: self.modules,
            functions: self.functions,
            parse_error: false,
        }
    }

    fn warn(&mut self, msg: impl std::fmt::Display) {
        let w = format!("line {}: {msg}", self.line);
        if !self.warnings.contains(&w) {
            self.warnings.push(w);
        }
    }

    fn text(&self, e: &Expr) -> String {
        let r = e.range();
        self.src
            .get(usize::from(r.start())..usize::from(r.end()))
            .unwrap_or("?")
            .chars()
            .filter(|c| !c.is_whitespace())
            .collect()
    }

    fn emit(&mut self, node: Statement) {
        let s = Stmt::new(self.line, node);
        self.out.last_mut().expect("an open block").push(s);
    }

    // ---- names ----

    fn level(&self) -> usize {
        self.inlining.len()
    }

    fn qualify(&self, base: &str, level: usize) -> String {
        match level {
            0 => base.to_string(),
            l => format!("{}.{base}", self.inlining[l - 1].name),
        }
    }

    fn versioned(&self, q: &str) -> String {
        format!("{q}{}", "'".repeat(self.versions.get(q).copied().unwrap_or(0)))
    }

    fn read_name(&mut self, base: &str) -> String {
        if let Some(frame) = self.inlining.last() {
            if let Some(v) = frame.bindings.get(base) {
                return v.clone();
            }
        }
        let q = self.qualify(base, self.level());
        self.seen.insert(q.clone());
        self.versioned(&q)
    }

    fn assign_name(&mut self, base: &str, level: usize) -> String {
        if level > 0 {
            self.inlining[level - 1].bindings.remove(base);
        }
        let q = self.qualify(base, level);
        if self.seen.contains(&q) && self.depth == 0 {
            *self.versions.entry(q.clone()).or_insert(0) += 1;
        }
        self.seen.insert(q.clone());
        if level == 0 {
            self.local_frames.insert(base.to_string());
            self.local_nonframes.remove(base);
        }
        self.versioned(&q)
    }

    pub(super) fn bind(&mut self, d: &Dest) -> String {
        match d {
            Dest::Temp => {
                self.temps += 1;
                format!("_t{}", self.temps)
            }
            Dest::Var { base, level } => self.assign_name(base, *level),
        }
    }

    pub(super) fn var(&self, base: &str) -> Dest {
        Dest::Var {
            base: base.to_string(),
            level: self.level(),
        }
    }

    fn known_frame(&self, n: &str) -> bool {
        if let Some(frame) = self.inlining.last() {
            return frame.bindings.contains_key(n) || frame.locals.contains(n);
        }
        self.local_frames.contains(n) || (!self.local_nonframes.contains(n) && self.scope.frames.contains(n))
    }

    fn is_scaler_name(&self, n: &str) -> bool {
        self.local_scalers.contains(n) || (!self.local_frames.contains(n) && self.scope.scalers.contains(n))
    }

    fn module_path(&self, e: &Expr) -> Option<String> {
        match e {
            Expr::Name(n) => {
                let n = n.id.as_str();
                if self.known_frame(n) {
                    return None;
                }
                self.modules
                    .get(n)
                    .or_else(|| self.scope.modules.get(n))
                    .cloned()
                    .or_else(|| default_module(n).map(str::to_string))
            }
            Expr::Attribute(a) => self.module_path(&a.value).map(|p| format!("{p}.{}", a.attr)),
            _ => None,
        }
    }

    pub(super) fn function(&self, name: &str) -> Option<FunctionDef> {
        self.functions.get(name).or_else(|| self.scope.functions.get(name)).cloned()
    }

    // ---- classification ----

    fn callee<'e>(&self, call: &'e ast::ExprCall) -> Callee<'e> {
        match call.func.as_ref() {
            Expr::Name(n) => {
                let f = n.id.as_str();
                if self.function(f).is_some() {
                    return Callee::User(f.to_string());
                }
                let imported = self.modules.get(f).or_else(|| self.scope.modules.get(f));
                let entry = match imported {
                    Some(path) => self.kb.lookup(&[ns_of(path)], f),
                    None => self.kb.lookup(&["pandas", "sklearn"], f),
                };
                match entry {
                    Some(e) => Callee::Module {
                        class: e.class,
                        op: e.op,
                        func: f.to_string(),
                    },
                    None => Callee::Unknown {
                        func: f.to_string(),
                        recv: None,
                    },
                }
            }
            Expr::Attribute(a) => {
                let attr = a.attr.as_str();
                let recv = a.value.as_ref();
                if let Some(path) = self.module_path(recv) {
                    return match self.kb.lookup(&[ns_of(&path)], attr) {
                        Some(e) => Callee::Module {
                            class: e.class,
                            op: e.op,
                            func: attr.to_string(),
                        },
                        None => Callee::Unknown {
                            func: format!("{path}.{attr}"),
                            recv: None,
                        },
                    };
                }
                let method = |class, op, frame_recv| Callee::Method {
                    class,
                    op,
                    func: attr.to_string(),
                    recv,
                    frame_recv,
                };
                if self.is_frame(recv) {
                    return match self.kb.get("pandas.DataFrame", attr) {
                        Some(e) => method(e.class, e.op, true),
                        None => Callee::Unknown {
                            func: attr.to_string(),
                            recv: Some(recv),
                        },
                    };
                }
                let estimator = if self.is_scaler(recv) {
                    self.kb.lookup(&["sklearn.scaler", "sklearn.estimator"], attr)
                } else {
                    self.kb.get("sklearn.estimator", attr)
                };
                match (estimator, self.kb.get("pandas.DataFrame", attr)) {
                    (Some(e), _) => method(e.class, e.op, false),
                    (None, Some(e)) if name_of(recv).is_some() => method(e.class, e.op, true),
                    _ => Callee::Unknown {
                        func: attr.to_string(),
                        recv: None,
                    },
                }
            }
            _ => Callee::Unknown {
                func: self.text(&call.func),
                recv: None,
            },
        }
    }

    fn is_scaler(&self, e: &Expr) -> bool {
        match e {
            Expr::Name(n) => self.is_scaler_name(n.id.as_str()),
            Expr::Call(c) => matches!(
                self.callee(c),
                Callee::Module {
                    class: CallClass::Scaler,
                    ..
                }
            ),
            _ => false,
        }
    }

    /// Whether `e` evaluates to a data frame.
    pub(super) fn is_frame(&self, e: &Expr) -> bool {
        match e {
            Expr::Name(n) => self.known_frame(n.id.as_str()),
            Expr::Subscript(s) => match s.value.as_ref() {
                Expr::Attribute(a) if matches!(a.attr.as_str(), "iloc" | "loc") => self.frame_like(&a.value),
                v => {
                    self.is_frame(v)
                        || (name_of(v).is_some() && matches!(s.slice.as_ref(), Expr::List(_)))
                        || (self.frame_like(v) && is_mask(&s.slice))
                }
            },
            Expr::Attribute(a) => !NON_COLUMN_ATTRS.contains(&a.attr.as_str()) && self.is_frame(&a.value),
            Expr::Call(c) => match self.callee(c) {
                Callee::Module { class, .. } => match class {
                    CallClass::Source | CallClass::Merge | CallClass::Normalize => true,
                    CallClass::Other => c.args.iter().any(|a| self.frame_like(a)),
                    _ => false,
                },
                Callee::Method {
                    class, frame_recv, ..
                } => match class {
                    CallClass::Select | CallClass::Merge => frame_recv,
                    CallClass::Other => frame_recv || c.args.first().is_some_and(|a| self.frame_like(a)),
                    CallClass::Normalize => !c.args.is_empty(),
                    _ => false,
                },
                Callee::User(_) => c.args.iter().any(|a| self.frame_like(a)),
                Callee::Unknown { func, recv } => match recv {
                    Some(_) => true,
                    None => !SCALAR_BUILTINS.contains(&func.as_str()) && c.args.iter().any(|a| self.is_frame(a)),
                },
            },
            _ => false,
        }
    }

    /// A frame, or a bare name used where only a frame makes sense.
    pub(super) fn frame_like(&self, e: &Expr) -> bool {
        name_of(e).is_some_and(|n| !self.local_nonframes.contains(n) && !self.is_scaler_name(n)) || self.is_frame(e)
    }

    /// An argument of a train or test call that denotes data.
    fn used_frame(&self, e: &Expr) -> bool {
        match name_of(e) {
            Some(n) => {
                self.known_frame(n)
                    || (!self.scope.closed
                        && self.inlining.is_empty()
                        && !self.local_nonframes.contains(n)
                        && !self.is_scaler_name(n))
            }
            None => self.is_frame(e),
        }
    }

    // ---- lowering ----

    fn lower_arg(&mut self, e: &Expr) -> Option<String> {
        match name_of(e) {
            Some(n) => Some(self.read_name(n)),
            None if self.is_frame(e) => self.lower(e, &Dest::Temp),
            None => None,
        }
    }

    /// Emits the statements computing frame expression `e` into `dest` and
    /// returns the variable holding the result.
    pub(super) fn lower(&mut self, e: &Expr, dest: &Dest) -> Option<String> {
        match e {
            Expr::Name(n) => {
                let src = self.read_name(n.id.as_str());
                match dest {
                    Dest::Temp => Some(src),
                    d => Some(self.select(d, src, RowKey::All, None)),
                }
            }
            Expr::Subscript(s) => {
                if let Expr::Attribute(a) = s.value.as_ref() {
                    if matches!(a.attr.as_str(), "iloc" | "loc") {
                        let loc = a.attr.as_str() == "loc";
                        let src = self.lower_arg(&a.value)?;
                        let (rk, ck) = match s.slice.as_ref() {
                            Expr::Tuple(t) if t.elts.len() == 2 => (&t.elts[0], Some(&t.elts[1])),
                            k => (k, None),
                        };
                        let rows = self.row_key(rk, loc);
                        let cols = if loc { ck.and_then(str_list) } else { None };
                        return Some(self.select(dest, src, rows, cols));
                    }
                }
                let src = self.lower_arg(&s.value)?;
                let key = s.slice.as_ref();
                Some(match key {
                    Expr::Slice(_) => {
                        let rows = self.row_key(key, false);
                        self.select(dest, src, rows, None)
                    }
                    k => match str_list(k) {
                        Some(cols) => self.select(dest, src, RowKey::All, Some(cols)),
                        None => self.apply(dest, src, Function::Other("filter".into())),
                    },
                })
            }
            Expr::Attribute(a) => {
                let src = self.lower_arg(&a.value)?;
                let attr = a.attr.as_str();
                Some(match attr {
                    "values" | "T" => self.apply(dest, src, Function::Other(attr.into())),
                    _ => self.select(dest, src, RowKey::All, Some(BTreeSet::from([attr.to_string()]))),
                })
            }
            Expr::Call(c) => self.lower_call(c, dest),
            _ => None,
        }
    }

    fn lower_call(&mut self, c: &ast::ExprCall, dest: &Dest) -> Option<String> {
        match self.callee(c) {
            Callee::Module { class, op, func } => match class {
                CallClass::Source => {
                    let file = c
                        .args
                        .first()
                        .or_else(|| keyword(c, "filepath_or_buffer"))
                        .or_else(|| keyword(c, "io"))
                        .map(|a| str_const(a).unwrap_or_else(|| self.text(a)))
                        .unwrap_or_else(|| "?".into());
                    let target = self.bind(dest);
                    self.emit(Statement::Read {
                        target: target.clone(),
                        file,
                    });
                    Some(target)
                }
                CallClass::Merge => {
                    let parts: Vec<&Expr> = match (op, c.args.first()) {
                        (Some(MergeOp::Concat), Some(Expr::List(l))) => l.elts.iter().collect(),
                        (Some(MergeOp::Concat), Some(Expr::Tuple(t))) => t.elts.iter().collect(),
                        _ => c.args.iter().take(2).collect(),
                    };
                    let axis1 = keyword(c, "axis").and_then(int_const) == Some(1)
                        || keyword(c, "axis").and_then(str_const).as_deref() == Some("columns");
                    let op = if axis1 { MergeOp::Join } else { op.unwrap_or(MergeOp::Join) };
                    let vars: Vec<String> = parts.into_iter().filter_map(|p| self.lower_arg(p)).collect();
                    self.merge_all(dest, op, vars)
                }
                CallClass::Normalize => {
                    let src = self.lower_arg(c.args.first()?)?;
                    Some(self.apply(dest, src, Function::Normalize))
                }
                CallClass::Other => {
                    let arg = c.args.iter().find(|a| self.frame_like(a))?;
                    let src = self.lower_arg(arg)?;
                    Some(self.apply(dest, src, Function::Other(func)))
                }
                _ => None,
            },
            Callee::Method {
                class,
                op,
                func,
                recv,
                frame_recv,
            } => match class {
                CallClass::Select if frame_recv => {
                    let src = self.lower_arg(recv)?;
                    Some(self.drop_call(c, dest, src))
                }
                CallClass::Merge if frame_recv => {
                    let left = self.lower_arg(recv)?;
                    let right = self.lower_arg(c.args.first()?)?;
                    self.merge_all(dest, op.unwrap_or(MergeOp::Join), vec![left, right])
                }
                CallClass::Other if frame_recv => {
                    let src = self.lower_arg(recv)?;
                    Some(self.apply(dest, src, Function::Other(func)))
                }
                CallClass::Normalize | CallClass::Other => {
                    let src = self.lower_arg(c.args.first()?)?;
                    let f = if class == CallClass::Normalize {
                        Function::Normalize
                    } else {
                        Function::Other(func)
                    };
                    Some(self.apply(dest, src, f))
                }
                _ => None,
            },
            Callee::User(f) => self.inline_call(&f, c, dest.clone()),
            Callee::Unknown { func, recv } => self.unknown_call(c, dest, &func, recv),
        }
    }

    pub(super) fn unknown_call(
        &mut self,
        c: &ast::ExprCall,
        dest: &Dest,
        func: &str,
        recv: Option<&Expr>,
    ) -> Option<String> {
        let src = match recv {
            Some(r) => {
                self.warn(format_args!("unrecognized call `{}.{func}` treated as other", self.text(r)));
                self.lower_arg(r)?
            }
            None => {
                if self.function(func).is_none() {
                    self.warn(format_args!("call to unknown function `{func}` treated as other"));
                }
                let frames: Vec<&Expr> = c.args.iter().filter(|a| self.is_frame(a)).collect();
                let vars: Vec<String> = frames.into_iter().filter_map(|a| self.lower_arg(a)).collect();
                self.merge_all(&Dest::Temp, MergeOp::Concat, vars)?
            }
        };
        Some(self.apply(dest, src, Function::Other("unknown".into())))
    }

    fn merge_all(&mut self, dest: &Dest, op: MergeOp, vars: Vec<String>) -> Option<String> {
        let mut it = vars.into_iter();
        let mut acc = it.next()?;
        let mut rest: Vec<String> = it.collect();
        if rest.is_empty() {
            return Some(match dest {
                Dest::Temp => acc,
                d => self.select(d, acc, RowKey::All, None),
            });
        }
        let last = rest.pop().expect("non-empty");
        for r in rest {
            let t = self.bind(&Dest::Temp);
            self.emit(Statement::Merge {
                target: t.clone(),
                op,
                left: acc,
                right: r,
            });
            acc = t;
        }
        let target = self.bind(dest);
        self.emit(Statement::Merge {
            target: target.clone(),
            op,
            left: acc,
            right: last,
        });
        Some(target)
    }

    fn drop_call(&mut self, c: &ast::ExprCall, dest: &Dest, src: String) -> String {
        let axis_cols = keyword(c, "axis").and_then(int_const) == Some(1)
            || keyword(c, "axis").and_then(str_const).as_deref() == Some("columns");
        let labels = keyword(c, "columns").or(if axis_cols { c.args.first() } else { None });
        match labels {
            Some(l) => {
                let cols = match (self.columns.get(&src), str_list(l)) {
                    (Some(all), Some(dropped)) => Some(all.difference(&dropped).cloned().collect()),
                    _ => None,
                };
                self.select(dest, src, RowKey::All, cols)
            }
            None => self.apply(dest, src, Function::Other("drop".into())),
        }
    }

    fn select(&mut self, dest: &Dest, src: String, rows: RowKey, cols: Option<BTreeSet<String>>) -> String {
        let (src, rows) = match rows {
            RowKey::All => (src, None),
            RowKey::Rows(r) => (src, Some(r)),
            RowKey::Filter if cols.is_none() => return self.apply(dest, src, Function::Other("filter".into())),
            RowKey::Filter => (self.apply(&Dest::Temp, src, Function::Other("filter".into())), None),
        };
        let universe = match &cols {
            Some(c) => Some(c.clone()),
            None => self.columns.get(&src).cloned(),
        };
        let target = self.bind(dest);
        if let Some(u) = universe {
            self.columns.insert(target.clone(), u);
        } else {
            self.columns.remove(&target);
        }
        self.emit(Statement::Select {
            target: target.clone(),
            source: src,
            rows,
            cols,
        });
        target
    }

    fn apply(&mut self, dest: &Dest, src: String, func: Function) -> String {
        let target = self.bind(dest);
        self.columns.remove(&target);
        self.emit(Statement::Apply {
            target: target.clone(),
            func,
            source: src,
        });
        target
    }

    fn bound(&self, e: &Expr) -> Option<Bound> {
        if let Some(k) = int_const(e) {
            return Some(if k < 0 { Bound::FromEnd } else { Bound::At(RowExpr::Const(k as u64)) });
        }
        match e {
            Expr::Name(n) => Some(Bound::At(RowExpr::sym(n.id.as_str(), 0))),
            Expr::BinOp(b) if matches!(b.op, ast::Operator::Add | ast::Operator::Sub) => {
                let sign = if matches!(b.op, ast::Operator::Add) { 1 } else { -1 };
                let (base, k) = match (int_const(&b.left), int_const(&b.right)) {
                    (_, Some(k)) => (b.left.as_ref(), sign * k),
                    (Some(k), None) if sign == 1 => (b.right.as_ref(), k),
                    _ => return Some(Bound::At(RowExpr::sym(self.text(e), 0))),
                };
                Some(match self.bound(base)? {
                    Bound::At(RowExpr::Const(c)) => {
                        let v = c as i64 + k;
                        if v < 0 {
                            Bound::FromEnd
                        } else {
                            Bound::At(RowExpr::Const(v as u64))
                        }
                    }
                    Bound::At(r) => Bound::At(r.shift(k)),
                    Bound::FromEnd => Bound::FromEnd,
                })
            }
            _ => Some(Bound::At(RowExpr::sym(self.text(e), 0))),
        }
    }

    fn row_key(&self, e: &Expr, inclusive: bool) -> RowKey {
        match e {
            Expr::Slice(s) => {
                if s.step.as_ref().is_some_and(|st| int_const(st) != Some(1)) {
                    return RowKey::Filter;
                }
                let lo = match s.lower.as_deref().map(|l| self.bound(l)) {
                    None => RowExpr::Const(0),
                    Some(Some(Bound::At(r))) => r,
                    Some(_) => RowExpr::Const(0),
                };
                let hi = match s.upper.as_deref().map(|u| self.bound(u)) {
                    None => RowExpr::Inf,
                    Some(Some(Bound::At(r))) if inclusive => r.shift(1),
                    Some(Some(Bound::At(r))) => r,
                    Some(_) => RowExpr::Inf,
                };
                RowKey::Rows(RowSelector::Range { lo, hi })
            }
            Expr::List(l) => {
                let rows: Option<Vec<RowExpr>> = l
                    .elts
                    .iter()
                    .map(|x| match int_const(x) {
                        Some(k) if k >= 0 => Some(RowExpr::Const(k as u64)),
                        _ => None,
                    })
                    .collect();
                rows.map_or(RowKey::Filter, |r| RowKey::Rows(RowSelector::List(r)))
            }
            Expr::Constant(_) | Expr::UnaryOp(_) | Expr::BinOp(_) => match self.bound(e) {
                Some(Bound::At(r)) => RowKey::Rows(RowSelector::List(vec![r])),
                _ => RowKey::Filter,
            },
            Expr::Name(n) if n.id.as_str() == "_" => RowKey::All,
            _ => RowKey::Filter,
        }
    }

    // ---- uses ----

    fn effects(&mut self, e: &Expr, uses: &mut Uses) {
        match e {
            Expr::Call(c) => {
                let kind = match self.callee(c) {
                    Callee::Module { class, .. } | Callee::Method { class, .. } => match class {
                        CallClass::Train => Some(UseKind::Train),
                        CallClass::Test => Some(UseKind::Test),
                        _ => None,
                    },
                    _ => None,
                };
                if let Expr::Attribute(a) = c.func.as_ref() {
                    self.effects(&a.value, uses);
                }
                for a in &c.args {
                    match kind {
                        Some(k) if self.used_frame(a) => {
                            if let Some(v) = self.lower_arg(a) {
                                match k {
                                    UseKind::Train => uses.train.insert(v),
                                    UseKind::Test => uses.test.insert(v),
                                };
                            }
                        }
                        _ => self.effects(a, uses),
                    }
                }
                for k in &c.keywords {
                    self.effects(&k.value, uses);
                }
            }
            Expr::Attribute(a) => self.effects(&a.value, uses),
            Expr::Subscript(s) => {
                self.effects(&s.value, uses);
                self.effects(&s.slice, uses);
            }
            Expr::BinOp(b) => {
                self.effects(&b.left, uses);
                self.effects(&b.right, uses);
            }
            Expr::UnaryOp(u) => self.effects(&u.operand, uses),
            Expr::BoolOp(b) => b.values.iter().for_each(|v| self.effects(v, uses)),
            Expr::Compare(c) => {
                self.effects(&c.left, uses);
                c.comparators.iter().for_each(|v| self.effects(v, uses));
            }
            Expr::List(ast::ExprList { elts, .. }) | Expr::Tuple(ast::ExprTuple { elts, .. }) => {
                elts.iter().for_each(|v| self.effects(v, uses))
            }
            Expr::Dict(d) => d.values.iter().for_each(|v| self.effects(v, uses)),
            Expr::JoinedStr(j) => j.values.iter().for_each(|v| self.effects(v, uses)),
            Expr::FormattedValue(f) => self.effects(&f.value, uses),
            Expr::IfExp(i) => {
                self.effects(&i.body, uses);
                self.effects(&i.orelse, uses);
            }
            _ => {}
        }
    }

    /// Walks `e` for train and test calls, emitting their uses. Returns
    /// whether any were found.
    fn emit_uses(&mut self, e: &Expr) -> bool {
        let mut uses = Uses::default();
        self.effects(e, &mut uses);
        let found = !uses.train.is_empty() || !uses.test.is_empty();
        if !uses.train.is_empty() {
            self.emit(Statement::Use {
                kind: UseKind::Train,
                args: uses.train,
            });
        }
        if !uses.test.is_empty() {
            self.emit(Statement::Use {
                kind: UseKind::Test,
                args: uses.test,
            });
        }
        found
    }

    // ---- statements ----

    pub(super) fn block(&mut self, stmts: &[ast::Stmt]) {
        for s in stmts {
            if self.inlining.last().is_some_and(|f| f.returned) {
                break;
            }
            self.statement(s);
        }
    }

    fn nested(&mut self, stmts: &[ast::Stmt]) -> Vec<Stmt> {
        self.out.push(Vec::new());
        self.depth += 1;
        self.block(stmts);
        self.depth -= 1;
        self.out.pop().unwrap_or_default()
    }

    fn set_line(&mut self, s: &ast::Stmt) {
        if self.inlining.is_empty() {
            let off = usize::from(s.range().start());
            self.line = self.line_starts.partition_point(|&st| st <= off).max(1);
        }
    }

    fn drop_stmt(&mut self) {
        self.warn("non-dataframe statement dropped");
    }

    fn statement(&mut self, s: &ast::Stmt) {
        self.set_line(s);
        match s {
            ast::Stmt::Import(i) => {
                for a in &i.names {
                    let full = a.name.to_string();
                    let local = a.asname.as_ref().map_or_else(|| ns_of(&full).to_string(), |n| n.to_string());
                    let path = if a.asname.is_some() { full } else { ns_of(&full).to_string() };
                    self.modules.insert(local, path);
                }
            }
            ast::Stmt::ImportFrom(i) => {
                let m = i.module.as_ref().map_or(String::new(), |m| m.to_string());
                for a in &i.names {
                    let local = a.asname.as_ref().unwrap_or(&a.name).to_string();
                    self.modules.insert(local, format!("{m}.{}", a.name));
                }
            }
            ast::Stmt::FunctionDef(f) => {
                let def = FunctionDef::from_ast(f, self.src.clone());
                if self.inlining.is_empty() {
                    self.functions.insert(def);
                }
            }
            ast::Stmt::Assign(a) => {
                if let [t] = a.targets.as_slice() {
                    self.assign(t, &a.value);
                } else {
                    for t in &a.targets {
                        self.assign(t, &a.value);
                    }
                }
            }
            ast::Stmt::AnnAssign(a) => match &a.value {
                Some(v) => self.assign(&a.target, v),
                None => {}
            },
            ast::Stmt::AugAssign(a) => match name_of(&a.target) {
                Some(n) if self.known_frame(n) => {
                    let src = self.read_name(n);
                    let d = self.var(n);
                    self.apply(&d, src, Function::Other("update".into()));
                }
                _ => {
                    if !self.emit_uses(&a.value) {
                        self.drop_stmt();
                    }
                }
            },
            ast::Stmt::Expr(e) => self.expression_statement(&e.value),
            ast::Stmt::Return(r) => self.return_stmt(r.value.as_deref()),
            ast::Stmt::If(i) => {
                self.emit_uses(&i.test);
                let then_body = self.nested(&i.body);
                let else_body = self.nested(&i.orelse);
                self.set_line(s);
                if !then_body.is_empty() || !else_body.is_empty() {
                    self.emit(Statement::Branch {
                        then_body,
                        else_body,
                    });
                }
            }
            ast::Stmt::For(f) => {
                self.emit_uses(&f.iter);
                let body = self.nested(&f.body);
                self.set_line(s);
                if !body.is_empty() {
                    self.emit(Statement::Loop { body });
                }
                self.block(&f.orelse);
            }
            ast::Stmt::While(w) => {
                let body = self.nested(&w.body);
                self.set_line(s);
                if !body.is_empty() {
                    self.emit(Statement::Loop { body });
                }
                self.block(&w.orelse);
            }
            ast::Stmt::With(w) => self.block(&w.body),
            ast::Stmt::Try(t) => {
                self.block(&t.body);
                self.block(&t.orelse);
                self.block(&t.finalbody);
            }
            ast::Stmt::Pass(_) => {}
            _ => self.drop_stmt(),
        }
    }

    fn expression_statement(&mut self, e: &Expr) {
        if let Expr::Call(c) = e {
            match self.callee(c) {
                Callee::Method {
                    recv, frame_recv: true, ..
                } if is_true(keyword(c, "inplace")) => {
                    if let Some(n) = name_of(recv) {
                        let d = self.var(n);
                        self.lower_call(c, &d);
                        return;
                    }
                }
                Callee::User(f) => {
                    self.inline_call(&f, c, Dest::Temp);
                    return;
                }
                _ => {}
            }
        }
        if !self.emit_uses(e) && !self.is_frame(e) {
            self.drop_stmt();
        }
    }

    fn assign(&mut self, target: &Expr, value: &Expr) {
        match target {
            Expr::Name(n) => {
                let n = n.id.as_str();
                if self.is_scaler(value) && matches!(value, Expr::Call(_)) {
                    self.local_scalers.insert(n.to_string());
                    return;
                }
                if let Expr::Call(c) = value {
                    if let Callee::User(f) = self.callee(c) {
                        let d = self.var(n);
                        if self.inline_call(&f, c, d).is_none() {
                            self.mark_nonframe(n);
                        }
                        return;
                    }
                }
                if self.is_frame(value) {
                    let d = self.var(n);
                    if self.lower(value, &d).is_some() {
                        if let Some(f) = self.inlining.last_mut() {
                            f.locals.insert(n.to_string());
                        }
                        return;
                    }
                }
                let used = self.emit_uses(value);
                self.mark_nonframe(n);
                if !used {
                    self.drop_stmt();
                }
            }
            Expr::Tuple(ast::ExprTuple { elts, .. }) | Expr::List(ast::ExprList { elts, .. }) => {
                if let Expr::Call(c) = value {
                    if let Callee::Module {
                        class: CallClass::Split,
                        ..
                    } = self.callee(c)
                    {
                        self.split(elts, c);
                        return;
                    }
                }
                match value {
                    Expr::Tuple(ast::ExprTuple { elts: vals, .. }) if vals.len() == elts.len() => {
                        for (t, v) in elts.iter().zip(vals) {
                            self.assign(t, v);
                        }
                    }
                    _ => {
                        if !self.emit_uses(value) {
                            self.drop_stmt();
                        }
                    }
                }
            }
            Expr::Subscript(s) => match name_of(&s.value) {
                Some(n) if self.frame_like(&s.value) && !self.is_scaler_name(n) && self.known_or_open(n) => {
                    let src = self.read_name(n);
                    let d = self.var(n);
                    if self.is_frame(value) {
                        if let Some(r) = self.lower(value, &Dest::Temp) {
                            let target = self.bind(&d);
                            self.emit(Statement::Merge {
                                target,
                                op: MergeOp::Join,
                                left: src,
                                right: r,
                            });
                            return;
                        }
                    }
                    self.emit_uses(value);
                    self.apply(&d, src, Function::Other("setitem".into()));
                }
                _ => {
                    if !self.emit_uses(value) {
                        self.drop_stmt();
                    }
                }
            },
            _ => {
                if !self.emit_uses(value) {
                    self.drop_stmt();
                }
            }
        }
    }

    fn known_or_open(&self, n: &str) -> bool {
        self.known_frame(n) || !self.scope.closed
    }

    fn mark_nonframe(&mut self, n: &str) {
        if self.inlining.is_empty() {
            self.local_frames.remove(n);
            self.local_nonframes.insert(n.to_string());
        }
    }

    /// `a_tr, a_te, b_tr, b_te = train_test_split(a, b, ...)`: each input
    /// is cut at a fresh symbolic row.
    fn split(&mut self, targets: &[Expr], c: &ast::ExprCall) {
        let inputs: Vec<&Expr> = c.args.iter().filter(|a| !matches!(a, Expr::Starred(_))).collect();
        let names: Option<Vec<&str>> = targets.iter().map(name_of).collect();
        let names = match names {
            Some(n) if n.len() == 2 * inputs.len() && !inputs.is_empty() => n,
            _ => {
                self.warn("train_test_split with unexpected targets dropped");
                return;
            }
        };
        let cut = RowExpr::sym(format!("split@{}:{}", self.cell, self.line), 0);
        let sources: Vec<Option<String>> = inputs.iter().map(|a| self.lower_arg(a)).collect();
        for (i, src) in sources.into_iter().enumerate() {
            let Some(src) = src else { continue };
            let (tr, te) = (names[2 * i], names[2 * i + 1]);
            let halves = [
                (tr, RowExpr::Const(0), cut.clone()),
                (te, cut.clone(), RowExpr::Inf),
            ];
            for (name, lo, hi) in halves {
                let d = self.var(name);
                self.select(&d, src.clone(), RowKey::Rows(RowSelector::Range { lo, hi }), None);
            }
        }
    }
}
