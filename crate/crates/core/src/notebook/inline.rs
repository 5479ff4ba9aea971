//! Inlining of user-defined functions at their call sites.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use rustpython_parser::ast;

use super::translate::{Dest, Translator};

/// A `def` seen in some cell, with the source its ranges point into.
#[derive(Clone, Debug)]
pub struct FunctionDef {
    pub name: String,
    pub params: Vec<String>,
    pub body: Vec<ast::Stmt>,
    pub source: Arc<str>,
}

impl FunctionDef {
    pub(super) fn from_ast(f: &ast::StmtFunctionDef, source: Arc<str>) -> Self {
        let params = f
            .args
            .posonlyargs
            .iter()
            .chain(&f.args.args)
            .chain(&f.args.kwonlyargs)
            .map(|a| a.def.arg.to_string())
            .collect();
        FunctionDef {
            name: f.name.to_string(),
            params,
            body: f.body.clone(),
            source,
        }
    }
}

/// Functions by name. A later definition replaces an earlier one.
#[derive(Clone, Debug, Default)]
pub struct FunctionTable {
    defs: BTreeMap<String, FunctionDef>,
}

impl FunctionTable {
    pub fn get(&self, name: &str) -> Option<&FunctionDef> {
        self.defs.get(name)
    }

    pub fn insert(&mut self, def: FunctionDef) {
        self.defs.insert(def.name.clone(), def);
    }

    pub fn extend(&mut self, other: &FunctionTable) {
        for d in other.defs.values() {
            self.insert(d.clone());
        }
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.defs.keys().map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.defs.is_empty()
    }
}

/// One active inlined call.
pub(super) struct InlineFrame {
    pub name: String,
    /// Parameters bound to frames of the caller.
    pub bindings: HashMap<String, String>,
    /// Names the body has bound to frames.
    pub locals: BTreeSet<String>,
    pub dest: Dest,
    pub result: Option<String>,
    pub returned: bool,
    caller_src: Arc<str>,
}

impl Translator<'_> {
    /// Expands a call to the user function `name`. Parameters bound to
    /// frames read the caller's variables, other names live in a scope of
    /// their own. The returned frame, if any, ends up in `dest`.
    pub(super) fn inline_call(&mut self, name: &str, call: &ast::ExprCall, dest: Dest) -> Option<String> {
        let def = self.function(name)?;
        if self.inlining.iter().any(|f| f.name == name) {
            self.warnings.push(format!("recursive function `{name}` treated as unknown"));
            return self.unknown_call(call, &dest, name, None);
        }
        let mut bindings = HashMap::new();
        for (i, p) in def.params.iter().enumerate() {
            let arg = call.args.get(i).or_else(|| {
                call.keywords
                    .iter()
                    .find(|k| k.arg.as_ref().is_some_and(|a| a.as_str() == p))
                    .map(|k| &k.value)
            });
            if let Some(a) = arg {
                if self.frame_like(a) {
                    if let Some(v) = self.lower(a, &Dest::Temp) {
                        bindings.insert(p.clone(), v);
                    }
                }
            }
        }
        let caller_src = std::mem::replace(&mut self.src, def.source.clone());
        self.inlining.push(InlineFrame {
            name: name.to_string(),
            bindings,
            locals: BTreeSet::new(),
            dest,
            result: None,
            returned: false,
            caller_src,
        });
        self.block(&def.body);
        let frame = self.inlining.pop().expect("pushed above");
        self.src = frame.caller_src;
        frame.result
    }

    /// `return e` inside an inlined body.
    pub(super) fn return_stmt(&mut self, value: Option<&ast::Expr>) {
        let Some(frame) = self.inlining.last() else {
            self.warnings.push("`return` outside a function dropped".into());
            return;
        };
        let dest = frame.dest.clone();
        let result = match value {
            Some(v) if self.is_frame(v) => self.lower(v, &dest),
            _ => None,
        };
        let frame = self.inlining.last_mut().expect("checked above");
        if result.is_some() {
            frame.result = result;
        }
        frame.returned = true;
    }
}
