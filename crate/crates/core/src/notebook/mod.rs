//! Jupyter notebook ingestion.
//!
//! Each code cell is translated into the data-frame language on its own,
//! but with what the whole notebook tells about names: which ones hold
//! frames, which are normalizers, which modules are imported and which
//! functions are defined in earlier cells.

mod inline;
mod kb;
mod translate;

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use serde_json::Value as Json;
use thiserror::Error;

use crate::lang::{free_variables, Stmt};

pub use inline::{FunctionDef, FunctionTable};
pub use kb::{CallClass, KbEntry, KnowledgeBase, DEFAULT_KB, KB_ENV};
pub use translate::{strip_magics, translate_in, translate_source, Scope, Translation};

#[derive(Debug, Error)]
pub enum NotebookError {
    #[error("invalid notebook JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported nbformat {0} (only version 4 is read)")]
    Version(String),
    #[error("malformed notebook: {0}")]
    Malformed(String),
}

/// One translated code cell.
#[derive(Clone, Debug, Serialize)]
pub struct CellIR {
    pub id: String,
    #[serde(skip)]
    pub source: String,
    pub statements: Vec<Stmt>,
    /// Frame variables the cell reads before assigning them.
    pub precondition: BTreeSet<String>,
    pub warnings: Vec<String>,
    /// Base name to the SSA name holding its value when the cell ends.
    pub exports: BTreeMap<String, String>,
    pub parse_error: bool,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Notebook {
    pub cells: Vec<CellIR>,
}

impl Notebook {
    pub fn cell(&self, id: &str) -> Option<&CellIR> {
        self.cells.iter().find(|c| c.id == id)
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.cells.iter().position(|c| c.id == id)
    }

    /// Builds a notebook from `(id, source)` code cells, in order.
    pub fn from_sources<I, S, T>(cells: I, kb: &KnowledgeBase) -> Self
    where
        I: IntoIterator<Item = (S, T)>,
        S: Into<String>,
        T: Into<String>,
    {
        let raw: Vec<(String, String)> = cells.into_iter().map(|(i, s)| (i.into(), s.into())).collect();
        build(&raw, kb, true)
    }

    pub fn warnings(&self) -> Vec<String> {
        self.cells
            .iter()
            .flat_map(|c| c.warnings.iter().map(move |w| format!("{}: {w}", c.id)))
            .collect()
    }
}

/// Variables read before being assigned in the cell's statements.
pub fn cell_precondition(c: &CellIR) -> BTreeSet<String> {
    free_variables(&c.statements).into_iter().collect()
}

fn cell_ir(id: String, source: String, t: Translation) -> CellIR {
    let mut c = CellIR {
        id,
        source,
        statements: t.statements,
        precondition: BTreeSet::new(),
        warnings: t.warnings,
        exports: t.exports,
        parse_error: t.parse_error,
    };
    c.precondition = cell_precondition(&c);
    c
}

/// Translates a single cell with no notebook around it.
pub fn translate_cell(source: &str, kb: &KnowledgeBase) -> CellIR {
    cell_ir("cell".into(), source.to_string(), translate_source(source, kb))
}

fn build(raw: &[(String, String)], kb: &KnowledgeBase, inline: bool) -> Notebook {
    // First pass: what each cell binds.
    let mut scope = Scope::default();
    let mut defined: Vec<FunctionTable> = Vec::with_capacity(raw.len());
    for (id, src) in raw {
        let mut s = scope.clone();
        s.frames.clear();
        let t = translate_in(src, kb, &s, id);
        scope.frames.extend(t.frames);
        scope.scalers.extend(t.scalers);
        scope.modules.extend(t.modules);
        if inline {
            scope.functions.extend(&t.functions);
        }
        defined.push(t.functions);
    }
    // Second pass: translate with the notebook-wide view. Functions come
    // only from earlier cells.
    let mut functions = FunctionTable::default();
    let mut cells = Vec::with_capacity(raw.len());
    for ((id, src), defs) in raw.iter().zip(defined) {
        let s = Scope {
            frames: scope.frames.clone(),
            scalers: scope.scalers.clone(),
            modules: scope.modules.clone(),
            functions: functions.clone(),
            closed: true,
        };
        let t = translate_in(src, kb, &s, id);
        cells.push(cell_ir(id.clone(), src.clone(), t));
        if inline {
            functions.extend(&defs);
        }
    }
    Notebook { cells }
}

fn source_text(v: Option<&Json>) -> String {
    match v {
        Some(Json::String(s)) => s.clone(),
        Some(Json::Array(parts)) => parts.iter().filter_map(Json::as_str).collect(),
        _ => String::new(),
    }
}

/// Reads an nbformat-4 notebook with the default knowledge base.
pub fn load_notebook(bytes: &[u8]) -> Result<Notebook, NotebookError> {
    load_notebook_with(bytes, &KnowledgeBase::default())
}

pub fn load_notebook_with(bytes: &[u8], kb: &KnowledgeBase) -> Result<Notebook, NotebookError> {
    let doc: Json = serde_json::from_slice(bytes)?;
    notebook_from_json(&doc, kb)
}

/// Translates an already decoded notebook document.
pub fn notebook_from_json(doc: &Json, kb: &KnowledgeBase) -> Result<Notebook, NotebookError> {
    match doc.get("nbformat") {
        Some(v) if v.as_u64() == Some(4) => {}
        Some(v) => return Err(NotebookError::Version(v.to_string())),
        None => return Err(NotebookError::Malformed("no `nbformat` field".into())),
    }
    let cells = doc
        .get("cells")
        .and_then(Json::as_array)
        .ok_or_else(|| NotebookError::Malformed("no `cells` array".into()))?;
    let mut raw = Vec::new();
    let mut ids = BTreeSet::new();
    for (i, cell) in cells.iter().enumerate() {
        if cell.get("cell_type").and_then(Json::as_str) != Some("code") {
            continue;
        }
        let mut id = cell
            .get("id")
            .and_then(Json::as_str)
            .map_or_else(|| format!("cell{}", i + 1), str::to_string);
        if ids.contains(&id) {
            let base = id.clone();
            let mut k = 2;
            while ids.contains(&id) {
                id = format!("{base}-{k}");
                k += 1;
            }
        }
        ids.insert(id.clone());
        raw.push((id, source_text(cell.get("source"))));
    }
    Ok(build(&raw, kb, true))
}

/// Re-translates every cell, inlining calls to functions defined in
/// earlier cells.
pub fn inline_functions(nb: &Notebook, kb: &KnowledgeBase) -> Notebook {
    let raw: Vec<(String, String)> = nb.cells.iter().map(|c| (c.id.clone(), c.source.clone())).collect();
    build(&raw, kb, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::Statement;

    const HEART_SPLIT: &[(&str, &str)] = &[
        ("cell1", "df = pd.read_csv(\"heart.csv\")\n"),
        (
            "cell3",
            "y = df[['target']]\nX = df.drop('target', axis=1)\n\nX_train = X.iloc[:split+1]\nX_test = X.iloc[split:end]\n\ny_train = y.iloc[:split+1]\ny_test = y.iloc[split:end]\n",
        ),
        ("cell4", "lr_clf = LogisticRegression(solver='liblinear')\ntrain1 = lr_clf.fit(X_train, y_train)\n"),
        ("cell5", "train_score = accuracy_score(y_test, lr_clf.predict(X_test))\n"),
    ];

    fn ipynb(cells: &[(&str, &str)]) -> Vec<u8> {
        let mut out = vec![serde_json::json!({"cell_type": "markdown", "source": ["# title"], "metadata": {}})];
        out.extend(cells.iter().map(|(id, s)| {
            let lines: Vec<String> = s.split_inclusive('\n').map(str::to_string).collect();
            serde_json::json!({"cell_type": "code", "id": id, "source": lines, "metadata": {}, "outputs": [], "execution_count": null})
        }));
        serde_json::to_vec(&serde_json::json!({"nbformat": 4, "nbformat_minor": 5, "metadata": {}, "cells": out})).unwrap()
    }

    #[test]
    fn heart_split_notebook() {
        let nb = load_notebook(&ipynb(HEART_SPLIT)).unwrap();
        let ids: Vec<&str> = nb.cells.iter().map(|c| c.id.as_str()).collect();
        assert_eq!(ids, ["cell1", "cell3", "cell4", "cell5"]);
        let selects = nb.cells[1]
            .statements
            .iter()
            .filter(|s| matches!(s.node, Statement::Select { .. }))
            .count();
        assert_eq!(selects, 6);
        assert_eq!(nb.cells[1].precondition, BTreeSet::from(["df".to_string()]));
        assert!(nb.cells[0].precondition.is_empty());
        assert_eq!(
            nb.cells[2].precondition,
            BTreeSet::from(["X_train".to_string(), "y_train".to_string()])
        );
        assert_eq!(
            nb.cells[3].precondition,
            BTreeSet::from(["X_test".to_string(), "y_test".to_string()])
        );
    }

    #[test]
    fn no_code_cells() {
        let doc = serde_json::json!({"nbformat": 4, "nbformat_minor": 2, "metadata": {},
            "cells": [{"cell_type": "markdown", "source": "hi", "metadata": {}}]});
        let nb = load_notebook(&serde_json::to_vec(&doc).unwrap()).unwrap();
        assert!(nb.cells.is_empty());
    }

    #[test]
    fn malformed_json_is_a_decode_error() {
        assert!(matches!(load_notebook(b"{\"cells\": ["), Err(NotebookError::Json(_))));
    }

    #[test]
    fn old_formats_are_rejected() {
        let doc = serde_json::json!({"nbformat": 3, "worksheets": []});
        assert!(matches!(
            load_notebook(&serde_json::to_vec(&doc).unwrap()),
            Err(NotebookError::Version(_))
        ));
    }

    #[test]
    fn ids_fall_back_to_positions_and_stay_unique() {
        let doc = serde_json::json!({"nbformat": 4, "nbformat_minor": 4, "metadata": {}, "cells": [
            {"cell_type": "markdown", "source": "", "metadata": {}},
            {"cell_type": "code", "source": "a = pd.read_csv('a.csv')", "metadata": {}, "outputs": []},
            {"cell_type": "code", "id": "x", "source": "", "metadata": {}, "outputs": []},
            {"cell_type": "code", "id": "x", "source": "", "metadata": {}, "outputs": []}
        ]});
        let nb = load_notebook(&serde_json::to_vec(&doc).unwrap()).unwrap();
        let ids: Vec<&str> = nb.cells.iter().map(|c| c.id.as_str()).collect();
        assert_eq!(ids, ["cell2", "x", "x-2"]);
    }

    #[test]
    fn preconditions() {
        let kb = KnowledgeBase::default();
        assert!(translate_cell("x = pd.read_csv('a.csv')\ny = x.dropna()\n", &kb).precondition.is_empty());
        assert!(translate_cell("", &kb).precondition.is_empty());
        let c = translate_cell("y = x.dropna()\n", &kb);
        assert_eq!(c.precondition, BTreeSet::from(["x".to_string()]));
    }

    #[test]
    fn precondition_names_occur_in_the_source() {
        let kb = KnowledgeBase::default();
        for (_, src) in HEART_SPLIT {
            let c = translate_cell(src, &kb);
            for v in &c.precondition {
                assert!(src.contains(v.as_str()), "{v} not in {src}");
            }
        }
    }

    #[test]
    fn magics_do_not_break_parsing() {
        let c = translate_cell("%matplotlib inline\n!pip install x\ndf = pd.read_csv('a.csv')\n", &KnowledgeBase::default());
        assert!(!c.parse_error);
        assert_eq!(c.statements.len(), 1);
        assert_eq!(c.statements[0].line, 3);
    }

    #[test]
    fn imports_in_one_cell_serve_the_others() {
        let nb = Notebook::from_sources(
            [
                ("a", "import pandas as pandas_alias\nfrom sklearn.preprocessing import MinMaxScaler\n"),
                ("b", "d = pandas_alias.read_csv('d.csv')\nmm = MinMaxScaler()\n"),
                ("c", "e = mm.fit_transform(d)\n"),
            ],
            &KnowledgeBase::default(),
        );
        assert!(matches!(nb.cells[1].statements[0].node, Statement::Read { .. }));
        assert!(matches!(
            nb.cells[2].statements[0].node,
            Statement::Apply {
                func: crate::lang::Function::Normalize,
                ..
            }
        ));
    }
}
