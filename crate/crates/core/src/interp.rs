//! Abstract interpretation of data-frame programs and the leakage check.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{AbsDataFrame, ColumnAbs, Lattice, RowInterval, SourceAbs, Taint};
use crate::lang::{Function, Program, RowExpr, RowSelector, Statement, Stmt, UseKind};

/// Iterations of a loop body before row bounds are widened.
pub const WIDEN_AFTER: usize = 3;

/// Opaque functions known to keep every row in place. Any other function
/// may drop or reorder rows, after which row selects no longer narrow.
pub const ROW_PRESERVING: &[&str] = &[
    "fillna", "astype", "copy", "rename", "replace", "round", "abs", "clip", "interpolate", "ffill", "bfill",
    "applymap", "to_numpy", "values",
];

/// Where a statement lives: a line of a `.dfl` file, or a statement of a cell.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Site {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cell: Option<String>,
    pub line: usize,
}

impl Site {
    pub fn line(line: usize) -> Self {
        Site { cell: None, line }
    }

    pub fn in_cell(cell: impl Into<String>, line: usize) -> Self {
        Site {
            cell: Some(cell.into()),
            line,
        }
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.cell {
            Some(c) => write!(f, "{c}:{}", self.line),
            None => write!(f, "line {}", self.line),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("{site}: variable `{var}` is not bound")]
    Unbound { var: String, site: Site },
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct UseKey {
    pub var: String,
    pub site: Site,
}

/// The analysis state: an abstract value per variable, plus the train and
/// test uses seen so far (with the value each variable had at that point).
///
/// `exact` holds the variables whose row positions are known to line up
/// with the row intervals of their frames, i.e. values not rearranged by a
/// merge, a list select or an opaque function. Only for those does a row
/// select narrow the row interval.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct AbstractState {
    pub env: BTreeMap<String, SourceAbs>,
    #[serde(rename = "row_exact")]
    pub exact: BTreeSet<String>,
    #[serde(serialize_with = "uses_as_list")]
    pub train_uses: BTreeMap<UseKey, SourceAbs>,
    #[serde(serialize_with = "uses_as_list")]
    pub test_uses: BTreeMap<UseKey, SourceAbs>,
}

fn uses_as_list<S: serde::Serializer>(
    uses: &BTreeMap<UseKey, SourceAbs>,
    s: S,
) -> Result<S::Ok, S::Error> {
    #[derive(Serialize)]
    struct Entry<'a> {
        var: &'a str,
        site: &'a Site,
        value: &'a SourceAbs,
    }
    s.collect_seq(uses.iter().map(|(k, v)| Entry {
        var: &k.var,
        site: &k.site,
        value: v,
    }))
}

fn join_uses(a: &BTreeMap<UseKey, SourceAbs>, b: &BTreeMap<UseKey, SourceAbs>) -> BTreeMap<UseKey, SourceAbs> {
    let mut out = a.clone();
    for (k, v) in b {
        out.entry(k.clone())
            .and_modify(|x| *x = x.join(v))
            .or_insert_with(|| v.clone());
    }
    out
}

fn leq_uses(a: &BTreeMap<UseKey, SourceAbs>, b: &BTreeMap<UseKey, SourceAbs>) -> bool {
    a.iter().all(|(k, v)| b.get(k).is_some_and(|w| v.leq(w)))
}

fn widen_source(old: &SourceAbs, new: &SourceAbs) -> SourceAbs {
    SourceAbs::new(old.sources.widen(&new.sources), old.taint.max(new.taint))
}

fn widen_map<K: Ord + Clone>(old: &BTreeMap<K, SourceAbs>, new: &BTreeMap<K, SourceAbs>) -> BTreeMap<K, SourceAbs> {
    let mut out = old.clone();
    for (k, v) in new {
        let w = match old.get(k) {
            Some(o) => widen_source(o, v),
            None => v.clone(),
        };
        out.insert(k.clone(), w);
    }
    out
}

impl AbstractState {
    pub fn get(&self, var: &str) -> Option<&SourceAbs> {
        self.env.get(var)
    }

    pub fn is_exact(&self, var: &str) -> bool {
        self.exact.contains(var)
    }

    fn bind(&mut self, var: &str, value: SourceAbs, exact: bool) {
        self.env.insert(var.to_string(), value);
        if exact {
            self.exact.insert(var.to_string());
        } else {
            self.exact.remove(var);
        }
    }

    /// Pointwise order. A variable that is row-exact on the right must be
    /// row-exact with the same value on the left, since exactness licenses
    /// more precise selects.
    pub fn leq(&self, other: &Self) -> bool {
        self.env
            .iter()
            .all(|(k, v)| other.env.get(k).is_some_and(|w| v.leq(w)))
            && other
                .exact
                .iter()
                .all(|v| match self.env.get(v) {
                    None => true,
                    Some(x) => self.exact.contains(v) && other.env.get(v) == Some(x),
                })
            && leq_uses(&self.train_uses, &other.train_uses)
            && leq_uses(&self.test_uses, &other.test_uses)
    }

    pub fn join(&self, other: &Self) -> Self {
        let mut env = self.env.clone();
        for (k, v) in &other.env {
            env.entry(k.clone())
                .and_modify(|x| *x = x.join(v))
                .or_insert_with(|| v.clone());
        }
        let exact = self
            .exact
            .iter()
            .chain(&other.exact)
            .filter(|v| {
                let in_a = self.exact.contains(*v) || !self.env.contains_key(*v);
                let in_b = other.exact.contains(*v) || !other.env.contains_key(*v);
                let agree = match (self.env.get(*v), other.env.get(*v)) {
                    (Some(a), Some(b)) => a == b,
                    _ => true,
                };
                in_a && in_b && agree
            })
            .cloned()
            .collect();
        AbstractState {
            env,
            exact,
            train_uses: join_uses(&self.train_uses, &other.train_uses),
            test_uses: join_uses(&self.test_uses, &other.test_uses),
        }
    }

    /// Widening of `self` by the next loop iterate `next`.
    pub fn widen(&self, next: &Self) -> Self {
        let joined = self.join(next);
        AbstractState {
            env: widen_map(&self.env, &joined.env),
            exact: joined.exact.into_iter().filter(|v| self.env.get(v) == next.env.get(v)).collect(),
            train_uses: widen_map(&self.train_uses, &joined.train_uses),
            test_uses: widen_map(&self.test_uses, &joined.test_uses),
        }
    }

    /// Moves the value of `from` to `to`, dropping `from`.
    pub fn rename(&mut self, from: &str, to: &str) {
        if let Some(v) = self.env.remove(from) {
            let exact = self.exact.remove(from);
            self.bind(to, v, exact);
        }
    }
}

fn lookup<'a>(m: &'a AbstractState, var: &str, site: &Site) -> Result<&'a SourceAbs, AnalysisError> {
    m.get(var).ok_or_else(|| AnalysisError::Unbound {
        var: var.to_string(),
        site: site.clone(),
    })
}

fn selector_interval(sel: &RowSelector) -> RowInterval {
    match sel {
        RowSelector::Range { lo, hi } => RowInterval::half_open(lo.clone(), hi.clone()),
        RowSelector::List(rows) => RowInterval::hull_of(rows),
    }
}

/// Whether a selector keeps a contiguous, order-preserving block of rows.
fn contiguous(sel: &RowSelector) -> bool {
    match sel {
        RowSelector::Range { .. } => true,
        RowSelector::List(rows) => rows.windows(2).all(|w| match (&w[0], &w[1]) {
            (RowExpr::Const(a), RowExpr::Const(b)) => *b == a + 1,
            (a, b) => *b == a.shift(1) && a.is_symbolic(),
        }),
    }
}

/// Switches for deliberately weakened semantics, used to check that the
/// soundness fuzzer notices broken rules.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TransferOptions {
    pub taint_on_normalize: bool,
}

impl Default for TransferOptions {
    fn default() -> Self {
        TransferOptions {
            taint_on_normalize: true,
        }
    }
}

/// Abstract transfer of one statement.
pub fn transfer(stmt: &Stmt, m: &AbstractState, cell: Option<&str>) -> Result<AbstractState, AnalysisError> {
    transfer_with(stmt, m, cell, TransferOptions::default())
}

pub fn transfer_with(
    stmt: &Stmt,
    m: &AbstractState,
    cell: Option<&str>,
    opts: TransferOptions,
) -> Result<AbstractState, AnalysisError> {
    let site = Site {
        cell: cell.map(str::to_string),
        line: stmt.line,
    };
    let mut out = m.clone();
    match &stmt.node {
        Statement::Read { target, file } => {
            out.bind(target, SourceAbs::of_frame(AbsDataFrame::whole(file.clone())), true);
        }
        Statement::Select {
            target,
            source,
            rows,
            cols,
        } => {
            let v = lookup(m, source, &site)?;
            if v.taint.is_tainted() {
                out.bind(target, v.clone(), false);
            } else {
                let c = match cols {
                    Some(c) => ColumnAbs::Set(c.clone()),
                    None => ColumnAbs::Top,
                };
                let exact = m.is_exact(source);
                let ij = match rows {
                    Some(sel) if exact => selector_interval(sel),
                    _ => RowInterval::all(),
                };
                let still_exact = exact && rows.as_ref().map_or(true, contiguous);
                // A frame without any selected column still feeds the rows of
                // a merged value (a join row depends on both sides), so it is
                // kept with no columns rather than dropped. Falling back to its
                // own columns instead would make the select non-monotone.
                let sources = v
                    .sources
                    .map_frames(|f| AbsDataFrame::keeping_rows(f.file(), f.cols().meet(&c), f.rows().unindex(&ij)));
                out.bind(target, SourceAbs::new(sources, Taint::Untainted), still_exact);
            }
        }
        Statement::Merge {
            target, left, right, ..
        } => {
            let a = lookup(m, left, &site)?;
            let b = lookup(m, right, &site)?;
            out.bind(target, a.join(b), false);
        }
        Statement::Apply { target, func, source } => {
            let v = lookup(m, source, &site)?.clone();
            match func {
                Function::Normalize if opts.taint_on_normalize => {
                    let exact = m.is_exact(source);
                    out.bind(target, v.tainted(), exact);
                }
                Function::Normalize => {
                    let exact = m.is_exact(source);
                    out.bind(target, v, exact);
                }
                Function::Other(name) => {
                    let exact = m.is_exact(source) && ROW_PRESERVING.contains(&name.as_str());
                    out.bind(target, v, exact)
                }
            }
        }
        Statement::Use { kind, args } => {
            for var in args {
                let v = lookup(m, var, &site)?.clone();
                let key = UseKey {
                    var: var.clone(),
                    site: site.clone(),
                };
                let uses = match kind {
                    UseKind::Train => &mut out.train_uses,
                    UseKind::Test => &mut out.test_uses,
                };
                uses.entry(key)
                    .and_modify(|x| *x = x.join(&v))
                    .or_insert(v);
            }
        }
        Statement::Branch { then_body, else_body } => {
            let a = exec_block(then_body, m, cell, opts)?;
            let b = exec_block(else_body, m, cell, opts)?;
            out = a.join(&b);
        }
        Statement::Loop { body } => {
            let mut cur = m.clone();
            let mut iter = 0;
            loop {
                let step = exec_block(body, &cur, cell, opts)?;
                let mut next = m.join(&step);
                if iter >= WIDEN_AFTER {
                    next = cur.widen(&next);
                }
                if next == cur {
                    break;
                }
                cur = next;
                iter += 1;
            }
            out = cur;
        }
    }
    Ok(out)
}

fn exec_block(
    stmts: &[Stmt],
    m: &AbstractState,
    cell: Option<&str>,
    opts: TransferOptions,
) -> Result<AbstractState, AnalysisError> {
    stmts.iter().try_fold(m.clone(), |acc, s| transfer_with(s, &acc, cell, opts))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FindingKind {
    Taint,
    Overlap,
}

impl fmt::Display for FindingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FindingKind::Taint => "Taint",
            FindingKind::Overlap => "Overlap",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Finding {
    pub kind: FindingKind,
    pub train_var: String,
    pub test_var: String,
    pub train_site: Site,
    pub test_site: Site,
    /// Input files both sides read from.
    pub files: Vec<String>,
    /// All offending (train, test) variable pairs at these two sites.
    pub pairs: Vec<(String, String)>,
    pub witness: String,
}

fn shared_files(a: &SourceAbs, b: &SourceAbs) -> BTreeSet<String> {
    let fa = a.sources.files();
    b.sources
        .files()
        .into_iter()
        .filter(|f| fa.contains(f))
        .map(str::to_string)
        .collect()
}

fn overlapping_frames(a: &SourceAbs, b: &SourceAbs) -> Option<(AbsDataFrame, AbsDataFrame)> {
    a.sources
        .iter()
        .flat_map(|x| b.sources.iter().map(move |y| (x, y)))
        .find(|(x, y)| x.rows_overlap(y))
        .map(|(x, y)| (x.clone(), y.clone()))
}

fn flag(t: Taint) -> &'static str {
    match t {
        Taint::Untainted => "untainted",
        Taint::MaybeTainted => "maybe-tainted",
    }
}

/// Checks every (train use, test use) pair for shared rows.
///
/// A pair that may share rows of an input file is a Taint finding when
/// either side went through normalization and an Overlap finding otherwise.
/// Tainted values are never narrowed by selects, so their frames already
/// cover every row they were computed from. Findings are grouped per pair of use sites. A group reports its
/// lexicographically smallest variable pair and lists the others in
/// `pairs`.
pub fn check_leakage(m: &AbstractState) -> Vec<Finding> {
    struct Group {
        pairs: Vec<(String, String)>,
        files: BTreeSet<String>,
        witness: String,
    }
    let mut groups: BTreeMap<(FindingKind, Site, Site), Group> = BTreeMap::new();
    for (tk, tv) in &m.train_uses {
        for (sk, sv) in &m.test_uses {
            let files = shared_files(tv, sv);
            if files.is_empty() {
                continue;
            }
            let Some((x, y)) = overlapping_frames(tv, sv) else {
                continue;
            };
            let tainted = tv.taint.is_tainted() || sv.taint.is_tainted();
            let (kind, witness) = if tainted {
                let w = format!(
                    "{} is {} and {} is {}, both computed from rows of {}",
                    tk.var,
                    flag(tv.taint),
                    sk.var,
                    flag(sv.taint),
                    files.iter().cloned().collect::<Vec<_>>().join(", ")
                );
                (FindingKind::Taint, w)
            } else {
                let w = format!("{} has {x} and {} has {y}: they may share rows", tk.var, sk.var);
                (FindingKind::Overlap, w)
            };
            let files = BTreeSet::from([x.file().to_string()]);
            let hits = [(kind, witness, files)];
            for (kind, witness, files) in hits {
                let g = groups
                    .entry((kind, tk.site.clone(), sk.site.clone()))
                    .or_insert_with(|| Group {
                        pairs: Vec::new(),
                        files: BTreeSet::new(),
                        witness: String::new(),
                    });
                let pair = (tk.var.clone(), sk.var.clone());
                if g.pairs.iter().all(|p| p > &pair) {
                    g.witness = witness;
                }
                g.pairs.push(pair);
                g.files.extend(files);
            }
        }
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for ((kind, train_site, test_site), mut g) in groups {
        g.pairs.sort();
        g.pairs.dedup();
        let (train_var, test_var) = g.pairs[0].clone();
        if !seen.insert((kind, train_var.clone(), test_var.clone())) {
            continue;
        }
        out.push(Finding {
            kind,
            train_var,
            test_var,
            train_site,
            test_site,
            files: g.files.into_iter().collect(),
            pairs: g.pairs,
            witness: g.witness,
        });
    }
    out.sort();
    out
}

/// Adds `new` findings not already present by (kind, train var, test var).
pub fn merge_findings(into: &mut Vec<Finding>, new: Vec<Finding>) {
    for f in new {
        if !into
            .iter()
            .any(|g| g.kind == f.kind && g.train_var == f.train_var && g.test_var == f.test_var)
        {
            into.push(f);
        }
    }
    into.sort();
}

/// The state after one top-level statement, for `--dump-state`.
#[derive(Clone, Debug, Serialize)]
pub struct StateSnapshot {
    pub line: usize,
    pub statement: String,
    pub state: AbstractState,
}

#[derive(Clone, Debug)]
pub struct Analysis {
    pub state: AbstractState,
    pub findings: Vec<Finding>,
    pub snapshots: Vec<StateSnapshot>,
}

/// Runs a statement list from `m`, checking for leakage after every
/// statement that uses data.
pub fn run(stmts: &[Stmt], m: AbstractState, cell: Option<&str>) -> Result<Analysis, AnalysisError> {
    run_with(stmts, m, cell, TransferOptions::default())
}

pub fn run_with(
    stmts: &[Stmt],
    m: AbstractState,
    cell: Option<&str>,
    opts: TransferOptions,
) -> Result<Analysis, AnalysisError> {
    let mut state = m;
    let mut findings = Vec::new();
    let mut snapshots = Vec::with_capacity(stmts.len());
    for s in stmts {
        state = transfer_with(s, &state, cell, opts)?;
        let mut has_use = false;
        crate::lang::for_each_statement(std::slice::from_ref(s), |n| {
            has_use |= matches!(n, Statement::Use { .. })
        });
        if has_use {
            merge_findings(&mut findings, check_leakage(&state));
        }
        snapshots.push(StateSnapshot {
            line: s.line,
            statement: s.node.to_string(),
            state: state.clone(),
        });
    }
    merge_findings(&mut findings, check_leakage(&state));
    Ok(Analysis {
        state,
        findings,
        snapshots,
    })
}

/// Analyzes a whole program from the empty state.
pub fn analyze_program(p: &Program) -> Result<Analysis, AnalysisError> {
    run(&p.statements, AbstractState::default(), None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::AbsDataFrameSet;
    use crate::lang::parse_program;

    const MOTIVATING: &str = r#"data = read("data.csv")
X = data.select[]["X_1", "X_2", "y"]
X_norm = normalize(X)
X_train = X_norm.select[cut+1:][]
X_test = X_norm.select[0:cut+1][]
train(X_train)
test(X_test)
"#;

    fn analyze(src: &str) -> Analysis {
        analyze_program(&parse_program(src).unwrap()).unwrap()
    }

    fn frame(file: &str, cols: ColumnAbs, rows: RowInterval) -> SourceAbs {
        SourceAbs::of_frame(AbsDataFrame::new(file, cols, rows).unwrap())
    }

    #[test]
    fn motivating_example_states() {
        let a = analyze(MOTIVATING);
        let xyz = ColumnAbs::of(["X_1", "X_2", "y"]);
        let s = &a.snapshots;
        assert_eq!(s[0].state.env["data"], SourceAbs::of_frame(AbsDataFrame::whole("data.csv")));
        assert_eq!(s[1].state.env["X"], frame("data.csv", xyz.clone(), RowInterval::all()));
        let norm = frame("data.csv", xyz, RowInterval::all()).tainted();
        assert_eq!(s[2].state.env["X_norm"], norm);
        assert_eq!(s[3].state.env["X_train"], norm);
        assert_eq!(s[4].state.env["X_test"], norm);
        assert_eq!(a.findings.len(), 1);
        let f = &a.findings[0];
        assert_eq!(f.kind, FindingKind::Taint);
        assert_eq!((f.train_var.as_str(), f.test_var.as_str()), ("X_train", "X_test"));
        assert_eq!(f.files, vec!["data.csv".to_string()]);
    }

    #[test]
    fn split_then_normalize_is_clean() {
        let a = analyze(
            "d = read(\"d.csv\")\ntr = d.select[s:][]\nte = d.select[0:s][]\nn1 = normalize(tr)\nn2 = normalize(te)\ntrain(n1)\ntest(n2)\n",
        );
        assert!(a.findings.is_empty(), "{:?}", a.findings);
    }

    #[test]
    fn off_by_one_split_overlaps() {
        let a = analyze(
            "d = read(\"d.csv\")\ntr = d.select[0:s+1][]\nte = d.select[s:e][]\ntrain(tr)\ntest(te)\n",
        );
        assert_eq!(a.findings.len(), 1);
        assert_eq!(a.findings[0].kind, FindingKind::Overlap);
    }

    #[test]
    fn no_uses_no_findings() {
        assert!(analyze("d = read(\"d.csv\")\nn = normalize(d)\n").findings.is_empty());
    }

    #[test]
    fn column_disjoint_selects_of_the_same_rows_leak() {
        let a = analyze(
            "d = read(\"d.csv\")\nx = d.select[0:2][\"a\"]\ny = d.select[0:2][\"b\"]\ntrain(x)\ntest(y)\n",
        );
        assert_eq!(a.findings.len(), 1);
        assert_eq!(a.findings[0].kind, FindingKind::Overlap);
    }

    #[test]
    fn select_after_concat_keeps_all_rows() {
        // positions 2..3 of the concatenation are rows 0..1 of g
        let a = analyze(
            "f = read(\"f\")\nf2 = f.select[0:2][]\ng = read(\"g\")\ng2 = g.select[0:2][]\nc = concat(f2, g2)\nt = c.select[2:4][]\nu = g.select[0:1][]\ntrain(t)\ntest(u)\n",
        );
        assert_eq!(a.findings.len(), 1);
        assert!(!a.state.is_exact("c"));
    }

    #[test]
    fn both_kinds_at_one_site_pair() {
        let a = analyze(
            "d = read(\"d\")\nn = normalize(d)\nx = d.select[0:3][]\ny = d.select[2:][]\ntrain(n, x)\ntest(y)\n",
        );
        let kinds: Vec<_> = a.findings.iter().map(|f| (f.kind, f.train_var.as_str())).collect();
        assert_eq!(kinds, vec![(FindingKind::Taint, "n"), (FindingKind::Overlap, "x")]);
    }

    #[test]
    fn one_finding_per_site_pair() {
        let a = analyze(
            "d = read(\"d\")\nx = d.select[0:5][]\ny = d.select[0:5][\"y\"]\nxt = d.select[4:][]\nyt = d.select[4:][\"y\"]\ntrain(x, y)\ntest(xt, yt)\n",
        );
        assert_eq!(a.findings.len(), 1);
        let f = &a.findings[0];
        assert_eq!((f.train_var.as_str(), f.test_var.as_str()), ("x", "xt"));
        assert_eq!(f.pairs.len(), 4);
    }

    #[test]
    fn unbound_variable_is_an_error() {
        let stmt = Stmt::new(3, Statement::Apply {
            target: "y".into(),
            func: Function::Normalize,
            source: "x".into(),
        });
        let err = transfer(&stmt, &AbstractState::default(), Some("c1")).unwrap_err();
        assert_eq!(err.to_string(), "c1:3: variable `x` is not bound");
    }

    #[test]
    fn branches_join() {
        let a = analyze("d = read(\"d\")\nif {\n x = d.select[0:2][]\n} else {\n x = normalize(d)\n}\n");
        let x = &a.state.env["x"];
        assert_eq!(x.taint, Taint::MaybeTainted);
        assert_eq!(x.sources, AbsDataFrameSet::singleton(AbsDataFrame::whole("d")));
    }

    #[test]
    fn loops_reach_a_fixpoint() {
        let a = analyze("d = read(\"d\")\nx = d.select[0:1][]\nloop {\n y = d.select[3:4][]\n x = concat(x, y)\n}\ntrain(x)\n");
        let x = &a.state.env["x"];
        assert!(x.sources.iter().all(|f| f.file() == "d"));
        assert!(frame("d", ColumnAbs::Top, RowInterval::constant(0, 0)).leq(x));
        assert!(frame("d", ColumnAbs::Top, RowInterval::constant(3, 3)).leq(x));
    }

    #[test]
    fn dump_state_json_shape() {
        let a = analyze(MOTIVATING);
        let v = serde_json::to_value(&a.snapshots[0]).unwrap();
        assert_eq!(v["state"]["env"]["data"]["sources"][0]["rows"], serde_json::json!(["0", "inf"]));
        assert_eq!(v["line"], 1);
        let last = serde_json::to_value(&a.snapshots[6]).unwrap();
        assert_eq!(last["state"]["test_uses"][0]["var"], "X_test");
    }
}
