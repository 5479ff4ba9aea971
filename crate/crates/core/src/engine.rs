//! Inter-cell analysis of notebooks.
//!
//! Cells can run in any order, so the engine explores execution orders
//! depth first. A cell may follow the current state when every frame it
//! reads is bound there. Exploration of a path stops at a finding, at the
//! depth bound, when no cell can follow, or when every follower was already
//! visited with a larger state at a depth no greater than the current one.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::interp::{run, AbstractState, Finding};
use crate::notebook::{CellIR, Notebook};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PropagationConfig {
    /// Maximum number of cells in an execution path. `None` means unbounded.
    pub k_bound: Option<usize>,
    pub halt_on_finding: bool,
    /// Run the searches from different start cells on separate threads.
    pub parallel: bool,
    /// Upper limit on cell executions per start cell.
    pub max_visits: usize,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        PropagationConfig {
            k_bound: Some(5),
            halt_on_finding: true,
            parallel: true,
            max_visits: 200_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    HaltedOnFinding,
    NoValidSuccessor,
    Bound,
    Subsumed,
    /// The cell could not be analyzed; see the warnings.
    CellError,
    /// The visit budget ran out.
    Budget,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Termination::HaltedOnFinding => "halted-on-finding",
            Termination::NoValidSuccessor => "no-valid-successor",
            Termination::Bound => "bound",
            Termination::Subsumed => "subsumed",
            Termination::CellError => "cell-error",
            Termination::Budget => "budget",
        })
    }
}

/// One explored path, from a start cell to where exploration stopped.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExecutionTrace {
    pub cells: Vec<String>,
    pub findings: Vec<Finding>,
    pub termination: Termination,
}

/// A finding together with the shortest execution path exhibiting it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NotebookFinding {
    #[serde(flatten)]
    pub finding: Finding,
    pub trace: Vec<String>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct NotebookAnalysis {
    pub findings: Vec<NotebookFinding>,
    pub traces: Vec<ExecutionTrace>,
    pub warnings: Vec<String>,
    /// Number of cell executions.
    pub visits: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error("no cell `{0}`")]
    UnknownCell(String),
    #[error("cell `{0}` reads {1:?} and cannot start an execution")]
    InvalidStart(String, Vec<String>),
}

/// Whether `cell` may run in state `m`: it reads at least one frame and
/// every frame it reads is bound to some data.
pub fn phi(cell: &CellIR, m: &AbstractState) -> bool {
    !cell.precondition.is_empty()
        && cell
            .precondition
            .iter()
            .all(|v| m.get(v).is_some_and(|s| !s.sources.is_empty()))
}

fn base_name(v: &str) -> String {
    v.trim_end_matches('\'').to_string()
}

fn strip_primes(mut f: Finding) -> Finding {
    f.train_var = base_name(&f.train_var);
    f.test_var = base_name(&f.test_var);
    for (a, b) in &mut f.pairs {
        *a = base_name(a);
        *b = base_name(b);
    }
    f.pairs.sort();
    f.pairs.dedup();
    f.witness = f.witness.replace('\'', "");
    f
}

/// Brings a state out of a cell: exported SSA versions take their base
/// names and cell-internal versions are dropped.
fn leave_cell(cell: &CellIR, mut m: AbstractState) -> AbstractState {
    for (base, last) in &cell.exports {
        if base != last {
            m.rename(last, base);
        }
    }
    let internal: Vec<String> = m.env.keys().filter(|v| v.contains('\'') || v.contains('.')).cloned().collect();
    for v in internal {
        m.env.remove(&v);
        m.exact.remove(&v);
    }
    m
}

type FindingKey = (crate::interp::FindingKind, String, String);

fn record(into: &mut BTreeMap<FindingKey, NotebookFinding>, f: Finding, trace: &[String]) {
    let key = (f.kind, f.train_var.clone(), f.test_var.clone());
    match into.get(&key) {
        Some(old) if old.trace.len() <= trace.len() => {}
        _ => {
            into.insert(
                key,
                NotebookFinding {
                    finding: f,
                    trace: trace.to_vec(),
                },
            );
        }
    }
}

struct Search<'a> {
    nb: &'a Notebook,
    cfg: PropagationConfig,
    seen: Vec<Vec<(AbstractState, usize)>>,
    path: Vec<usize>,
    traces: Vec<ExecutionTrace>,
    findings: BTreeMap<FindingKey, NotebookFinding>,
    warnings: BTreeSet<String>,
    visits: usize,
}

impl Search<'_> {
    fn subsumed(&self, cell: usize, m: &AbstractState, depth: usize) -> bool {
        self.seen[cell].iter().any(|(m0, d0)| *d0 <= depth && m.leq(m0))
    }

    fn ids(&self) -> Vec<String> {
        self.path.iter().map(|&i| self.nb.cells[i].id.clone()).collect()
    }

    fn end(&mut self, findings: Vec<Finding>, termination: Termination) {
        let cells = self.ids();
        self.traces.push(ExecutionTrace {
            cells,
            findings,
            termination,
        });
    }

    fn visit(&mut self, idx: usize, m: AbstractState) {
        let cell = &self.nb.cells[idx];
        self.seen[idx].push((m.clone(), self.path.len()));
        self.path.push(idx);
        self.visits += 1;
        match run(&cell.statements, m, Some(&cell.id)) {
            Err(e) => {
                self.warnings.insert(format!("{}: {e}", cell.id));
                self.end(Vec::new(), Termination::CellError);
            }
            Ok(a) => {
                let found: Vec<Finding> = a.findings.into_iter().map(strip_primes).collect();
                let trace = self.ids();
                for f in &found {
                    record(&mut self.findings, f.clone(), &trace);
                }
                let next = leave_cell(cell, a.state);
                self.successors(next, found);
            }
        }
        self.path.pop();
    }

    fn successors(&mut self, m: AbstractState, found: Vec<Finding>) {
        if self.cfg.halt_on_finding && !found.is_empty() {
            return self.end(found, Termination::HaltedOnFinding);
        }
        if self.cfg.k_bound.is_some_and(|k| self.path.len() >= k) {
            return self.end(found, Termination::Bound);
        }
        let next: Vec<usize> = (0..self.nb.cells.len()).filter(|&j| phi(&self.nb.cells[j], &m)).collect();
        if next.is_empty() {
            return self.end(found, Termination::NoValidSuccessor);
        }
        let depth = self.path.len();
        let mut explored = false;
        for j in next {
            if self.visits >= self.cfg.max_visits {
                self.warnings.insert(format!(
                    "search stopped after {} cell executions; results may be incomplete",
                    self.visits
                ));
                return self.end(found, Termination::Budget);
            }
            if self.subsumed(j, &m, depth) {
                continue;
            }
            explored = true;
            self.visit(j, m.clone());
        }
        if !explored {
            self.end(found, Termination::Subsumed);
        }
    }
}

/// The result of exploring from one start cell.
#[derive(Clone, Debug, Default)]
pub struct Propagation {
    pub traces: Vec<ExecutionTrace>,
    pub findings: Vec<NotebookFinding>,
    pub warnings: Vec<String>,
    pub visits: usize,
}

/// Explores every execution order starting at cell `start`.
pub fn propagate(nb: &Notebook, start: &str, cfg: &PropagationConfig) -> Result<Propagation, EngineError> {
    let idx = nb.index_of(start).ok_or_else(|| EngineError::UnknownCell(start.to_string()))?;
    let pre = &nb.cells[idx].precondition;
    if !pre.is_empty() {
        return Err(EngineError::InvalidStart(start.to_string(), pre.iter().cloned().collect()));
    }
    let mut s = Search {
        nb,
        cfg: *cfg,
        seen: vec![Vec::new(); nb.cells.len()],
        path: Vec::new(),
        traces: Vec::new(),
        findings: BTreeMap::new(),
        warnings: BTreeSet::new(),
        visits: 0,
    };
    s.visit(idx, AbstractState::default());
    Ok(Propagation {
        traces: s.traces,
        findings: s.findings.into_values().collect(),
        warnings: s.warnings.into_iter().collect(),
        visits: s.visits,
    })
}

/// Cells that can begin an execution: those reading no frame.
pub fn start_cells(nb: &Notebook) -> Vec<&str> {
    nb.cells
        .iter()
        .filter(|c| c.precondition.is_empty())
        .map(|c| c.id.as_str())
        .collect()
}

/// Explores from every start cell and merges the results. A finding seen
/// on several paths is reported once, with the shortest path (the first
/// one found among equally short paths).
pub fn analyze_notebook(nb: &Notebook, cfg: &PropagationConfig) -> NotebookAnalysis {
    let starts = start_cells(nb);
    let mut out = NotebookAnalysis::default();
    if starts.is_empty() {
        if !nb.cells.is_empty() {
            out.warnings
                .push("no cell can start an execution: every cell reads a frame defined elsewhere".into());
        }
        return out;
    }
    let go = |s: &&str| propagate(nb, s, cfg).expect("start cells have empty preconditions");
    let runs: Vec<Propagation> = if cfg.parallel {
        starts.par_iter().map(go).collect()
    } else {
        starts.iter().map(go).collect()
    };
    let mut findings = BTreeMap::new();
    let mut warnings = BTreeSet::new();
    for r in runs {
        for f in r.findings {
            record(&mut findings, f.finding, &f.trace);
        }
        warnings.extend(r.warnings);
        out.traces.extend(r.traces);
        out.visits += r.visits;
    }
    out.findings = findings.into_values().collect();
    out.warnings = warnings.into_iter().collect();
    out
}
