//! Ground truth for the analysis: a concrete provenance semantics, an
//! exhaustive check of train/test independence on tiny inputs, and a
//! differential fuzzer tying both to the abstract interpreter.

mod concrete;
mod enumerate;
mod fuzz;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::domain::SourceCell;

pub use concrete::{concrete_run, ConcreteFrame, ConcreteRun, Value};
pub use enumerate::{
    alpha_dependencies, alpha_pointwise, enumerate_independence, enumerate_traces, independence, Dependency,
    IndWitness, Independence, InputShape, Trace, TraceSet, DEFAULT_BUDGET,
};
pub use fuzz::{fuzz_soundness, generate_inputs, generate_program, FuzzConfig, FuzzReport, Violation};

/// Per variable, per row: the input cells the row was computed from.
pub type DependencyMap = BTreeMap<String, BTreeMap<u64, BTreeSet<SourceCell>>>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("no input frame for file `{0}`")]
    MissingInput(String),
    #[error("variable `{var}` is not bound")]
    Unbound { var: String },
    #[error("line {line}: row {index} out of range for a frame of {rows} rows")]
    OutOfRange { line: usize, index: usize, rows: usize },
    #[error("line {line}: no column `{column}`")]
    MissingColumn { line: usize, column: String },
    #[error("line {line}: join operands share no column")]
    NoJoinKey { line: usize },
    #[error("line {line}: row bound mentions an unvalued symbol")]
    Symbolic { line: usize },
    #[error("line {line}: {what} are not supported by the concrete semantics")]
    Unsupported { line: usize, what: String },
    #[error("{values}^{cells} input assignments exceed the budget of {budget}")]
    Budget { cells: usize, values: usize, budget: u64 },
}

/// All input cells any row of `var` depends on.
pub fn collapse_rows(d: &DependencyMap, var: &str) -> BTreeSet<SourceCell> {
    d.get(var)
        .map(|rows| rows.values().flatten().cloned().collect())
        .unwrap_or_default()
}

/// True when every train variable and every test variable depend on
/// disjoint input cells.
pub fn check_lemma1(d: &DependencyMap, train: &BTreeSet<String>, test: &BTreeSet<String>) -> bool {
    train.iter().all(|o1| {
        let a = collapse_rows(d, o1);
        test.iter().all(|o2| a.is_disjoint(&collapse_rows(d, o2)))
    })
}
