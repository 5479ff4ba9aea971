use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_rational::Ratio;
use rayon::prelude::*;
use serde::Serialize;

use super::concrete::{concrete_run, ConcreteFrame, Value};
use super::{DependencyMap, OracleError};
use crate::domain::SourceCell;
use crate::lang::{used_vars, Program};

/// Default cap on the number of input assignments.
pub const DEFAULT_BUDGET: u64 = 1 << 16;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InputShape {
    pub rows: usize,
    pub columns: Vec<String>,
}

impl InputShape {
    /// `rows x cols` with columns named `c0, c1, ...`.
    pub fn new(rows: usize, cols: usize) -> Self {
        InputShape {
            rows,
            columns: (0..cols).map(|j| format!("c{j}")).collect(),
        }
    }
}

/// One run: the inputs it was given and the values of the used variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub inputs: BTreeMap<String, ConcreteFrame>,
    pub outputs: BTreeMap<String, ConcreteFrame>,
}

#[derive(Clone, Debug)]
pub struct TraceSet {
    pub traces: Vec<Trace>,
    pub values: Vec<i64>,
    pub train: BTreeSet<String>,
    pub test: BTreeSet<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IndWitness {
    pub trace: usize,
    pub file: String,
    pub row: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Independence {
    pub ind: bool,
    pub witness: Option<IndWitness>,
}

/// `i[r] ~> o[r']`: row `r'` of used variable `o` depends on input cell `i[r]`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Dependency {
    pub input: SourceCell,
    pub output: String,
    pub row: u64,
}

/// Runs `p` on every assignment of `values` to the input cells.
pub fn enumerate_traces(
    p: &Program,
    values: &[i64],
    shapes: &BTreeMap<String, InputShape>,
    budget: u64,
) -> Result<TraceSet, OracleError> {
    let cells: Vec<(&String, usize, usize)> = shapes
        .iter()
        .flat_map(|(f, s)| (0..s.rows).flat_map(move |r| (0..s.columns.len()).map(move |c| (f, r, c))))
        .collect();
    let base = values.len() as u64;
    let total = u32::try_from(cells.len())
        .ok()
        .and_then(|n| base.checked_pow(n))
        .filter(|t| *t <= budget)
        .ok_or(OracleError::Budget {
            cells: cells.len(),
            values: values.len(),
            budget,
        })?;
    let used = used_vars(p);
    let outputs: BTreeSet<String> = used.train.union(&used.test).cloned().collect();
    let traces = (0..total)
        .into_par_iter()
        .map(|k| {
            let mut inputs: BTreeMap<String, ConcreteFrame> = shapes
                .iter()
                .map(|(f, s)| {
                    let zero = vec![Ratio::from_integer(0); s.columns.len()];
                    (f.clone(), ConcreteFrame::new(s.columns.clone(), vec![zero; s.rows]))
                })
                .collect();
            // the first cell is the most significant digit
            let mut rest = k;
            for (file, r, c) in cells.iter().rev() {
                let v = values[(rest % base) as usize];
                rest /= base;
                inputs.get_mut(*file).unwrap().rows[*r][*c] = Ratio::from_integer(v);
            }
            let run = concrete_run(p, &inputs, &BTreeMap::new())?;
            let outs = outputs
                .iter()
                .filter_map(|o| run.values.get(o).map(|v| (o.clone(), v.clone())))
                .collect();
            Ok(Trace { inputs, outputs: outs })
        })
        .collect::<Result<Vec<_>, OracleError>>()?;
    Ok(TraceSet {
        traces,
        values: values.to_vec(),
        train: used.train,
        test: used.test,
    })
}

/// Every row vector over the value set, for a row of `width` columns.
fn row_values(values: &[i64], width: usize) -> Vec<Vec<Value>> {
    let mut out = vec![Vec::new()];
    for _ in 0..width {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(Ratio::from_integer(*v));
                    p
                })
            })
            .collect();
    }
    out
}

struct Index<'a> {
    ts: &'a TraceSet,
    by_inputs: HashMap<&'a BTreeMap<String, ConcreteFrame>, usize>,
}

impl<'a> Index<'a> {
    fn new(ts: &'a TraceSet) -> Self {
        let by_inputs = ts.traces.iter().enumerate().map(|(k, t)| (&t.inputs, k)).collect();
        Index { ts, by_inputs }
    }

    /// The trace equal to `sigma` except that row `r` of `file` is `v`.
    fn variant(&self, sigma: &Trace, file: &str, r: usize, v: &[Value]) -> Option<&'a Trace> {
        let mut inputs = sigma.inputs.clone();
        inputs.get_mut(file)?.rows[r] = v.to_vec();
        self.by_inputs.get(&inputs).map(|k| &self.ts.traces[*k])
    }

    /// `unch(sigma, i, r, U)` for a deterministic program.
    fn unch(&self, sigma: &Trace, file: &str, r: usize, used: &BTreeSet<String>) -> bool {
        let current = &sigma.inputs[file].rows[r];
        let width = current.len();
        row_values(&self.ts.values, width)
            .iter()
            .filter(|v| *v != current)
            .all(|v| match self.variant(sigma, file, r, v) {
                None => false,
                Some(other) => used.iter().all(|u| sigma.outputs.get(u) == other.outputs.get(u)),
            })
    }
}

/// Evaluates the independence predicate over the whole trace set.
pub fn independence(ts: &TraceSet) -> Independence {
    let idx = Index::new(ts);
    let witness = ts
        .traces
        .par_iter()
        .enumerate()
        .find_map_first(|(k, sigma)| {
            for (file, frame) in &sigma.inputs {
                for r in 0..frame.nrows() {
                    if !idx.unch(sigma, file, r, &ts.test) && !idx.unch(sigma, file, r, &ts.train) {
                        return Some(IndWitness {
                            trace: k,
                            file: file.clone(),
                            row: r,
                        });
                    }
                }
            }
            None
        });
    Independence {
        ind: witness.is_none(),
        witness,
    }
}

pub fn enumerate_independence(
    p: &Program,
    values: &[i64],
    shapes: &BTreeMap<String, InputShape>,
    budget: u64,
) -> Result<(TraceSet, Independence), OracleError> {
    let ts = enumerate_traces(p, values, shapes, budget)?;
    let ind = independence(&ts);
    Ok((ts, ind))
}

/// The dependencies `i[r] ~> o[r']` for inputs `files` and used variables
/// `used`: some trace and some replacement value for `i[r]` such that no
/// trace agreeing elsewhere and on `o[r']` carries that value.
pub fn alpha_dependencies(
    ts: &TraceSet,
    files: &BTreeSet<String>,
    used: &BTreeSet<String>,
) -> BTreeSet<Dependency> {
    let idx = Index::new(ts);
    let Some(first) = ts.traces.first() else {
        return BTreeSet::new();
    };
    let mut out = BTreeSet::new();
    for file in files {
        let Some(frame) = first.inputs.get(file) else { continue };
        let candidates = row_values(&ts.values, frame.columns.len());
        for r in 0..frame.nrows() {
            for o in used {
                let out_rows = ts
                    .traces
                    .iter()
                    .filter_map(|t| t.outputs.get(o).map(|f| f.nrows()))
                    .max()
                    .unwrap_or(0);
                for r2 in 0..out_rows {
                    let cell = |t: &Trace| t.outputs.get(o).and_then(|f| f.rows.get(r2).cloned());
                    let depends = ts.traces.iter().any(|sigma| {
                        candidates.iter().any(|v| {
                            // sigma itself agrees with sigma, so v must differ
                            if &sigma.inputs[file].rows[r] == v {
                                return false;
                            }
                            idx.variant(sigma, file, r, v)
                                .is_some_and(|other| cell(other) != cell(sigma))
                        })
                    });
                    if depends {
                        out.insert(Dependency {
                            input: SourceCell::new(file.clone(), r as u64),
                            output: o.clone(),
                            row: r2 as u64,
                        });
                    }
                }
            }
        }
    }
    out
}

/// Groups dependencies per used variable and row.
pub fn alpha_pointwise(deps: &BTreeSet<Dependency>) -> DependencyMap {
    let mut out = DependencyMap::new();
    for d in deps {
        out.entry(d.output.clone())
            .or_default()
            .entry(d.row)
            .or_default()
            .insert(d.input.clone());
    }
    out
}
