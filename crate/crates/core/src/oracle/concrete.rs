use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_rational::Ratio;

use super::{DependencyMap, OracleError};
use crate::domain::SourceCell;
use crate::lang::{Function, MergeOp, Program, RowExpr, RowSelector, Statement};

pub type Value = Ratio<i64>;

/// A labelled matrix of exact rationals.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConcreteFrame {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl ConcreteFrame {
    pub fn new(columns: Vec<String>, rows: Vec<Vec<Value>>) -> Self {
        debug_assert!(rows.iter().all(|r| r.len() == columns.len()));
        ConcreteFrame { columns, rows }
    }

    pub fn from_ints<S: Into<String>>(columns: impl IntoIterator<Item = S>, rows: &[Vec<i64>]) -> Self {
        let rows = rows
            .iter()
            .map(|r| r.iter().map(|v| Ratio::from_integer(*v)).collect())
            .collect();
        Self::new(columns.into_iter().map(Into::into).collect(), rows)
    }

    /// A single-column frame.
    pub fn column_of(label: &str, values: &[i64]) -> Self {
        let rows: Vec<Vec<i64>> = values.iter().map(|v| vec![*v]).collect();
        Self::from_ints([label], &rows)
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    fn col(&self, label: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == label)
    }

    /// Values of one column, top to bottom.
    pub fn column(&self, label: &str) -> Option<Vec<Value>> {
        let j = self.col(label)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }
}

impl fmt::Display for ConcreteFrame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .rows
            .iter()
            .map(|r| r.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","))
            .collect();
        write!(f, "{}", rows.join("|"))
    }
}

/// Values and row provenance of every variable after a run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConcreteRun {
    pub values: BTreeMap<String, ConcreteFrame>,
    pub deps: DependencyMap,
}

fn eval_bound(e: &RowExpr, val: &BTreeMap<String, u64>, n: usize, line: usize) -> Result<usize, OracleError> {
    match e {
        RowExpr::Const(c) => Ok(*c as usize),
        RowExpr::Inf => Ok(n),
        RowExpr::Sym { name, offset } => {
            let v = *val.get(name).ok_or(OracleError::Symbolic { line })? as i64 + offset;
            Ok(v.max(0) as usize)
        }
    }
}

fn selected_rows(
    sel: &Option<RowSelector>,
    n: usize,
    val: &BTreeMap<String, u64>,
    line: usize,
) -> Result<Vec<usize>, OracleError> {
    match sel {
        None => Ok((0..n).collect()),
        Some(RowSelector::Range { lo, hi }) => {
            // slices clip to the frame, as in Python
            let lo = eval_bound(lo, val, n, line)?.min(n);
            let hi = eval_bound(hi, val, n, line)?.min(n);
            Ok((lo..hi.max(lo)).collect())
        }
        Some(RowSelector::List(rows)) => rows
            .iter()
            .map(|e| {
                let r = eval_bound(e, val, n, line)?;
                if r < n {
                    Ok(r)
                } else {
                    Err(OracleError::OutOfRange { line, index: r, rows: n })
                }
            })
            .collect(),
    }
}

fn min_max(frame: &ConcreteFrame) -> ConcreteFrame {
    let mut out = frame.clone();
    for j in 0..frame.columns.len() {
        let col: Vec<Value> = frame.rows.iter().map(|r| r[j]).collect();
        let (Some(lo), Some(hi)) = (col.iter().min(), col.iter().max()) else {
            continue;
        };
        for (i, v) in col.iter().enumerate() {
            out.rows[i][j] = if hi == lo {
                Ratio::from_integer(0)
            } else {
                (v - lo) / (hi - lo)
            };
        }
    }
    out
}

fn union_all(rows: &[BTreeSet<SourceCell>]) -> BTreeSet<SourceCell> {
    rows.iter().flatten().cloned().collect()
}

/// Runs a branch-free program on concrete inputs, tracking for every row of
/// every variable the input cells it was computed from.
///
/// `valuation` gives values to row symbols; symbol-free programs pass an
/// empty map.
pub fn concrete_run(
    p: &Program,
    inputs: &BTreeMap<String, ConcreteFrame>,
    valuation: &BTreeMap<String, u64>,
) -> Result<ConcreteRun, OracleError> {
    let mut run = ConcreteRun::default();
    for stmt in &p.statements {
        let line = stmt.line;
        let get = |run: &ConcreteRun, v: &str| -> Result<(ConcreteFrame, Vec<BTreeSet<SourceCell>>), OracleError> {
            let frame = run
                .values
                .get(v)
                .ok_or_else(|| OracleError::Unbound { var: v.to_string() })?;
            let deps = run.deps[v].values().cloned().collect();
            Ok((frame.clone(), deps))
        };
        let (target, frame, deps): (&str, ConcreteFrame, Vec<BTreeSet<SourceCell>>) = match &stmt.node {
            Statement::Read { target, file } => {
                let f = inputs
                    .get(file)
                    .ok_or_else(|| OracleError::MissingInput(file.clone()))?;
                let deps = (0..f.nrows())
                    .map(|r| BTreeSet::from([SourceCell::new(file.clone(), r as u64)]))
                    .collect();
                (target, f.clone(), deps)
            }
            Statement::Select {
                target,
                source,
                rows,
                cols,
            } => {
                let (f, d) = get(&run, source)?;
                let picked = selected_rows(rows, f.nrows(), valuation, line)?;
                let col_idx: Vec<usize> = match cols {
                    None => (0..f.columns.len()).collect(),
                    Some(cs) => f
                        .columns
                        .iter()
                        .enumerate()
                        .filter(|(_, c)| cs.contains(*c))
                        .map(|(j, _)| j)
                        .collect(),
                };
                if let Some(cs) = cols {
                    if let Some(missing) = cs.iter().find(|c| f.col(c).is_none()) {
                        return Err(OracleError::MissingColumn {
                            line,
                            column: missing.clone(),
                        });
                    }
                }
                let out = ConcreteFrame::new(
                    col_idx.iter().map(|j| f.columns[*j].clone()).collect(),
                    picked
                        .iter()
                        .map(|r| col_idx.iter().map(|j| f.rows[*r][*j]).collect())
                        .collect(),
                );
                (target, out, picked.iter().map(|r| d[*r].clone()).collect())
            }
            Statement::Merge {
                target,
                op: MergeOp::Concat,
                left,
                right,
            } => {
                let (a, da) = get(&run, left)?;
                let (b, db) = get(&run, right)?;
                let mut columns = a.columns.clone();
                columns.extend(b.columns.iter().filter(|c| a.col(c).is_none()).cloned());
                let zero = Ratio::from_integer(0);
                let pad = |f: &ConcreteFrame| -> Vec<Vec<Value>> {
                    f.rows
                        .iter()
                        .map(|r| {
                            columns
                                .iter()
                                .map(|c| f.col(c).map_or(zero, |j| r[j]))
                                .collect()
                        })
                        .collect()
                };
                let mut rows = pad(&a);
                rows.extend(pad(&b));
                let mut deps = da;
                deps.extend(db);
                (target, ConcreteFrame::new(columns, rows), deps)
            }
            Statement::Merge {
                target,
                op: MergeOp::Join,
                left,
                right,
            } => {
                let (a, da) = get(&run, left)?;
                let (b, db) = get(&run, right)?;
                let key = a
                    .columns
                    .iter()
                    .filter(|c| b.col(c).is_some())
                    .min()
                    .cloned()
                    .ok_or(OracleError::NoJoinKey { line })?;
                let (ka, kb) = (a.col(&key).unwrap(), b.col(&key).unwrap());
                let extra: Vec<usize> = (0..b.columns.len())
                    .filter(|j| a.col(&b.columns[*j]).is_none())
                    .collect();
                let mut columns = a.columns.clone();
                columns.extend(extra.iter().map(|j| b.columns[*j].clone()));
                let mut rows = Vec::new();
                let mut deps = Vec::new();
                for (l, lrow) in a.rows.iter().enumerate() {
                    for (r, rrow) in b.rows.iter().enumerate() {
                        if lrow[ka] == rrow[kb] {
                            let mut row = lrow.clone();
                            row.extend(extra.iter().map(|j| rrow[*j]));
                            rows.push(row);
                            deps.push(da[l].union(&db[r]).cloned().collect());
                        }
                    }
                }
                (target, ConcreteFrame::new(columns, rows), deps)
            }
            Statement::Apply {
                target,
                func: Function::Normalize,
                source,
            } => {
                let (f, d) = get(&run, source)?;
                let all = union_all(&d);
                let deps = vec![all; f.nrows()];
                (target, min_max(&f), deps)
            }
            Statement::Apply { target, source, .. } => {
                let (f, d) = get(&run, source)?;
                (target, f, d)
            }
            Statement::Use { args, .. } => {
                if let Some(v) = args.iter().find(|v| !run.values.contains_key(*v)) {
                    return Err(OracleError::Unbound { var: v.clone() });
                }
                continue;
            }
            Statement::Branch { .. } | Statement::Loop { .. } => {
                return Err(OracleError::Unsupported {
                    line,
                    what: "branches and loops".into(),
                })
            }
        };
        run.values.insert(target.to_string(), frame);
        run.deps
            .insert(target.to_string(), deps.into_iter().enumerate().map(|(r, s)| (r as u64, s)).collect());
    }
    Ok(run)
}
