use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::concrete::{concrete_run, ConcreteFrame};
use super::{check_lemma1, collapse_rows, OracleError};
use crate::domain::RowInterval;
use crate::interp::{run_with, AbstractState, TransferOptions};
use crate::lang::{Function, MergeOp, Program, RowExpr, RowSelector, Statement, Stmt, UseKind};

pub const MAX_STATEMENTS: usize = 8;
pub const MAX_ROWS: usize = 4;
pub const FILES: [&str; 2] = ["a", "b"];
pub const VALUES: [i64; 2] = [3, 9];
const COLUMNS: [&str; 3] = ["k", "v", "w"];

#[derive(Clone, Copy, Debug)]
pub struct FuzzConfig {
    pub programs: usize,
    pub seed: u64,
    /// Runs the analysis with a normalize rule that forgets the taint.
    pub mutate_normalize: bool,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            programs: 1000,
            seed: 1,
            mutate_normalize: false,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Violation {
    pub property: &'static str,
    pub program: String,
    pub inputs: BTreeMap<String, String>,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct FuzzReport {
    pub seed: u64,
    pub generated: usize,
    pub executed: usize,
    pub discarded: usize,
    pub with_leakage: usize,
    pub violations: Vec<Violation>,
}

struct Gen {
    rng: ChaCha8Rng,
    vars: Vec<String>,
    read: BTreeSet<&'static str>,
}

impl Gen {
    fn fresh(&mut self) -> String {
        let v = format!("v{}", self.vars.len());
        self.vars.push(v.clone());
        v
    }

    fn any_var(&mut self) -> String {
        self.vars.choose(&mut self.rng).cloned().expect("a read comes first")
    }

    fn read(&mut self, file: &'static str) -> Statement {
        self.read.insert(file);
        Statement::Read {
            target: self.fresh(),
            file: file.to_string(),
        }
    }

    fn rows(&mut self) -> Option<RowSelector> {
        match self.rng.gen_range(0..4) {
            0 => None,
            1 => {
                let n = self.rng.gen_range(1..=3);
                let rows = (0..n)
                    .map(|_| RowExpr::Const(self.rng.gen_range(0..MAX_ROWS as u64)))
                    .collect();
                Some(RowSelector::List(rows))
            }
            _ => {
                let lo = self.rng.gen_range(0..=MAX_ROWS as u64);
                let hi = if self.rng.gen_bool(0.3) {
                    RowExpr::Inf
                } else {
                    RowExpr::Const(self.rng.gen_range(lo..=MAX_ROWS as u64 + 1))
                };
                Some(RowSelector::Range {
                    lo: RowExpr::Const(lo),
                    hi,
                })
            }
        }
    }

    fn cols(&mut self) -> Option<BTreeSet<String>> {
        if self.rng.gen_bool(0.5) {
            return None;
        }
        let picked: BTreeSet<String> = COLUMNS
            .iter()
            .filter(|_| self.rng.gen_bool(0.5))
            .map(|c| c.to_string())
            .collect();
        (!picked.is_empty()).then_some(picked)
    }

    fn statement(&mut self) -> Statement {
        match self.rng.gen_range(0..10) {
            0 if self.read.len() < FILES.len() => {
                let f = *FILES.iter().find(|f| !self.read.contains(*f)).unwrap();
                self.read(f)
            }
            0..=3 => {
                let source = self.any_var();
                let (rows, cols) = (self.rows(), self.cols());
                Statement::Select {
                    target: self.fresh(),
                    source,
                    rows,
                    cols,
                }
            }
            4 | 5 => {
                let (left, right) = (self.any_var(), self.any_var());
                let op = if self.rng.gen_bool(0.5) { MergeOp::Concat } else { MergeOp::Join };
                Statement::Merge {
                    target: self.fresh(),
                    op,
                    left,
                    right,
                }
            }
            6 | 7 => {
                let source = self.any_var();
                let func = if self.rng.gen_bool(0.7) {
                    Function::Normalize
                } else {
                    Function::Other("fillna".into())
                };
                Statement::Apply {
                    target: self.fresh(),
                    func,
                    source,
                }
            }
            _ => {
                let kind = if self.rng.gen_bool(0.5) { UseKind::Train } else { UseKind::Test };
                Statement::Use {
                    kind,
                    args: BTreeSet::from([self.any_var()]),
                }
            }
        }
    }
}

/// A random symbol-free program over files `a` and `b`, ending with one
/// train and one test use.
pub fn generate_program(rng: &mut ChaCha8Rng) -> Program {
    let mut g = Gen {
        rng: ChaCha8Rng::from_rng(rng).expect("seeding from a ChaCha stream"),
        vars: Vec::new(),
        read: BTreeSet::new(),
    };
    let len = g.rng.gen_range(3..=MAX_STATEMENTS);
    let first = *FILES.choose(&mut g.rng).unwrap();
    let mut stmts = vec![g.read(first)];
    for _ in 0..len - 3 {
        stmts.push(g.statement());
    }
    for kind in [UseKind::Train, UseKind::Test] {
        stmts.push(Statement::Use {
            kind,
            args: BTreeSet::from([g.any_var()]),
        });
    }
    Program::new(stmts.into_iter().enumerate().map(|(i, s)| Stmt::new(i + 1, s)).collect())
}

/// Random inputs: up to four rows, the key column plus some of `v`, `w`.
pub fn generate_inputs(rng: &mut ChaCha8Rng) -> BTreeMap<String, ConcreteFrame> {
    FILES
        .iter()
        .map(|f| {
            let rows = rng.gen_range(1..=MAX_ROWS);
            let mut cols = vec!["k"];
            cols.extend(COLUMNS[1..].iter().filter(|_| rng.gen_bool(0.5)));
            let data: Vec<Vec<i64>> = (0..rows)
                .map(|_| cols.iter().map(|_| *VALUES.choose(rng).unwrap()).collect())
                .collect();
            (f.to_string(), ConcreteFrame::from_ints(cols, &data))
        })
        .collect()
}

fn row_covered(rows: &RowInterval, r: u64) -> bool {
    rows.bounds().is_some_and(|(lo, hi)| {
        let c = RowExpr::Const(r);
        lo.le(&c) == Some(true) && c.le(hi) == Some(true)
    })
}

enum Outcome {
    Discarded,
    Checked { leaks: bool, violations: Vec<Violation> },
}

fn check_one(p: &Program, inputs: &BTreeMap<String, ConcreteFrame>, opts: TransferOptions) -> Outcome {
    let run = match concrete_run(p, inputs, &BTreeMap::new()) {
        Ok(r) => r,
        Err(OracleError::Unsupported { .. }) | Err(_) => return Outcome::Discarded,
    };
    let analysis = match run_with(&p.statements, AbstractState::default(), None, opts) {
        Ok(a) => a,
        Err(_) => return Outcome::Discarded,
    };
    let describe = || {
        inputs
            .iter()
            .map(|(f, v)| (f.clone(), format!("{} :: {}", v.columns.join(","), v)))
            .collect()
    };
    let mut violations = Vec::new();
    for (var, rows) in &run.deps {
        let abs = &analysis.state.env[var];
        let collapsed: BTreeSet<_> = rows.values().flatten().collect();
        let missing: Vec<String> = collapsed
            .iter()
            .filter(|c| !abs.sources.iter().any(|f| f.file() == c.file && row_covered(f.rows(), c.row)))
            .map(|c| c.to_string())
            .collect();
        if !missing.is_empty() {
            violations.push(Violation {
                property: "gamma",
                program: p.to_string(),
                inputs: describe(),
                detail: format!("{var} = {abs} misses {}", missing.join(", ")),
            });
        }
    }
    let used = crate::lang::used_vars(p);
    let lemma1 = check_lemma1(&run.deps, &used.train, &used.test);
    if !lemma1 && analysis.findings.is_empty() {
        let train: Vec<String> = used.train.iter().map(|v| format!("{v}: {:?}", collapse_rows(&run.deps, v))).collect();
        violations.push(Violation {
            property: "lemma",
            program: p.to_string(),
            inputs: describe(),
            detail: format!("train and test share input rows ({}) but no finding", train.join("; ")),
        });
    }
    Outcome::Checked {
        leaks: !lemma1,
        violations,
    }
}

/// Differential check of the analysis against the concrete semantics on
/// random programs. Deterministic for a given seed.
pub fn fuzz_soundness(cfg: FuzzConfig) -> FuzzReport {
    let opts = TransferOptions {
        taint_on_normalize: !cfg.mutate_normalize,
    };
    let outcomes: Vec<Outcome> = (0..cfg.programs)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(k as u64);
            let p = generate_program(&mut rng);
            let inputs = generate_inputs(&mut rng);
            check_one(&p, &inputs, opts)
        })
        .collect();
    let mut report = FuzzReport {
        seed: cfg.seed,
        generated: cfg.programs,
        executed: 0,
        discarded: 0,
        with_leakage: 0,
        violations: Vec::new(),
    };
    for o in outcomes {
        match o {
            Outcome::Discarded => report.discarded += 1,
            Outcome::Checked { leaks, violations } => {
                report.executed += 1;
                report.with_leakage += leaks as usize;
                report.violations.extend(violations);
            }
        }
    }
    report
}
