use std::collections::{BTreeMap, BTreeSet};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use dlcheck::engine::PropagationConfig;
use dlcheck::lang::parse_program;
use dlcheck::notebook::KnowledgeBase;
use dlcheck::oracle::{
    alpha_dependencies, alpha_pointwise, enumerate_independence, fuzz_soundness, FuzzConfig, InputShape,
    DEFAULT_BUDGET,
};
use dlcheck::report::{self, AnalyzeOptions, CorpusLabel};

#[derive(Parser)]
#[command(name = "dlcheck", version, about = "Static detection of train/test data leakage")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args)]
struct EngineFlags {
    /// Longest cell path explored in notebooks (`inf` for no bound).
    #[arg(long = "k", value_name = "N", default_value = "5", value_parser = parse_k)]
    k: KBound,
    /// Keep exploring a path after it produced a finding.
    #[arg(long)]
    no_halt_on_finding: bool,
    /// Knowledge base file (overrides DLCHECK_KB).
    #[arg(long, value_name = "PATH")]
    kb: Option<PathBuf>,
}

impl EngineFlags {
    fn options(&self) -> Result<AnalyzeOptions, String> {
        Ok(AnalyzeOptions {
            engine: PropagationConfig {
                k_bound: self.k.0,
                halt_on_finding: !self.no_halt_on_finding,
                ..PropagationConfig::default()
            },
            kb: KnowledgeBase::load(self.kb.as_deref())?,
            ..AnalyzeOptions::default()
        })
    }
}

#[derive(Clone, Copy)]
struct KBound(Option<usize>);

fn parse_k(s: &str) -> Result<KBound, String> {
    match s {
        "inf" | "none" | "unbounded" => Ok(KBound(None)),
        _ => s.parse().map(|k| KBound(Some(k))).map_err(|e| format!("{e}")),
    }
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a .dfl program or an .ipynb notebook.
    Analyze {
        path: PathBuf,
        #[command(flatten)]
        engine: EngineFlags,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Include the abstract state after every statement (programs only).
        #[arg(long)]
        dump_state: bool,
        /// Explore only executions starting at this cell.
        #[arg(long, value_name = "ID")]
        start_cell: Option<String>,
    },
    /// Score a labelled corpus of notebooks.
    Corpus {
        dir: PathBuf,
        /// Labels file; defaults to labels.json in the corpus directory.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[command(flatten)]
        engine: EngineFlags,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Worker threads (defaults to the number of cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Run the concrete oracles: exhaustive independence check of a program,
    /// or the soundness fuzzer when no program is given.
    Oracle {
        program: Option<PathBuf>,
        /// Values each input cell ranges over.
        #[arg(long, value_delimiter = ',', default_value = "3,9")]
        values: Vec<i64>,
        /// Input shape as FILE=ROWSxCOLS; repeatable.
        #[arg(long, value_parser = parse_shape)]
        shape: Vec<(String, InputShape)>,
        /// Maximum input assignments to enumerate, or number of fuzzed programs.
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Fuzz against a normalize rule that forgets taint.
        #[arg(long)]
        mutate_normalize: bool,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Time repeated analyses of a file or of a generated notebook.
    Bench {
        /// File to analyze; omit with --synthetic.
        path: Option<PathBuf>,
        /// Generate a notebook with this many cells.
        #[arg(long, value_name = "CELLS")]
        synthetic: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[command(flatten)]
        engine: EngineFlags,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
}

fn parse_shape(s: &str) -> Result<(String, InputShape), String> {
    let (file, dims) = s.rsplit_once('=').ok_or("expected FILE=ROWSxCOLS")?;
    let (r, c) = dims.split_once(['x', 'X']).ok_or("expected ROWSxCOLS")?;
    let rows = r.parse().map_err(|e| format!("rows: {e}"))?;
    let cols = c.parse().map_err(|e| format!("columns: {e}"))?;
    Ok((file.to_string(), InputShape::new(rows, cols)))
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report types serialize")
}

fn emit(s: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(s.as_bytes());
    if !s.ends_with('\n') {
        let _ = out.write_all(b"\n");
    }
}

fn analyze(
    path: &Path,
    engine: &EngineFlags,
    format: Format,
    dump_state: bool,
    start_cell: Option<String>,
) -> Result<u8, String> {
    let mut opts = engine.options()?;
    opts.dump_state = dump_state;
    opts.start_cell = start_cell;
    let r = report::analyze_path(path, &opts).map_err(|e| e.to_string())?;
    emit(&match format {
        Format::Text => report::render_text(&r),
        Format::Json => json(&r),
    });
    Ok(r.exit_code() as u8)
}

fn corpus(
    dir: &Path,
    labels: Option<PathBuf>,
    engine: &EngineFlags,
    format: Format,
    jobs: Option<usize>,
) -> Result<u8, String> {
    let opts = engine.options()?;
    let labels = CorpusLabel::load_all(&labels.unwrap_or_else(|| dir.join("labels.json")))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| e.to_string())?;
    let s = pool.install(|| report::score_corpus(dir, &labels, &opts));
    match format {
        Format::Json => emit(&json(&s)),
        Format::Text => {
            let mut t = String::new();
            for e in &s.entries {
                t += &format!("{:<40} tp {} fp {} fn {}\n", e.notebook, e.score.tp, e.score.fp, e.score.fn_);
                for f in &e.false_positives {
                    t += &format!("    unexpected {:?} {} / {}\n", f.kind, f.train_var, f.test_var);
                }
                for f in &e.false_negatives {
                    t += &format!("    missed {:?} {} / {}\n", f.kind, f.train_var, f.test_var);
                }
            }
            for (k, v) in &s.per_kind {
                t += &format!("{k}: tp {} fp {} fn {}\n", v.tp, v.fp, v.fn_);
            }
            t += &format!(
                "total: tp {} fp {} fn {}  precision {:.3}  recall {:.3}\n",
                s.total.tp, s.total.fp, s.total.fn_, s.precision, s.recall
            );
            t += "error path length (cells):\n";
            for (n, c) in &s.path_length_histogram {
                t += &format!("  {n:>3} {}\n", "#".repeat(*c));
            }
            for w in &s.warnings {
                t += &format!("warning: {w}\n");
            }
            emit(&t);
        }
    }
    Ok(u8::from(s.total.fp + s.total.fn_ > 0))
}

#[derive(Serialize)]
struct TraceRow {
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
}

#[derive(Serialize)]
struct Enumeration {
    traces: Vec<TraceRow>,
    ind: bool,
    witness: Option<String>,
    dependencies: BTreeMap<String, BTreeMap<u64, Vec<String>>>,
}

fn oracle_enumerate(
    program: &Path,
    values: &[i64],
    shapes: Vec<(String, InputShape)>,
    budget: u64,
    format: Format,
) -> Result<u8, String> {
    let text = std::fs::read_to_string(program).map_err(|e| format!("{}: {e}", program.display()))?;
    let p = parse_program(&text).map_err(|e| e.to_string())?;
    let shapes: BTreeMap<String, InputShape> = shapes.into_iter().collect();
    let (ts, ind) = enumerate_independence(&p, values, &shapes, budget).map_err(|e| e.to_string())?;
    let files: BTreeSet<String> = shapes.keys().cloned().collect();
    let used: BTreeSet<String> = ts.train.union(&ts.test).cloned().collect();
    let deps = alpha_pointwise(&alpha_dependencies(&ts, &files, &used));
    let out = Enumeration {
        traces: ts
            .traces
            .iter()
            .map(|t| TraceRow {
                inputs: t.inputs.iter().map(|(k, v)| (k.clone(), v.to_string())).collect(),
                outputs: t.outputs.iter().map(|(k, v)| (k.clone(), v.to_string())).collect(),
            })
            .collect(),
        ind: ind.ind,
        witness: ind
            .witness
            .as_ref()
            .map(|w| format!("trace {} changing {} row {}", w.trace, w.file, w.row)),
        dependencies: deps
            .iter()
            .map(|(v, rows)| {
                let rows = rows
                    .iter()
                    .map(|(r, cells)| (*r, cells.iter().map(ToString::to_string).collect()))
                    .collect();
                (v.clone(), rows)
            })
            .collect(),
    };
    match format {
        Format::Json => emit(&json(&out)),
        Format::Text => {
            let mut t = String::new();
            for row in &out.traces {
                let ins: Vec<String> = row.inputs.iter().map(|(k, v)| format!("{k}={v}")).collect();
                let outs: Vec<String> = row.outputs.iter().map(|(k, v)| format!("{k}={v}")).collect();
                t += &format!("{}  ->  {}\n", ins.join(" "), outs.join(" "));
            }
            t += &format!("independent: {}\n", out.ind);
            if let Some(w) = &out.witness {
                t += &format!("witness: {w}\n");
            }
            for (v, rows) in &out.dependencies {
                for (r, cells) in rows {
                    t += &format!("{v}[{r}] <- {}\n", cells.join(", "));
                }
            }
            emit(&t);
        }
    }
    Ok(u8::from(!out.ind))
}

fn oracle_fuzz(budget: u64, seed: u64, mutate_normalize: bool, format: Format) -> Result<u8, String> {
    let r = fuzz_soundness(FuzzConfig {
        programs: usize::try_from(budget).map_err(|e| e.to_string())?,
        seed,
        mutate_normalize,
    });
    match format {
        Format::Json => emit(&json(&r)),
        Format::Text => {
            let mut t = format!(
                "seed {}: {} programs, {} executed, {} discarded, {} with leakage, {} violations\n",
                r.seed,
                r.generated,
                r.executed,
                r.discarded,
                r.with_leakage,
                r.violations.len()
            );
            for v in &r.violations {
                t += &format!("--- {} ({})\n{}inputs: {:?}\n", v.property, v.detail, v.program, v.inputs);
            }
            emit(&t);
        }
    }
    Ok(u8::from(!r.violations.is_empty()))
}

fn bench(
    path: Option<PathBuf>,
    synthetic: Option<usize>,
    seed: u64,
    runs: usize,
    engine: &EngineFlags,
    format: Format,
) -> Result<u8, String> {
    let opts = engine.options()?;
    let (target, bytes) = match (path, synthetic) {
        (Some(p), None) => {
            let b = std::fs::read(&p).map_err(|e| format!("{}: {e}", p.display()))?;
            (p.display().to_string(), b)
        }
        (None, Some(n)) => (
            format!("synthetic-{n}-cells.ipynb"),
            serde_json::to_vec(&report::synthetic_notebook(n, seed)).expect("notebook JSON"),
        ),
        _ => return Err("give either a path or --synthetic".into()),
    };
    let r = report::bench(&target, &bytes, runs, &opts).map_err(|e| e.to_string())?;
    emit(&match format {
        Format::Json => json(&r),
        Format::Text => format!(
            "{}: {} runs, median {:.2} ms, max {:.2} ms, {} findings",
            r.target, r.runs, r.median_ms, r.max_ms, r.findings
        ),
    });
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Analyze {
            path,
            engine,
            format,
            dump_state,
            start_cell,
        } => analyze(&path, &engine, format, dump_state, start_cell),
        Command::Corpus {
            dir,
            labels,
            engine,
            format,
            jobs,
        } => corpus(&dir, labels, &engine, format, jobs),
        Command::Oracle {
            program,
            values,
            shape,
            budget,
            seed,
            mutate_normalize,
            format,
        } => match program {
            Some(p) => oracle_enumerate(&p, &values, shape, budget.unwrap_or(DEFAULT_BUDGET), format),
            None => oracle_fuzz(budget.unwrap_or(1000), seed, mutate_normalize, format),
        },
        Command::Bench {
            path,
            synthetic,
            seed,
            runs,
            engine,
            format,
        } => bench(path, synthetic, seed, runs, &engine, format),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
