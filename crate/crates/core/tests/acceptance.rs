//! Acceptance checks. Runs as a plain binary (`harness = false`) so that it
//! prints one PASS/FAIL line per criterion and exits non-zero if any fails.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use dlcheck::domain::{
    reduce, AbsDataFrame, AbsDataFrameSet, ColumnAbs, Lattice, ReduceMode, RowInterval, SourceAbs, SourceCell,
    Taint,
};
use dlcheck::engine::PropagationConfig;
use dlcheck::interp::{run, transfer, AbstractState, FindingKind};
use dlcheck::lang::{parse_program, Program, RowExpr};
use dlcheck::oracle::{
    alpha_dependencies, alpha_pointwise, concrete_run, enumerate_traces, fuzz_soundness, generate_program,
    independence, ConcreteFrame, DependencyMap, FuzzConfig, InputShape, TraceSet, Value, DEFAULT_BUDGET,
};
use dlcheck::report::{analyze_path, bench, score_corpus, synthetic_notebook, AnalyzeOptions, CorpusLabel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EXAMPLE_LIMIT: Duration = Duration::from_secs(1);
const FUZZ_LIMIT: Duration = Duration::from_secs(60);
const FUZZ_PROGRAMS: usize = 1000;
const FUZZ_SEED: u64 = 1;
const MIN_LATTICE_CASES: usize = 100_000;
const LATTICE_SEED: u64 = 0x1a77;
const BENCH_CELLS: usize = 50;
const BENCH_RUNS: usize = 10;
const BENCH_MEDIAN_LIMIT_MS: f64 = 1000.0;
const BENCH_K: usize = 5;

type Outcome = Result<String, String>;

fn samples() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../samples")
}

fn read_sample(name: &str) -> Program {
    let text = std::fs::read_to_string(samples().join(name)).expect("sample exists");
    parse_program(&text).expect("sample parses")
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration, what: &str) -> Result<Duration, String> {
    let t = start.elapsed();
    ensure(t < limit, || format!("{what} took {t:?}, limit {limit:?}"))?;
    Ok(t)
}

// ---------------------------------------------------------------- 1

/// Input rows of the sixteen columns, in the published column order.
const TABLE_INPUTS: [[i64; 16]; 4] = [
    [3, 3, 3, 3, 9, 9, 9, 9, 3, 3, 3, 3, 9, 9, 9, 9],
    [3, 3, 9, 9, 3, 3, 9, 9, 3, 3, 9, 9, 3, 3, 9, 9],
    [3, 9, 3, 9, 3, 9, 3, 9, 3, 9, 3, 9, 3, 9, 3, 9],
    [3, 3, 3, 3, 3, 3, 3, 3, 9, 9, 9, 9, 9, 9, 9, 9],
];

/// Train rows 1-2 then test rows 1-2 for normalization before the split.
const TABLE_NORMALIZE_FIRST: [[i64; 16]; 4] = [
    [0, 0, 0, 0, 1, 1, 1, 1, 0, 0, 0, 0, 1, 1, 1, 0],
    [0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1, 0],
    [0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 0],
];

/// The same for normalization after the split.
const TABLE_SPLIT_FIRST: [[i64; 16]; 4] = [
    [0, 0, 0, 0, 1, 1, 0, 0, 0, 0, 0, 0, 1, 1, 0, 0],
    [0, 0, 1, 1, 0, 0, 0, 0, 0, 0, 1, 1, 0, 0, 0, 0],
    [0, 1, 0, 1, 0, 1, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 1, 0, 1, 0, 1, 0],
];

fn shape_4x1() -> BTreeMap<String, InputShape> {
    BTreeMap::from([("i".to_string(), InputShape::new(4, 1))])
}

fn column_of(frame: &ConcreteFrame) -> Vec<Value> {
    frame.rows.iter().map(|r| r[0]).collect()
}

fn check_table(ts: &TraceSet, expected: &[[i64; 16]; 4]) -> Result<(), String> {
    ensure(ts.traces.len() == 16, || format!("{} traces, expected 16", ts.traces.len()))?;
    let by_input: BTreeMap<Vec<Value>, _> = ts
        .traces
        .iter()
        .map(|t| (column_of(&t.inputs["i"]), t))
        .collect();
    for k in 0..16 {
        let input: Vec<Value> = (0..4).map(|r| Value::from_integer(TABLE_INPUTS[r][k])).collect();
        let t = by_input.get(&input).ok_or_else(|| format!("no trace for column {}", k + 1))?;
        let got: Vec<Value> = column_of(&t.outputs["o_train"])
            .into_iter()
            .chain(column_of(&t.outputs["o_test"]))
            .collect();
        let want: Vec<Value> = (0..4).map(|r| Value::from_integer(expected[r][k])).collect();
        ensure(got == want, || format!("column {}: got {got:?}, expected {want:?}", k + 1))?;
    }
    Ok(())
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let values = [3, 9];
    let nf = enumerate_traces(&read_sample("normalize_first.dfl"), &values, &shape_4x1(), DEFAULT_BUDGET)
        .map_err(|e| e.to_string())?;
    check_table(&nf, &TABLE_NORMALIZE_FIRST)?;
    let ind_nf = independence(&nf);
    ensure(!ind_nf.ind, || "normalize-first judged independent".into())?;
    let w = ind_nf.witness.clone().ok_or("no witness")?;
    let sf = enumerate_traces(&read_sample("split_first.dfl"), &values, &shape_4x1(), DEFAULT_BUDGET)
        .map_err(|e| e.to_string())?;
    check_table(&sf, &TABLE_SPLIT_FIRST)?;
    let ind_sf = independence(&sf);
    ensure(ind_sf.ind, || format!("split-first judged dependent: {:?}", ind_sf.witness))?;
    let t = within(start, EXAMPLE_LIMIT, "enumeration")?;
    let shown: Vec<String> = column_of(&nf.traces[w.trace].inputs["i"]).iter().map(|v| v.to_string()).collect();
    Ok(format!(
        "both 16-column tables bit-exact, ind=false (witness {} row {}) / ind=true, {t:.0?}",
        shown.join("|"),
        w.row
    ))
}

// ---------------------------------------------------------------- 2

fn cells(rows: &[u64]) -> BTreeSet<SourceCell> {
    rows.iter().map(|&r| SourceCell::new("i", r)).collect()
}

fn expected_map(train: &[u64], test: &[u64]) -> DependencyMap {
    let per_row = |c: &[u64]| BTreeMap::from([(0, cells(c)), (1, cells(c))]);
    BTreeMap::from([
        ("o_train".to_string(), per_row(train)),
        ("o_test".to_string(), per_row(test)),
    ])
}

fn used_only(d: &DependencyMap) -> DependencyMap {
    d.iter()
        .filter(|(k, _)| *k == "o_train" || *k == "o_test")
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect()
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let files = BTreeSet::from(["i".to_string()]);
    let used = BTreeSet::from(["o_train".to_string(), "o_test".to_string()]);
    let one_input = BTreeMap::from([("i".to_string(), ConcreteFrame::column_of("c0", &[3, 9, 9, 9]))]);
    for (name, want) in [
        ("split_first.dfl", expected_map(&[0, 1], &[2, 3])),
        ("normalize_first.dfl", expected_map(&[0, 1, 2, 3], &[0, 1, 2, 3])),
    ] {
        let p = read_sample(name);
        let ts = enumerate_traces(&p, &[3, 9], &shape_4x1(), DEFAULT_BUDGET).map_err(|e| e.to_string())?;
        let from_traces = alpha_pointwise(&alpha_dependencies(&ts, &files, &used));
        ensure(from_traces == want, || format!("{name}: trace abstraction gave {from_traces:?}"))?;
        let concrete = concrete_run(&p, &one_input, &BTreeMap::new()).map_err(|e| e.to_string())?;
        let from_run = used_only(&concrete.deps);
        ensure(from_run == want, || format!("{name}: concrete provenance gave {from_run:?}"))?;
    }
    let t = within(start, EXAMPLE_LIMIT, "dependency maps")?;
    Ok(format!("both maps equal per variable per row, by trace abstraction and by provenance, {t:.0?}"))
}

// ---------------------------------------------------------------- 3

fn fr(file: &str, cols: &[&str], lo: u64, hi: u64) -> AbsDataFrame {
    AbsDataFrame::new(file, ColumnAbs::of(cols.iter().copied()), RowInterval::constant(lo, hi)).unwrap()
}

fn criterion_3() -> Outcome {
    let r = RowInterval::constant(10, 14);
    ensure(r.idx() == RowInterval::constant(0, 4), || format!("idx = {}", r.idx()))?;
    let back = r.unindex(&RowInterval::constant(1, 3));
    ensure(back == RowInterval::constant(11, 13), || format!("unindex = {back}"))?;

    let a = fr("file", &["id", "city"], 10, 14);
    let country = fr("file", &["country"], 12, 15);
    let id = fr("file", &["id"], 12, 15);
    ensure(!a.overlaps(&country), || "country frame overlaps".into())?;
    ensure(a.overlaps(&id), || "id frame does not overlap".into())?;
    let j = a.join(&country).map_err(|e| e.to_string())?;
    ensure(j == fr("file", &["id", "city", "country"], 10, 15), || format!("join = {j}"))?;
    let m = a.meet(&id).map_err(|e| e.to_string())?;
    ensure(m == Some(fr("file", &["id"], 12, 14)), || format!("meet = {m:?}"))?;
    let c = j.constrain(&ColumnAbs::of(["city"]), &RowInterval::constant(1, 2));
    ensure(c == Some(fr("file", &["city"], 11, 12)), || format!("constrain = {c:?}"))?;

    let s1 = AbsDataFrameSet::new([fr("file1", &["id"], 1, 10), fr("file2", &["name"], 0, 100)]);
    let s2 = AbsDataFrameSet::new([fr("file1", &["id"], 9, 12), fr("file3", &["zip"], 0, 100)]);
    let joined = s1.join(&s2);
    let want = AbsDataFrameSet::new([
        fr("file1", &["id"], 1, 12),
        fr("file2", &["name"], 0, 100),
        fr("file3", &["zip"], 0, 100),
    ]);
    ensure(joined == want && joined.is_canonical(), || format!("reduce = {joined}"))?;
    Ok("row index map, frame overlap/join/meet/constrain and set reduction all exact".into())
}

// ---------------------------------------------------------------- 4

fn criterion_4() -> Outcome {
    let opts = AnalyzeOptions {
        dump_state: true,
        ..AnalyzeOptions::default()
    };
    let r = analyze_path(&samples().join("motivating.dfl"), &opts).map_err(|e| e.to_string())?;
    let states = r.states.as_ref().ok_or("no states dumped")?;
    ensure(states.len() == 7, || format!("{} states", states.len()))?;
    let xyz = ColumnAbs::of(["X_1", "X_2", "y"]);
    let check = |k: usize, var: &str, cols: &ColumnAbs, rows: &[RowInterval], taint: Taint| -> Result<(), String> {
        let v = states[k]
            .state
            .get(var)
            .ok_or_else(|| format!("m{}: {var} unbound", k + 1))?;
        let frames: Vec<&AbsDataFrame> = v.sources.iter().collect();
        ensure(
            frames.len() == 1
                && frames[0].file() == "data.csv"
                && frames[0].cols() == cols
                && rows.contains(frames[0].rows())
                && v.taint == taint,
            || format!("m{}: {var} = {v}", k + 1),
        )
    };
    let all = [RowInterval::all()];
    check(0, "data", &ColumnAbs::Top, &all, Taint::Untainted)?;
    check(1, "X", &xyz, &all, Taint::Untainted)?;
    check(2, "X_norm", &xyz, &all, Taint::MaybeTainted)?;
    let train_rows = [RowInterval::all(), RowInterval::new(RowExpr::sym("cut", 1), RowExpr::Inf)];
    let test_rows = [RowInterval::all(), RowInterval::half_open(RowExpr::Const(0), RowExpr::sym("cut", 1))];
    check(3, "X_train", &xyz, &train_rows, Taint::MaybeTainted)?;
    check(4, "X_test", &xyz, &test_rows, Taint::MaybeTainted)?;
    ensure(states[6].state.env == states[4].state.env, || "uses changed the environment".into())?;
    let kinds: Vec<FindingKind> = r.findings.iter().map(|f| f.finding.kind).collect();
    ensure(kinds == [FindingKind::Taint], || format!("findings {kinds:?}"))?;
    Ok(format!("m1..m5 match, one Taint finding ({} -> {})", r.findings[0].finding.train_var, r.findings[0].finding.test_var))
}

// ---------------------------------------------------------------- 5

fn criterion_5() -> Outcome {
    let r = analyze_path(&samples().join("heart_split.ipynb"), &AnalyzeOptions::default()).map_err(|e| e.to_string())?;
    ensure(r.findings.len() == 1, || format!("{} findings", r.findings.len()))?;
    let f = &r.findings[0];
    ensure(f.finding.kind == FindingKind::Overlap, || format!("kind {}", f.finding.kind))?;
    ensure(f.finding.witness.contains("split"), || format!("witness `{}`", f.finding.witness))?;
    ensure(f.trace.len() == 4, || format!("trace {:?}", f.trace))?;
    Ok(format!("one Overlap, path {}, witness: {}", f.trace.join(" -> "), f.finding.witness))
}

// ---------------------------------------------------------------- 6

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let sound = fuzz_soundness(FuzzConfig {
        programs: FUZZ_PROGRAMS,
        seed: FUZZ_SEED,
        mutate_normalize: false,
    });
    ensure(sound.violations.is_empty(), || {
        format!("{} violations, first: {:?}", sound.violations.len(), sound.violations[0])
    })?;
    ensure(sound.executed > FUZZ_PROGRAMS / 2, || format!("only {} programs executed", sound.executed))?;
    let mutated = fuzz_soundness(FuzzConfig {
        programs: FUZZ_PROGRAMS,
        seed: FUZZ_SEED,
        mutate_normalize: true,
    });
    ensure(!mutated.violations.is_empty(), || "mutated normalize went undetected".into())?;
    let t = within(start, FUZZ_LIMIT, "fuzzing")?;
    Ok(format!(
        "{} programs ({} executed, {} with leakage): 0 violations; mutated rule: {} violations; {t:.1?}",
        sound.generated,
        sound.executed,
        sound.with_leakage,
        mutated.violations.len()
    ))
}

// ---------------------------------------------------------------- 7

const COLS: [&str; 4] = ["a", "b", "c", "d"];
const FILES: [&str; 2] = ["f", "g"];

fn rand_cols(rng: &mut ChaCha8Rng) -> ColumnAbs {
    if rng.gen_ratio(1, 8) {
        return ColumnAbs::Top;
    }
    ColumnAbs::of(COLS.iter().copied().filter(|_| rng.gen_bool(0.5)))
}

fn rand_rows(rng: &mut ChaCha8Rng) -> RowInterval {
    if rng.gen_ratio(1, 10) {
        return RowInterval::Bot;
    }
    let lo = rng.gen_range(0..12);
    if rng.gen_ratio(1, 6) {
        RowInterval::new(RowExpr::Const(lo), RowExpr::Inf)
    } else {
        RowInterval::constant(lo, lo + rng.gen_range(0..8))
    }
}

fn rand_frame(rng: &mut ChaCha8Rng) -> AbsDataFrame {
    loop {
        let file = FILES[rng.gen_range(0..FILES.len())];
        if let Some(f) = AbsDataFrame::new(file, rand_cols(rng), rand_rows(rng)) {
            return f;
        }
    }
}

fn rand_frames(rng: &mut ChaCha8Rng) -> Vec<AbsDataFrame> {
    let n = rng.gen_range(0..5);
    (0..n).map(|_| rand_frame(rng)).collect()
}

fn rand_set(rng: &mut ChaCha8Rng) -> AbsDataFrameSet {
    AbsDataFrameSet::new(rand_frames(rng))
}

fn rand_src(rng: &mut ChaCha8Rng) -> SourceAbs {
    let taint = if rng.gen_bool(0.3) {
        Taint::MaybeTainted
    } else {
        Taint::Untainted
    };
    SourceAbs::new(rand_set(rng), taint)
}

/// Order, join and meet laws of a lattice, checked on one random triple.
fn lattice_laws<T: Lattice + PartialEq + std::fmt::Debug>(a: &T, b: &T, c: &T) -> Result<(), String> {
    let j = a.join(b);
    let m = a.meet(b);
    let fail = |law: &str| format!("{law} fails for {a:?}, {b:?}, {c:?}");
    ensure(a.leq(a), || fail("reflexivity"))?;
    ensure(T::bottom().leq(a), || fail("bottom"))?;
    ensure(a.leq(&j) && b.leq(&j), || fail("join is an upper bound"))?;
    ensure(m.leq(a) && m.leq(b), || fail("meet is a lower bound"))?;
    ensure(j == b.join(a) && m == b.meet(a), || fail("commutativity"))?;
    ensure(a.join(a) == *a && a.meet(a) == *a, || fail("idempotence"))?;
    ensure(a.leq(b) == (j == *b), || fail("a <= b iff a join b = b"))?;
    if a.leq(c) && b.leq(c) {
        ensure(j.leq(c), || fail("join is least"))?;
    }
    if c.leq(a) && c.leq(b) {
        ensure(c.leq(&m), || fail("meet is greatest"))?;
    }
    if a.leq(b) && b.leq(c) {
        ensure(a.leq(c), || fail("transitivity"))?;
    }
    if a.leq(b) && b.leq(a) {
        ensure(a == b, || fail("antisymmetry"))?;
    }
    let l = a.join(b).join(c);
    let r = a.join(&b.join(c));
    ensure(l.leq(&r) && r.leq(&l), || fail("join associativity"))?;
    Ok(())
}

fn frame_laws(a: &AbsDataFrame, b: &AbsDataFrame, ij: &RowInterval) -> Result<(), String> {
    let fail = |law: &str| format!("{law} fails for {a}, {b}");
    ensure(a.leq(a), || fail("reflexivity"))?;
    ensure(a.overlaps(b) == b.overlaps(a), || fail("overlap symmetry"))?;
    if a.file() != b.file() {
        ensure(!a.overlaps(b) && !a.leq(b) && a.join(b).is_err(), || fail("cross-file"))?;
        return Ok(());
    }
    let j = a.join(b).map_err(|e| e.to_string())?;
    ensure(a.leq(&j) && b.leq(&j), || fail("join is an upper bound"))?;
    let m = a.meet(b).map_err(|e| e.to_string())?;
    match &m {
        Some(m) => ensure(m.leq(a) && m.leq(b), || fail("meet is a lower bound"))?,
        None => ensure(!a.overlaps(b), || fail("overlapping frames with an empty meet"))?,
    }
    if a.overlaps(b) {
        ensure(m.is_some(), || fail("overlap without meet"))?;
    }
    if let Some(c) = a.constrain(&ColumnAbs::Top, ij) {
        ensure(c.leq(a), || fail("constrain narrows"))?;
    }
    Ok(())
}

fn reduce_laws(frames: Vec<AbsDataFrame>) -> Result<(), String> {
    let joined = reduce(frames.clone(), ReduceMode::Join);
    ensure(joined.is_canonical(), || format!("join reduction of {frames:?} not canonical: {joined}"))?;
    ensure(frames.iter().all(|f| joined.iter().any(|g| f.leq(g))), || {
        format!("join reduction of {frames:?} lost a frame: {joined}")
    })?;
    ensure(reduce(joined.iter().cloned(), ReduceMode::Join) == joined, || {
        format!("join reduction of {frames:?} not idempotent")
    })?;
    let met = reduce(frames.clone(), ReduceMode::Meet);
    ensure(met.is_canonical(), || format!("meet reduction of {frames:?} not canonical: {met}"))?;
    Ok(())
}

/// Runs a random prefix of one program to get `m1`, joins in the state of a
/// prefix of another to get `m2`, and checks that the rest of the first
/// program keeps the states ordered. Returns the number of statements
/// checked.
fn transfer_monotone(rng: &mut ChaCha8Rng) -> Result<usize, String> {
    let p = generate_program(rng);
    let q = generate_program(rng);
    let k = rng.gen_range(0..=p.statements.len());
    let j = rng.gen_range(0..=q.statements.len());
    let (Ok(a), Ok(b)) = (
        run(&p.statements[..k], AbstractState::default(), None),
        run(&q.statements[..j], AbstractState::default(), None),
    ) else {
        return Ok(0);
    };
    let mut m1 = a.state;
    let mut m2 = m1.join(&b.state);
    ensure(m1.leq(&m2), || format!("state join is not an upper bound in\n{p}"))?;
    let mut checked = 0;
    for s in &p.statements[k..] {
        let (Ok(n1), Ok(n2)) = (transfer(s, &m1, None), transfer(s, &m2, None)) else {
            break;
        };
        ensure(n1.leq(&n2), || format!("transfer of `{}` not monotone in\n{p}", s.node))?;
        (m1, m2) = (n1, n2);
        checked += 1;
    }
    Ok(checked)
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(LATTICE_SEED);
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for _ in 0..20_000 {
        lattice_laws(&rand_cols(&mut rng), &rand_cols(&mut rng), &rand_cols(&mut rng))?;
        *counts.entry("col").or_default() += 1;
        lattice_laws(&rand_rows(&mut rng), &rand_rows(&mut rng), &rand_rows(&mut rng))?;
        *counts.entry("row").or_default() += 1;
        frame_laws(&rand_frame(&mut rng), &rand_frame(&mut rng), &rand_rows(&mut rng))?;
        *counts.entry("df").or_default() += 1;
    }
    for _ in 0..15_000 {
        lattice_laws(&rand_set(&mut rng), &rand_set(&mut rng), &rand_set(&mut rng))?;
        *counts.entry("set").or_default() += 1;
        lattice_laws(&rand_src(&mut rng), &rand_src(&mut rng), &rand_src(&mut rng))?;
        *counts.entry("src").or_default() += 1;
        reduce_laws(rand_frames(&mut rng))?;
        *counts.entry("reduce").or_default() += 1;
    }
    let mut statements = 0;
    for _ in 0..10_000 {
        statements += transfer_monotone(&mut rng)?;
        *counts.entry("transfer").or_default() += 1;
    }
    let total: usize = counts.values().sum();
    ensure(total >= MIN_LATTICE_CASES, || format!("only {total} cases"))?;
    let parts: Vec<String> = counts.iter().map(|(k, v)| format!("{k} {v}")).collect();
    Ok(format!("{total} cases, 0 failures ({}; {statements} transfer steps)", parts.join(", ")))
}

// ---------------------------------------------------------------- 8

fn criterion_8() -> Outcome {
    let nb = serde_json::to_vec(&synthetic_notebook(BENCH_CELLS, 1)).map_err(|e| e.to_string())?;
    let opts = AnalyzeOptions {
        engine: PropagationConfig {
            k_bound: Some(BENCH_K),
            ..PropagationConfig::default()
        },
        ..AnalyzeOptions::default()
    };
    let r = bench("synthetic.ipynb", &nb, BENCH_RUNS, &opts).map_err(|e| e.to_string())?;
    let profile = if cfg!(debug_assertions) { "debug" } else { "release" };
    ensure(r.median_ms < BENCH_MEDIAN_LIMIT_MS, || {
        format!("median {:.1} ms over {} runs ({profile} build)", r.median_ms, r.runs)
    })?;
    Ok(format!(
        "{BENCH_CELLS} cells, K={BENCH_K}: median {:.1} ms, max {:.1} ms over {} runs ({profile} build)",
        r.median_ms, r.max_ms, r.runs
    ))
}

// ---------------------------------------------------------------- 9

fn criterion_9() -> Outcome {
    let dir = samples().join("corpus");
    let labels = CorpusLabel::load_all(&dir.join("labels.json"))?;
    let count = |k: FindingKind| labels.iter().filter(|l| l.expected.iter().any(|f| f.kind == k)).count();
    let (taint, overlap) = (count(FindingKind::Taint), count(FindingKind::Overlap));
    ensure(labels.len() == 20 && taint >= 5 && overlap >= 5, || {
        format!("{} notebooks, {taint} with Taint, {overlap} with Overlap", labels.len())
    })?;
    let s = score_corpus(&dir, &labels, &AnalyzeOptions::default());
    ensure(s.warnings.is_empty(), || format!("warnings: {:?}", s.warnings))?;
    ensure(s.entries.len() == labels.len(), || format!("{} notebooks scored", s.entries.len()))?;
    ensure(s.precision == 1.0 && s.recall == 1.0, || {
        let wrong: Vec<_> = s
            .entries
            .iter()
            .filter(|e| e.score.fp + e.score.fn_ > 0)
            .map(|e| e.notebook.as_str())
            .collect();
        format!("precision {} recall {}, wrong: {wrong:?}", s.precision, s.recall)
    })?;
    Ok(format!(
        "{} notebooks ({taint} Taint, {overlap} Overlap): tp {} fp 0 fn 0, precision 1.0, recall 1.0",
        labels.len(),
        s.total.tp
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("independence tables", criterion_1),
        ("dependency maps", criterion_2),
        ("domain goldens", criterion_3),
        ("motivating states", criterion_4),
        ("notebook overlap", criterion_5),
        ("soundness fuzzing", criterion_6),
        ("lattice properties", criterion_7),
        ("latency", criterion_8),
        ("labelled corpus", criterion_9),
    ];
    let mut failed = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", n + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {detail}", n + 1)
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
