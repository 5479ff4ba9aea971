use std::path::PathBuf;
use std::process::{Command, Output};

fn samples() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../samples")
}

fn dlcheck(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dlcheck"))
        .args(args)
        .env_remove("DLCHECK_KB")
        .output()
        .expect("binary runs")
}

fn sample(name: &str) -> String {
    samples().join(name).display().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn analyze_exit_codes() {
    assert_eq!(dlcheck(&["analyze", &sample("motivating.dfl")]).status.code(), Some(1));
    assert_eq!(dlcheck(&["analyze", &sample("split_then_normalize.dfl")]).status.code(), Some(0));
    assert_eq!(dlcheck(&["analyze", "/nonexistent/x.dfl"]).status.code(), Some(2));
    assert_eq!(dlcheck(&["analyze", &sample("corpus/labels.json")]).status.code(), Some(2));
    assert_eq!(dlcheck(&["analyze", &sample("heart_split.ipynb"), "--start-cell", "nope"]).status.code(), Some(2));
    assert_eq!(dlcheck(&["analyze"]).status.code(), Some(2));
}

#[test]
fn json_report_shape() {
    let o = dlcheck(&["analyze", &sample("heart_split.ipynb"), "--format", "json"]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["version"], 1);
    let f = &v["findings"].as_array().unwrap()[0];
    assert_eq!(f["kind"], "Overlap");
    assert_eq!(f["trace"].as_array().unwrap().len(), 4);
    assert!(v["timing"]["analyze_ms"].is_number());
    assert!(v.get("states").is_none());
}

#[test]
fn text_report_names_the_path() {
    let out = stdout(&dlcheck(&["analyze", &sample("heart_split.ipynb")]));
    assert!(out.contains("[Overlap] train X_train"), "{out}");
    assert!(out.contains("executing cell1 -> cell3 -> cell4 -> cell5 may leak"), "{out}");
}

#[test]
fn dump_state_lists_every_statement() {
    let o = dlcheck(&["analyze", &sample("motivating.dfl"), "--dump-state", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let states = v["states"].as_array().unwrap();
    assert_eq!(states.len(), 7);
    assert_eq!(states[2]["statement"], "X_norm = normalize(X)");
    assert!(states[2]["state"]["row_exact"].is_array());
}

#[test]
fn propagation_bound_flag() {
    let nb = sample("motivating.ipynb");
    let at = |k: &str| -> serde_json::Value {
        serde_json::from_slice(&dlcheck(&["analyze", &nb, "--k", k, "--format", "json"]).stdout).unwrap()
    };
    // the leak needs all six cells
    assert!(at("5")["findings"].as_array().unwrap().is_empty());
    for k in ["6", "inf"] {
        let v = at(k);
        let f = v["findings"].as_array().unwrap();
        assert_eq!(f.len(), 1, "k = {k}");
        assert_eq!(f[0]["kind"], "Taint");
        assert_eq!(f[0]["trace"].as_array().unwrap().len(), 6);
    }
    assert_eq!(dlcheck(&["analyze", &nb, "--k", "many"]).status.code(), Some(2));
}

#[test]
fn oracle_on_both_orders() {
    let leaky = dlcheck(&["oracle", &sample("normalize_first.dfl"), "--shape", "i=4x1", "--values", "3,9"]);
    assert_eq!(leaky.status.code(), Some(1));
    let out = stdout(&leaky);
    assert!(out.contains("independent: false"), "{out}");
    assert!(out.contains("o_train[0] <- i[0], i[1], i[2], i[3]"), "{out}");
    let clean = dlcheck(&["oracle", &sample("split_first.dfl"), "--shape", "i=4x1", "--values", "3,9"]);
    assert_eq!(clean.status.code(), Some(0));
    let out = stdout(&clean);
    assert!(out.contains("independent: true"), "{out}");
    assert!(out.contains("o_test[1] <- i[2], i[3]"), "{out}");
}

#[test]
fn oracle_fuzzing_and_mutation() {
    let sound = dlcheck(&["oracle", "--budget", "200", "--seed", "4"]);
    assert_eq!(sound.status.code(), Some(0), "{}", stdout(&sound));
    let mutated = dlcheck(&["oracle", "--budget", "1000", "--seed", "1", "--mutate-normalize"]);
    assert_eq!(mutated.status.code(), Some(1));
}

#[test]
fn corpus_scores_perfectly() {
    let o = dlcheck(&["corpus", &sample("corpus"), "--jobs", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("precision 1.000  recall 1.000"));
}

#[test]
fn bench_synthetic() {
    let o = dlcheck(&["bench", "--synthetic", "12", "--runs", "2", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("2 runs"));
}

#[test]
fn custom_knowledge_base() {
    let dir = tempfile::tempdir().unwrap();
    let kb = dir.path().join("kb.json");
    std::fs::write(&kb, "not json").unwrap();
    let o = dlcheck(&["analyze", &sample("heart_split.ipynb"), "--kb", kb.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
