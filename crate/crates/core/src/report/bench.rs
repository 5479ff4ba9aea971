use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{analyze_notebook_bytes, analyze_program_text, AnalyzeOptions, Report, ReportError};

#[derive(Clone, Debug, Serialize)]
pub struct BenchReport {
    pub target: String,
    pub runs: usize,
    pub samples_ms: Vec<f64>,
    pub median_ms: f64,
    pub max_ms: f64,
    pub findings: usize,
}

fn median(sorted: &[f64]) -> f64 {
    match sorted.len() {
        0 => 0.0,
        n if n % 2 == 1 => sorted[n / 2],
        n => (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0,
    }
}

/// Times `runs` full analyses of a file, each standing for the re-analysis
/// triggered by one cell execution. Searches run on a single thread so the
/// numbers are comparable between machines with different core counts.
pub fn bench(target: &str, bytes: &[u8], runs: usize, opts: &AnalyzeOptions) -> Result<BenchReport, ReportError> {
    let mut opts = opts.clone();
    opts.engine.parallel = false;
    let is_program = Path::new(target).extension().is_some_and(|e| e == "dfl");
    let once = |o: &AnalyzeOptions| -> Result<Report, ReportError> {
        if is_program {
            analyze_program_text(&String::from_utf8_lossy(bytes), target, o)
        } else {
            analyze_notebook_bytes(bytes, target, o)
        }
    };
    let mut samples = Vec::with_capacity(runs);
    let mut findings = 0;
    for _ in 0..runs.max(1) {
        let r = once(&opts)?;
        findings = r.findings.len();
        samples.push(r.timing.total_ms());
    }
    let mut sorted = samples.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(BenchReport {
        target: target.to_string(),
        runs: samples.len(),
        median_ms: median(&sorted),
        max_ms: sorted.last().copied().unwrap_or(0.0),
        samples_ms: samples,
        findings,
    })
}

/// A notebook of `cells` code cells in the shape of a typical modelling
/// notebook: loading, cleaning, feature selection, splitting, scaling,
/// fitting, evaluation and plotting, over a few data sets.
pub fn synthetic_notebook(cells: usize, seed: u64) -> serde_json::Value {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let datasets = (cells / 12).clamp(1, 6);
    let mut sources = vec![
        "import pandas as pd\nimport numpy as np\nfrom sklearn.model_selection import train_test_split\nfrom sklearn.preprocessing import StandardScaler\nfrom sklearn.linear_model import LogisticRegression\nfrom sklearn.metrics import accuracy_score\n".to_string(),
    ];
    for d in 0..datasets {
        sources.push(format!("df{d} = pd.read_csv('data{d}.csv')\ndf{d}.head()\n"));
    }
    let cleaning = [
        "df{d} = df{d}.dropna()\n",
        "df{d} = df{d}.fillna(0)\n",
        "df{d} = df{d}.drop_duplicates()\n",
        "df{d}['ratio'] = df{d}['a'] / df{d}['b']\n",
        "print(df{d}.describe())\n",
        "df{d}.plot()\n",
    ];
    while sources.len() < cells {
        let d = rng.gen_range(0..datasets);
        let stage = rng.gen_range(0..6);
        let text = match stage {
            0 | 1 => cleaning.choose(&mut rng).unwrap().replace("{d}", &d.to_string()),
            2 => format!("X{d} = df{d}[['a', 'b', 'c']]\ny{d} = df{d}[['target']]\n"),
            3 => format!("X_train{d}, X_test{d}, y_train{d}, y_test{d} = train_test_split(X{d}, y{d}, test_size=0.2)\n"),
            4 => {
                if rng.gen_bool(0.5) {
                    format!("sc{d} = StandardScaler()\nX_train{d} = sc{d}.fit_transform(X_train{d})\nX_test{d} = sc{d}.transform(X_test{d})\n")
                } else {
                    format!("m{d} = LogisticRegression()\nm{d}.fit(X_train{d}, y_train{d})\n")
                }
            }
            _ => format!("print(accuracy_score(y_test{d}, m{d}.predict(X_test{d})))\n"),
        };
        sources.push(text);
    }
    sources.truncate(cells.max(1));
    let cells: Vec<serde_json::Value> = sources
        .iter()
        .enumerate()
        .map(|(i, s)| {
            serde_json::json!({
                "cell_type": "code",
                "id": format!("c{}", i + 1),
                "metadata": {},
                "outputs": [],
                "execution_count": null,
                "source": s.split_inclusive('\n').collect::<Vec<_>>(),
            })
        })
        .collect();
    serde_json::json!({"nbformat": 4, "nbformat_minor": 5, "metadata": {}, "cells": cells})
}
