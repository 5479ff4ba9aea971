//! Running the analysis on files and presenting the results.

mod bench;
mod corpus;

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::engine::{analyze_notebook, propagate, EngineError, NotebookFinding, PropagationConfig};
use crate::interp::{run, AbstractState, AnalysisError, StateSnapshot};
use crate::lang::{parse_program, ParseError};
use crate::notebook::{notebook_from_json, KnowledgeBase, NotebookError};

pub use bench::{bench, synthetic_notebook, BenchReport};
pub use corpus::{score_corpus, CorpusLabel, CorpusScore, EntryScore, ExpectedFinding, KindScore};

/// Version of the JSON report layout. Bumped on incompatible changes.
pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}: unsupported file type (expected .dfl or .ipynb)")]
    FileType(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Notebook(#[from] NotebookError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Timing {
    pub parse_ms: f64,
    pub translate_ms: f64,
    pub analyze_ms: f64,
}

impl Timing {
    pub fn total_ms(&self) -> f64 {
        self.parse_ms + self.translate_ms + self.analyze_ms
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub version: u32,
    pub target: String,
    /// Sorted by kind, train variable, test variable.
    pub findings: Vec<NotebookFinding>,
    pub warnings: Vec<String>,
    pub timing: Timing,
    /// States after each statement of a program, when requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub states: Option<Vec<StateSnapshot>>,
}

impl Report {
    /// 0 without findings, 1 with.
    pub fn exit_code(&self) -> i32 {
        i32::from(!self.findings.is_empty())
    }
}

#[derive(Clone, Debug)]
pub struct AnalyzeOptions {
    pub engine: PropagationConfig,
    pub kb: KnowledgeBase,
    pub start_cell: Option<String>,
    pub dump_state: bool,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            engine: PropagationConfig::default(),
            kb: KnowledgeBase::default(),
            start_cell: None,
            dump_state: false,
        }
    }
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1000.0
}

/// Analyzes a `.dfl` program or an `.ipynb` notebook.
pub fn analyze_path(path: &Path, opts: &AnalyzeOptions) -> Result<Report, ReportError> {
    let target = path.display().to_string();
    let bytes = std::fs::read(path).map_err(|source| ReportError::Io {
        path: target.clone(),
        source,
    })?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("dfl") => analyze_program_text(&String::from_utf8_lossy(&bytes), &target, opts),
        Some("ipynb") => analyze_notebook_bytes(&bytes, &target, opts),
        _ => Err(ReportError::FileType(target)),
    }
}

pub fn analyze_program_text(text: &str, target: &str, opts: &AnalyzeOptions) -> Result<Report, ReportError> {
    let t0 = Instant::now();
    let program = parse_program(text)?;
    let parse_ms = ms(t0);
    let t1 = Instant::now();
    let a = run(&program.statements, AbstractState::default(), None)?;
    let analyze_ms = ms(t1);
    let mut findings: Vec<NotebookFinding> = a
        .findings
        .into_iter()
        .map(|finding| NotebookFinding {
            finding,
            trace: Vec::new(),
        })
        .collect();
    findings.sort_by(|a, b| a.finding.cmp(&b.finding));
    Ok(Report {
        version: REPORT_VERSION,
        target: target.to_string(),
        findings,
        warnings: Vec::new(),
        timing: Timing {
            parse_ms,
            translate_ms: 0.0,
            analyze_ms,
        },
        states: opts.dump_state.then_some(a.snapshots),
    })
}

pub fn analyze_notebook_bytes(bytes: &[u8], target: &str, opts: &AnalyzeOptions) -> Result<Report, ReportError> {
    let t0 = Instant::now();
    let doc: serde_json::Value = serde_json::from_slice(bytes).map_err(NotebookError::from)?;
    let parse_ms = ms(t0);
    let t1 = Instant::now();
    let nb = notebook_from_json(&doc, &opts.kb)?;
    let translate_ms = ms(t1);
    let t2 = Instant::now();
    let mut warnings = nb.warnings();
    let mut findings = match &opts.start_cell {
        Some(start) => {
            let p = propagate(&nb, start, &opts.engine)?;
            warnings.extend(p.warnings);
            p.findings
        }
        None => {
            let a = analyze_notebook(&nb, &opts.engine);
            warnings.extend(a.warnings);
            a.findings
        }
    };
    let analyze_ms = ms(t2);
    findings.sort_by(|a, b| a.finding.cmp(&b.finding));
    Ok(Report {
        version: REPORT_VERSION,
        target: target.to_string(),
        findings,
        warnings,
        timing: Timing {
            parse_ms,
            translate_ms,
            analyze_ms,
        },
        states: None,
    })
}

/// Human-readable rendering. Lists the same findings as the JSON form.
pub fn render_text(r: &Report) -> String {
    let mut out = String::new();
    let n = r.findings.len();
    let _ = writeln!(
        out,
        "{}: {} finding{}",
        r.target,
        n,
        if n == 1 { "" } else { "s" }
    );
    for f in &r.findings {
        let g = &f.finding;
        let _ = writeln!(
            out,
            "  [{}] train {} ({}) / test {} ({})",
            g.kind, g.train_var, g.train_site, g.test_var, g.test_site
        );
        let _ = writeln!(out, "    {}", g.witness);
        if g.pairs.len() > 1 {
            let pairs: Vec<String> = g.pairs.iter().map(|(a, b)| format!("{a}/{b}")).collect();
            let _ = writeln!(out, "    pairs: {}", pairs.join(", "));
        }
        if !f.trace.is_empty() {
            let _ = writeln!(out, "    executing {} may leak", f.trace.join(" -> "));
        }
    }
    if !r.warnings.is_empty() {
        let _ = writeln!(out, "warnings:");
        for w in &r.warnings {
            let _ = writeln!(out, "  {w}");
        }
    }
    if let Some(states) = &r.states {
        for s in states {
            let _ = writeln!(out, "after line {}: {}", s.line, s.statement);
            for (v, a) in &s.state.env {
                let _ = writeln!(out, "  {v} = {a}");
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const MOTIVATING: &str = "data = read(\"data.csv\")\nX_norm = normalize(data)\nX_train = X_norm.select[cut+1:][]\nX_test = X_norm.select[0:cut+1][]\ntrain(X_train)\ntest(X_test)\n";

    #[test]
    fn program_report() {
        let r = analyze_program_text(MOTIVATING, "m.dfl", &AnalyzeOptions::default()).unwrap();
        assert_eq!(r.exit_code(), 1);
        assert_eq!(r.findings.len(), 1);
        let text = render_text(&r);
        assert!(text.starts_with("m.dfl: 1 finding\n"), "{text}");
        assert!(text.contains("[Taint] train X_train (line 5) / test X_test (line 6)"), "{text}");
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["version"], REPORT_VERSION);
        assert_eq!(v["findings"][0]["kind"], "Taint");
        assert!(v.get("states").is_none());
    }

    #[test]
    fn dump_state_keeps_every_statement() {
        let opts = AnalyzeOptions {
            dump_state: true,
            ..AnalyzeOptions::default()
        };
        let r = analyze_program_text(MOTIVATING, "m.dfl", &opts).unwrap();
        assert_eq!(r.states.as_ref().unwrap().len(), 6);
        assert!(render_text(&r).contains("after line 2: X_norm = normalize(data)"));
    }

    #[test]
    fn text_and_json_list_the_same_findings() {
        let src = "d = read(\"d\")\nn = normalize(d)\nx = d.select[0:3][]\ny = d.select[2:][]\ntrain(n, x)\ntest(y)\n";
        let r = analyze_program_text(src, "t.dfl", &AnalyzeOptions::default()).unwrap();
        let text = render_text(&r);
        let v = serde_json::to_value(&r).unwrap();
        let listed = v["findings"].as_array().unwrap();
        assert_eq!(listed.len(), r.findings.len());
        for f in listed {
            let line = format!("train {} (", f["train_var"].as_str().unwrap());
            assert!(text.contains(&line), "{text}");
        }
    }

    #[test]
    fn errors_are_reported() {
        let opts = AnalyzeOptions::default();
        assert!(matches!(
            analyze_path(Path::new("/nonexistent/x.dfl"), &opts),
            Err(ReportError::Io { .. })
        ));
        assert!(matches!(
            analyze_program_text("y = normalize(x)\n", "t", &opts),
            Err(ReportError::Parse(_))
        ));
    }
}
