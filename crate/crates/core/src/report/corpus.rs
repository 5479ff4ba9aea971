use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{analyze_path, AnalyzeOptions};
use crate::interp::FindingKind;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ExpectedFinding {
    pub kind: FindingKind,
    pub train_var: String,
    pub test_var: String,
}

/// The findings a notebook is known to contain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusLabel {
    pub notebook: String,
    #[serde(default)]
    pub expected: Vec<ExpectedFinding>,
}

impl CorpusLabel {
    pub fn load_all(path: &Path) -> Result<Vec<CorpusLabel>, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct KindScore {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl KindScore {
    fn add(&mut self, o: KindScore) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.fn_ += o.fn_;
    }

    /// Precision, taken as 1 when nothing was reported.
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    /// Recall, taken as 1 when nothing was expected.
    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        1.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EntryScore {
    pub notebook: String,
    pub score: KindScore,
    pub false_positives: Vec<ExpectedFinding>,
    pub false_negatives: Vec<ExpectedFinding>,
    /// Number of cells in the trace of each reported finding.
    pub path_lengths: Vec<usize>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct CorpusScore {
    pub entries: Vec<EntryScore>,
    pub total: KindScore,
    pub precision: f64,
    pub recall: f64,
    pub per_kind: BTreeMap<FindingKind, KindScore>,
    /// Error path length (in cells) to the number of findings with it.
    pub path_length_histogram: BTreeMap<usize, usize>,
    pub warnings: Vec<String>,
}

fn score_one(dir: &Path, label: &CorpusLabel, opts: &AnalyzeOptions) -> Result<EntryScore, String> {
    let path = dir.join(&label.notebook);
    if !path.exists() {
        return Err(format!("{}: labelled notebook not found, skipped", label.notebook));
    }
    let report = analyze_path(&path, opts).map_err(|e| format!("{}: {e}, skipped", label.notebook))?;
    let found: BTreeSet<ExpectedFinding> = report
        .findings
        .iter()
        .map(|f| ExpectedFinding {
            kind: f.finding.kind,
            train_var: f.finding.train_var.clone(),
            test_var: f.finding.test_var.clone(),
        })
        .collect();
    let expected: BTreeSet<ExpectedFinding> = label.expected.iter().cloned().collect();
    let tp = found.intersection(&expected).count();
    let false_positives: Vec<_> = found.difference(&expected).cloned().collect();
    let false_negatives: Vec<_> = expected.difference(&found).cloned().collect();
    Ok(EntryScore {
        notebook: label.notebook.clone(),
        score: KindScore {
            tp,
            fp: false_positives.len(),
            fn_: false_negatives.len(),
        },
        false_positives,
        false_negatives,
        path_lengths: report.findings.iter().map(|f| f.trace.len()).collect(),
    })
}

fn kind_score(e: &EntryScore, kind: FindingKind) -> KindScore {
    let fp = e.false_positives.iter().filter(|f| f.kind == kind).count();
    let fn_ = e.false_negatives.iter().filter(|f| f.kind == kind).count();
    KindScore { tp: 0, fp, fn_ }
}

/// Analyzes every labelled notebook under `dir` and compares the findings
/// with the labels.
pub fn score_corpus(dir: &Path, labels: &[CorpusLabel], opts: &AnalyzeOptions) -> CorpusScore {
    let mut out = CorpusScore::default();
    for l in labels {
        let unique: BTreeSet<_> = l.expected.iter().collect();
        if unique.len() != l.expected.len() {
            out.warnings.push(format!("{}: duplicate expected findings", l.notebook));
        }
    }
    let results: Vec<Result<EntryScore, String>> = labels.par_iter().map(|l| score_one(dir, l, opts)).collect();
    for (label, r) in labels.iter().zip(results) {
        match r {
            Err(w) => out.warnings.push(w),
            Ok(e) => {
                out.total.add(e.score);
                for kind in [FindingKind::Taint, FindingKind::Overlap] {
                    let mut k = kind_score(&e, kind);
                    let expected: BTreeSet<_> = label.expected.iter().filter(|f| f.kind == kind).collect();
                    k.tp = expected.len() - k.fn_;
                    out.per_kind.entry(kind).or_default().add(k);
                }
                for &n in &e.path_lengths {
                    *out.path_length_histogram.entry(n).or_default() += 1;
                }
                out.entries.push(e);
            }
        }
    }
    out.precision = out.total.precision();
    out.recall = out.total.recall();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_corpus_scores_zero_counts() {
        let s = score_corpus(Path::new("."), &[], &AnalyzeOptions::default());
        assert_eq!(s.total, KindScore::default());
        assert!(s.entries.is_empty());
        assert!(s.path_length_histogram.is_empty());
    }

    #[test]
    fn missing_notebook_is_skipped_with_a_warning() {
        let labels = [CorpusLabel {
            notebook: "absent.ipynb".into(),
            expected: vec![],
        }];
        let s = score_corpus(Path::new("/nonexistent"), &labels, &AnalyzeOptions::default());
        assert!(s.entries.is_empty());
        assert_eq!(s.warnings.len(), 1);
    }

    #[test]
    fn labels_parse() {
        let l: Vec<CorpusLabel> = serde_json::from_str(
            r#"[{"notebook": "a.ipynb", "expected": [{"kind": "Taint", "train_var": "x", "test_var": "y"}]},
                {"notebook": "b.ipynb"}]"#,
        )
        .unwrap();
        assert_eq!(l[0].expected[0].kind, FindingKind::Taint);
        assert!(l[1].expected.is_empty());
    }

    #[test]
    fn scoring_counts() {
        let dir = tempfile::tempdir().unwrap();
        let src = "d = read(\"d\")\nn = normalize(d)\na = n.select[0:2][]\nb = n.select[2:][]\ntrain(a)\ntest(b)\n";
        std::fs::write(dir.path().join("p.dfl"), src).unwrap();
        let right = CorpusLabel {
            notebook: "p.dfl".into(),
            expected: vec![ExpectedFinding {
                kind: FindingKind::Taint,
                train_var: "a".into(),
                test_var: "b".into(),
            }],
        };
        let s = score_corpus(dir.path(), std::slice::from_ref(&right), &AnalyzeOptions::default());
        assert_eq!((s.total.tp, s.total.fp, s.total.fn_), (1, 0, 0));
        assert_eq!(s.per_kind[&FindingKind::Taint].tp, 1);
        let wrong = CorpusLabel {
            expected: vec![ExpectedFinding {
                kind: FindingKind::Overlap,
                ..right.expected[0].clone()
            }],
            ..right
        };
        let s = score_corpus(dir.path(), &[wrong], &AnalyzeOptions::default());
        assert_eq!((s.total.tp, s.total.fp, s.total.fn_), (0, 1, 1));
        assert_eq!(s.precision, 0.0);
        assert_eq!(s.per_kind[&FindingKind::Overlap].fn_, 1);
        assert_eq!(s.per_kind[&FindingKind::Taint].fp, 1);
    }
}
