use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use super::{AbsDataFrame, AbsDataFrameSet, DomainError, Lattice};

/// Whether a value may depend on rows it was not selected from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Taint {
    #[default]
    Untainted,
    MaybeTainted,
}

impl Taint {
    pub fn is_tainted(self) -> bool {
        self == Taint::MaybeTainted
    }
}

/// One concrete input cell as seen by the leakage property: a file and a
/// row index. Columns play no part.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct SourceCell {
    pub file: String,
    pub row: u64,
}

impl SourceCell {
    pub fn new(file: impl Into<String>, row: u64) -> Self {
        SourceCell {
            file: file.into(),
            row,
        }
    }
}

impl fmt::Display for SourceCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.file, self.row)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct SourceAbs {
    pub sources: AbsDataFrameSet,
    pub taint: Taint,
}

impl SourceAbs {
    pub fn new(sources: AbsDataFrameSet, taint: Taint) -> Self {
        SourceAbs { sources, taint }
    }

    pub fn of_frame(frame: AbsDataFrame) -> Self {
        SourceAbs::new(AbsDataFrameSet::singleton(frame), Taint::Untainted)
    }

    pub fn tainted(mut self) -> Self {
        self.taint = Taint::MaybeTainted;
        self
    }

    /// The concrete cells this value may come from. Needs constant, finite
    /// row bounds.
    pub fn gamma(&self) -> Result<BTreeSet<SourceCell>, DomainError> {
        let mut out = BTreeSet::new();
        for f in &self.sources {
            for r in f.rows().enumerate()? {
                out.insert(SourceCell::new(f.file(), r));
            }
        }
        Ok(out)
    }
}

impl Lattice for SourceAbs {
    fn leq(&self, other: &Self) -> bool {
        self.sources.leq(&other.sources) && self.taint <= other.taint
    }

    fn join(&self, other: &Self) -> Self {
        SourceAbs::new(self.sources.join(&other.sources), self.taint.max(other.taint))
    }

    fn meet(&self, other: &Self) -> Self {
        SourceAbs::new(self.sources.meet(&other.sources), self.taint.min(other.taint))
    }

    fn bottom() -> Self {
        Self::default()
    }
}

impl fmt::Display for SourceAbs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let flag = match self.taint {
            Taint::Untainted => "untainted",
            Taint::MaybeTainted => "maybe-tainted",
        };
        write!(f, "<{}, {flag}>", self.sources)
    }
}
