use std::fmt;

use serde::Serialize;

use super::{ColumnAbs, DomainError, Lattice, RowInterval};

/// The part of an input file a value may come from.
///
/// Never without rows. A frame without columns is only built by
/// [`AbsDataFrame::keeping_rows`]: its rows still feed the value even
/// though none of its columns survive.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct AbsDataFrame {
    file: String,
    cols: ColumnAbs,
    rows: RowInterval,
}

impl AbsDataFrame {
    pub fn new(file: impl Into<String>, cols: ColumnAbs, rows: RowInterval) -> Option<Self> {
        if cols.is_empty() || rows.is_bot() {
            return None;
        }
        Some(AbsDataFrame {
            file: file.into(),
            cols,
            rows,
        })
    }

    /// Like [`AbsDataFrame::new`] but accepts an empty column set.
    pub fn keeping_rows(file: impl Into<String>, cols: ColumnAbs, rows: RowInterval) -> Option<Self> {
        if rows.is_bot() {
            return None;
        }
        Some(AbsDataFrame {
            file: file.into(),
            cols,
            rows,
        })
    }

    /// The whole file: every column, every row.
    pub fn whole(file: impl Into<String>) -> Self {
        AbsDataFrame {
            file: file.into(),
            cols: ColumnAbs::Top,
            rows: RowInterval::all(),
        }
    }

    pub fn file(&self) -> &str {
        &self.file
    }

    pub fn cols(&self) -> &ColumnAbs {
        &self.cols
    }

    pub fn rows(&self) -> &RowInterval {
        &self.rows
    }

    fn same_file(&self, other: &Self) -> Result<(), DomainError> {
        if self.file == other.file {
            Ok(())
        } else {
            Err(DomainError::FileMismatch(self.file.clone(), other.file.clone()))
        }
    }

    /// Whether the two frames may share a cell.
    pub fn overlaps(&self, other: &Self) -> bool {
        self.file == other.file
            && !self.cols.meet(&other.cols).is_empty()
            && !self.rows.meet(&other.rows).is_bot()
    }

    /// Whether the two frames may share a row, whatever the columns.
    pub fn rows_overlap(&self, other: &Self) -> bool {
        self.file == other.file && !self.rows.meet(&other.rows).is_bot()
    }

    pub fn leq(&self, other: &Self) -> bool {
        self.file == other.file && self.cols.leq(&other.cols) && self.rows.leq(&other.rows)
    }

    pub fn join(&self, other: &Self) -> Result<Self, DomainError> {
        self.same_file(other)?;
        Ok(AbsDataFrame {
            file: self.file.clone(),
            cols: self.cols.join(&other.cols),
            rows: self.rows.join(&other.rows),
        })
    }

    pub fn meet(&self, other: &Self) -> Result<Option<Self>, DomainError> {
        self.same_file(other)?;
        Ok(AbsDataFrame::new(
            self.file.clone(),
            self.cols.meet(&other.cols),
            self.rows.meet(&other.rows),
        ))
    }

    /// Restricts to columns `cols` and to the rows at positions `ij`.
    pub fn constrain(&self, cols: &ColumnAbs, ij: &RowInterval) -> Option<Self> {
        AbsDataFrame::new(
            self.file.clone(),
            self.cols.meet(cols),
            self.rows.unindex(ij),
        )
    }
}

impl fmt::Display for AbsDataFrame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.file, self.cols, self.rows)
    }
}
