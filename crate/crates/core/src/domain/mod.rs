//! Abstract domains for data-frame provenance.
//!
//! The stack, from the bottom up:
//!
//! * [`ColumnAbs`]: a finite set of column labels, or top;
//! * [`RowInterval`]: intervals of row indexes over the naturals, whose bounds
//!   may mention symbols (see [`RowExpr`](crate::lang::RowExpr));
//! * [`AbsDataFrame`]: `file` restricted to some columns and rows;
//! * [`AbsDataFrameSet`]: canonical (pairwise non-overlapping) frame sets;
//! * [`SourceAbs`]: a frame set paired with a taint flag.

mod column;
mod frame;
mod row;
mod set;
mod source;

use thiserror::Error;

pub use column::ColumnAbs;
pub use frame::AbsDataFrame;
pub use row::RowInterval;
pub use set::{reduce, AbsDataFrameSet, ReduceMode};
pub use source::{SourceAbs, SourceCell, Taint};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("frames from different files `{0}` and `{1}` cannot be combined")]
    FileMismatch(String, String),
    #[error("row interval {0} cannot be enumerated")]
    NotEnumerable(String),
}

/// Order and binary bounds of an abstract domain.
pub trait Lattice: Sized {
    fn leq(&self, other: &Self) -> bool;
    fn join(&self, other: &Self) -> Self;
    fn meet(&self, other: &Self) -> Self;
    fn bottom() -> Self;
}
