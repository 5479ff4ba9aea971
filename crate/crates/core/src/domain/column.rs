use std::collections::BTreeSet;
use std::fmt;

use serde::{Serialize, Serializer};

use super::Lattice;

/// Column labels a frame may have. `Set(∅)` is bottom, `Top` means unknown.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ColumnAbs {
    Set(BTreeSet<String>),
    Top,
}

impl ColumnAbs {
    pub fn of<I, S>(cols: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        ColumnAbs::Set(cols.into_iter().map(Into::into).collect())
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, ColumnAbs::Set(s) if s.is_empty())
    }
}

impl Lattice for ColumnAbs {
    fn leq(&self, other: &Self) -> bool {
        match (self, other) {
            (_, ColumnAbs::Top) => true,
            (ColumnAbs::Top, _) => false,
            (ColumnAbs::Set(a), ColumnAbs::Set(b)) => a.is_subset(b),
        }
    }

    fn join(&self, other: &Self) -> Self {
        match (self, other) {
            (ColumnAbs::Set(a), ColumnAbs::Set(b)) => ColumnAbs::Set(a.union(b).cloned().collect()),
            _ => ColumnAbs::Top,
        }
    }

    fn meet(&self, other: &Self) -> Self {
        match (self, other) {
            (c, ColumnAbs::Top) | (ColumnAbs::Top, c) => c.clone(),
            (ColumnAbs::Set(a), ColumnAbs::Set(b)) => {
                ColumnAbs::Set(a.intersection(b).cloned().collect())
            }
        }
    }

    fn bottom() -> Self {
        ColumnAbs::Set(BTreeSet::new())
    }
}

impl fmt::Display for ColumnAbs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnAbs::Top => f.write_str("T"),
            ColumnAbs::Set(s) => {
                let v: Vec<&str> = s.iter().map(String::as_str).collect();
                write!(f, "{{{}}}", v.join(","))
            }
        }
    }
}

/// `null` for top, otherwise the sorted label list.
impl Serialize for ColumnAbs {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ColumnAbs::Top => s.serialize_none(),
            ColumnAbs::Set(set) => set.serialize(s),
        }
    }
}
