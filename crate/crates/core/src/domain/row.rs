use std::collections::BTreeMap;
use std::fmt;

use serde::ser::SerializeTuple;
use serde::{Serialize, Serializer};

use super::{DomainError, Lattice};
use crate::lang::RowExpr;

/// An inclusive interval `[lo, hi]` of row indexes, or bottom.
///
/// Bounds may be symbolic. When two bounds cannot be ordered statically the
/// operations below fall back to a choice that keeps the result sound (an
/// over-approximation of the concrete rows).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RowInterval {
    Bot,
    Range { lo: RowExpr, hi: RowExpr },
}

fn add(a: &RowExpr, b: &RowExpr, lower: bool) -> RowExpr {
    use RowExpr::*;
    match (a, b) {
        (Inf, _) | (_, Inf) => Inf,
        (Const(x), Const(y)) => Const(x.saturating_add(*y)),
        (Const(c), s @ Sym { .. }) | (s @ Sym { .. }, Const(c)) => s.shift(*c as i64),
        (Sym { .. }, Sym { .. }) if lower => Const(a.lower_bound().saturating_add(b.lower_bound())),
        (Sym { .. }, Sym { .. }) => Inf,
    }
}

/// `u - l` if it can be written as a row expression.
fn sub(u: &RowExpr, l: &RowExpr) -> Option<RowExpr> {
    use RowExpr::*;
    match (u, l) {
        (Inf, _) => Some(Inf),
        (Const(x), Const(y)) => Some(Const(x.saturating_sub(*y))),
        (Sym { .. }, Const(c)) => Some(u.shift(-(*c as i64))),
        (Sym { name: a, offset: x }, Sym { name: b, offset: y }) if a == b => {
            Some(Const((x - y).max(0) as u64))
        }
        _ => None,
    }
}

/// `Some(true)` if `a <= b` is known, `Some(false)` if `b <= a` is known.
fn order(a: &RowExpr, b: &RowExpr) -> Option<bool> {
    match (a.le(b), b.le(a)) {
        (Some(true), _) | (_, Some(false)) => Some(true),
        (Some(false), _) | (_, Some(true)) => Some(false),
        (None, None) => None,
    }
}

fn pick_min(a: &RowExpr, b: &RowExpr) -> RowExpr {
    match order(a, b) {
        Some(true) => a.clone(),
        Some(false) => b.clone(),
        None => a.min(b).clone(),
    }
}

fn pick_max(a: &RowExpr, b: &RowExpr) -> RowExpr {
    match order(a, b) {
        Some(true) => b.clone(),
        Some(false) => a.clone(),
        None => a.min(b).clone(),
    }
}

/// The smaller bound, or a constant below both when undecidable.
fn lower_min(a: &RowExpr, b: &RowExpr) -> RowExpr {
    match order(a, b) {
        Some(true) => a.clone(),
        Some(false) => b.clone(),
        None => RowExpr::Const(a.lower_bound().min(b.lower_bound())),
    }
}

/// The larger bound, or infinity when undecidable.
fn upper_max(a: &RowExpr, b: &RowExpr) -> RowExpr {
    match order(a, b) {
        Some(true) => b.clone(),
        Some(false) => a.clone(),
        None => RowExpr::Inf,
    }
}

pub(crate) fn eval(e: &RowExpr, val: &BTreeMap<String, u64>) -> Option<u64> {
    match e {
        RowExpr::Const(c) => Some(*c),
        RowExpr::Sym { name, offset } => {
            let v = *val.get(name)? as i64 + offset;
            (v >= 0).then_some(v as u64)
        }
        RowExpr::Inf => None,
    }
}

impl RowInterval {
    /// `[lo, hi]`, or bottom if `lo > hi` is statically known.
    pub fn new(lo: RowExpr, hi: RowExpr) -> Self {
        if lo == RowExpr::Inf || lo.le(&hi) == Some(false) {
            RowInterval::Bot
        } else {
            RowInterval::Range { lo, hi }
        }
    }

    pub fn constant(lo: u64, hi: u64) -> Self {
        Self::new(RowExpr::Const(lo), RowExpr::Const(hi))
    }

    pub fn all() -> Self {
        RowInterval::Range {
            lo: RowExpr::Const(0),
            hi: RowExpr::Inf,
        }
    }

    pub fn single(e: RowExpr) -> Self {
        Self::new(e.clone(), e)
    }

    /// Half-open `[lo, hi)` as an inclusive interval.
    pub fn half_open(lo: RowExpr, hi: RowExpr) -> Self {
        match hi.le(&lo) {
            Some(true) => RowInterval::Bot,
            _ if hi == RowExpr::Inf => Self::new(lo, hi),
            _ => Self::new(lo, hi.shift(-1)),
        }
    }

    /// The smallest interval holding every listed index.
    pub fn hull_of<'a>(exprs: impl IntoIterator<Item = &'a RowExpr>) -> Self {
        let mut it = exprs.into_iter();
        let Some(first) = it.next() else {
            return RowInterval::Bot;
        };
        let (lo, hi) = it.fold((first.clone(), first.clone()), |(lo, hi), e| {
            (lower_min(&lo, e), upper_max(&hi, e))
        });
        Self::new(lo, hi)
    }

    pub fn is_bot(&self) -> bool {
        matches!(self, RowInterval::Bot)
    }

    pub fn bounds(&self) -> Option<(&RowExpr, &RowExpr)> {
        match self {
            RowInterval::Bot => None,
            RowInterval::Range { lo, hi } => Some((lo, hi)),
        }
    }

    pub fn is_symbolic(&self) -> bool {
        self.bounds()
            .is_some_and(|(l, h)| l.is_symbolic() || h.is_symbolic())
    }

    /// Positions relative to the first row: `[0, hi - lo]`.
    pub fn idx(&self) -> RowInterval {
        match self {
            RowInterval::Bot => RowInterval::Bot,
            RowInterval::Range { lo, hi } => {
                let width = sub(hi, lo).unwrap_or_else(|| hi.clone());
                RowInterval::new(RowExpr::Const(0), width)
            }
        }
    }

    /// Maps positions `ij` (relative to this interval) back to row indexes.
    pub fn unindex(&self, ij: &RowInterval) -> RowInterval {
        let (l, u) = match self.bounds() {
            Some(b) => b,
            None => return RowInterval::Bot,
        };
        let (i, j) = match ij.meet(&self.idx()) {
            RowInterval::Bot => return RowInterval::Bot,
            RowInterval::Range { lo, hi } => (lo, hi),
        };
        let lo = add(l, &i, true);
        let hi = pick_min(&add(l, &j, false), u);
        RowInterval::new(lo, hi)
    }

    /// Loop widening: unstable bounds jump to `0` and `inf`.
    pub fn widen(&self, next: &RowInterval) -> RowInterval {
        match (self, next) {
            (RowInterval::Bot, x) | (x, RowInterval::Bot) => x.clone(),
            (RowInterval::Range { lo: a, hi: b }, RowInterval::Range { lo: c, hi: d }) => {
                let lo = if a.le(c) == Some(true) {
                    a.clone()
                } else {
                    RowExpr::Const(0)
                };
                let hi = if d.le(b) == Some(true) {
                    b.clone()
                } else {
                    RowExpr::Inf
                };
                RowInterval::new(lo, hi)
            }
        }
    }

    /// Concrete rows under a valuation of the symbols. Fails on `inf`.
    pub fn instantiate(&self, val: &BTreeMap<String, u64>) -> Result<Vec<u64>, DomainError> {
        match self {
            RowInterval::Bot => Ok(Vec::new()),
            RowInterval::Range { lo, hi } => match (eval(lo, val), eval(hi, val)) {
                (Some(l), Some(h)) => Ok((l..=h).collect()),
                _ => Err(DomainError::NotEnumerable(self.to_string())),
            },
        }
    }

    /// Concrete rows of a constant interval.
    pub fn enumerate(&self) -> Result<Vec<u64>, DomainError> {
        self.instantiate(&BTreeMap::new())
    }
}

impl Lattice for RowInterval {
    fn leq(&self, other: &Self) -> bool {
        match (self, other) {
            (RowInterval::Bot, _) => true,
            (_, RowInterval::Bot) => false,
            (RowInterval::Range { lo: a, hi: b }, RowInterval::Range { lo: c, hi: d }) => {
                c.le(a) == Some(true) && b.le(d) == Some(true)
            }
        }
    }

    fn join(&self, other: &Self) -> Self {
        match (self, other) {
            (RowInterval::Bot, x) | (x, RowInterval::Bot) => x.clone(),
            (RowInterval::Range { lo: a, hi: b }, RowInterval::Range { lo: c, hi: d }) => {
                RowInterval::new(lower_min(a, c), upper_max(b, d))
            }
        }
    }

    fn meet(&self, other: &Self) -> Self {
        match (self, other) {
            (RowInterval::Bot, _) | (_, RowInterval::Bot) => RowInterval::Bot,
            (RowInterval::Range { lo: a, hi: b }, RowInterval::Range { lo: c, hi: d }) => {
                RowInterval::new(pick_max(a, c), pick_min(b, d))
            }
        }
    }

    fn bottom() -> Self {
        RowInterval::Bot
    }
}

impl fmt::Display for RowInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowInterval::Bot => f.write_str("bot"),
            RowInterval::Range { lo, hi } => write!(f, "[{lo}, {hi}]"),
        }
    }
}

/// `null` for bottom, otherwise `["lo", "hi"]` with bounds as text.
impl Serialize for RowInterval {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            RowInterval::Bot => s.serialize_none(),
            RowInterval::Range { lo, hi } => {
                let mut t = s.serialize_tuple(2)?;
                t.serialize_element(&lo.to_string())?;
                t.serialize_element(&hi.to_string())?;
                t.end()
            }
        }
    }
}
