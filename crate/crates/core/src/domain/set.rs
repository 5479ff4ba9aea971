use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use super::{AbsDataFrame, ColumnAbs, Lattice, RowInterval};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReduceMode {
    Join,
    Meet,
}

/// A canonical set of abstract data frames: no two members overlap.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct AbsDataFrameSet {
    frames: BTreeSet<AbsDataFrame>,
}

/// Merges overlapping frames until none are left.
///
/// Each merge removes one element, so this stops after at most `n` rounds.
pub fn reduce(frames: impl IntoIterator<Item = AbsDataFrame>, mode: ReduceMode) -> AbsDataFrameSet {
    let mut v: Vec<AbsDataFrame> = frames.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
    'outer: loop {
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                if v[i].overlaps(&v[j]) {
                    let b = v.remove(j);
                    let a = v.remove(i);
                    // overlap implies same file, so neither call can fail
                    let merged = match mode {
                        ReduceMode::Join => a.join(&b).ok(),
                        ReduceMode::Meet => a.meet(&b).ok().flatten(),
                    };
                    v.extend(merged);
                    continue 'outer;
                }
            }
        }
        break;
    }
    AbsDataFrameSet {
        frames: v.into_iter().collect(),
    }
}

fn hull<'a>(frames: impl IntoIterator<Item = &'a AbsDataFrame>) -> Option<AbsDataFrame> {
    frames
        .into_iter()
        .cloned()
        .reduce(|a, b| a.join(&b).expect("hull over one file"))
}

impl AbsDataFrameSet {
    pub fn new(frames: impl IntoIterator<Item = AbsDataFrame>) -> Self {
        reduce(frames, ReduceMode::Join)
    }

    pub fn singleton(frame: AbsDataFrame) -> Self {
        AbsDataFrameSet {
            frames: BTreeSet::from([frame]),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &AbsDataFrame> {
        self.frames.iter()
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn files(&self) -> BTreeSet<&str> {
        self.frames.iter().map(|f| f.file()).collect()
    }

    pub fn is_canonical(&self) -> bool {
        let v: Vec<_> = self.frames.iter().collect();
        (0..v.len()).all(|i| (i + 1..v.len()).all(|j| !v[i].overlaps(v[j])))
    }

    /// Element-wise restriction, dropping frames that become empty.
    pub fn constrain(&self, cols: &ColumnAbs, ij: &RowInterval) -> Self {
        Self::new(self.frames.iter().filter_map(|f| f.constrain(cols, ij)))
    }

    /// Applies `f` to every frame and re-canonicalises.
    pub fn map_frames(&self, f: impl Fn(&AbsDataFrame) -> Option<AbsDataFrame>) -> Self {
        Self::new(self.frames.iter().filter_map(f))
    }

    /// Widening for loop heads. Files whose frames are still growing are
    /// collapsed to a single frame whose rows are widened.
    pub fn widen(&self, next: &Self) -> Self {
        let mut by_file: BTreeMap<&str, (Vec<&AbsDataFrame>, Vec<&AbsDataFrame>)> = BTreeMap::new();
        for f in &self.frames {
            by_file.entry(f.file()).or_default().0.push(f);
        }
        for f in &next.frames {
            by_file.entry(f.file()).or_default().1.push(f);
        }
        let mut out = Vec::new();
        for (old, new) in by_file.values() {
            let stable = new.iter().all(|n| old.iter().any(|o| n.leq(o)));
            if stable {
                out.extend(old.iter().map(|f| (*f).clone()));
                continue;
            }
            let nh = hull(new.iter().copied()).expect("unstable file has new frames");
            let widened = match hull(old.iter().copied()) {
                None => nh,
                Some(oh) => AbsDataFrame::new(
                    oh.file(),
                    oh.cols().join(nh.cols()),
                    oh.rows().widen(&oh.rows().join(nh.rows())),
                )
                .expect("join of non-empty frames"),
            };
            out.push(widened);
        }
        Self::new(out)
    }
}

impl Lattice for AbsDataFrameSet {
    fn leq(&self, other: &Self) -> bool {
        self.frames
            .iter()
            .all(|a| other.frames.iter().any(|b| a.leq(b)))
    }

    fn join(&self, other: &Self) -> Self {
        reduce(self.frames.iter().chain(&other.frames).cloned(), ReduceMode::Join)
    }

    fn meet(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        for a in &self.frames {
            for b in &other.frames {
                if a.overlaps(b) {
                    out.extend(a.meet(b).ok().flatten());
                }
            }
        }
        reduce(out, ReduceMode::Meet)
    }

    fn bottom() -> Self {
        Self::default()
    }
}

impl<'a> IntoIterator for &'a AbsDataFrameSet {
    type Item = &'a AbsDataFrame;
    type IntoIter = std::collections::btree_set::Iter<'a, AbsDataFrame>;

    fn into_iter(self) -> Self::IntoIter {
        self.frames.iter()
    }
}

impl fmt::Display for AbsDataFrameSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.frames.iter().map(|x| x.to_string()).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}
