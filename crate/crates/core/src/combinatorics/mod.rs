//! Set partitions and fragmentation trees of finite label sets.

mod enumerate;
mod partition;
mod tree;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use enumerate::{
    bell_number, enumerate_partitions, enumerate_trees, partition_fiber, partitions_of, tree_fiber, trees_of,
};
pub use partition::SetPartition;
pub use tree::{agreement_depth, tree_distance, FragmentationTree};

pub type Label = u32;

/// Non-empty, strictly increasing list of labels.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<Label>", into = "Vec<Label>")]
pub struct GroundSet(Vec<Label>);

impl GroundSet {
    /// Sorts and checks for duplicates.
    pub fn new(mut labels: Vec<Label>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyGround);
        }
        labels.sort_unstable();
        if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::OverlappingBlocks(w[0]));
        }
        Ok(GroundSet(labels))
    }

    /// `[n] = {1, …, n}`.
    pub fn range(n: usize) -> Self {
        assert!(n >= 1, "[n] needs n >= 1");
        GroundSet((1..=n as Label).collect())
    }

    pub(crate) fn from_sorted(labels: Vec<Label>) -> Self {
        debug_assert!(!labels.is_empty() && labels.windows(2).all(|w| w[0] < w[1]));
        GroundSet(labels)
    }

    pub fn as_slice(&self) -> &[Label] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Label> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, x: Label) -> bool {
        self.0.binary_search(&x).is_ok()
    }

    pub fn is_subset_of(&self, other: &GroundSet) -> bool {
        self.0.iter().all(|&x| other.contains(x))
    }

    /// True when the labels are exactly `1..=n`.
    pub fn is_range(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &x)| x as usize == i + 1)
    }

    pub fn max(&self) -> Label {
        *self.0.last().expect("non-empty")
    }
}

impl TryFrom<Vec<Label>> for GroundSet {
    type Error = Error;
    fn try_from(v: Vec<Label>) -> Result<Self> {
        GroundSet::new(v)
    }
}

impl From<GroundSet> for Vec<Label> {
    fn from(g: GroundSet) -> Self {
        g.0
    }
}

/// Address of a vertex by child positions from the root; `u⁻` drops the
/// last entry. Positions are 1-based.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GenealogicalIndex(Vec<u32>);

impl GenealogicalIndex {
    pub fn root() -> Self {
        GenealogicalIndex(Vec::new())
    }

    pub fn new(path: Vec<u32>) -> Result<Self> {
        if path.contains(&0) {
            return Err(Error::InvalidParameter("genealogical positions start at 1".into()));
        }
        Ok(GenealogicalIndex(path))
    }

    pub fn child(&self, i: u32) -> Self {
        debug_assert!(i >= 1);
        let mut p = self.0.clone();
        p.push(i);
        GenealogicalIndex(p)
    }

    pub fn parent(&self) -> Option<Self> {
        if self.0.is_empty() {
            None
        } else {
            Some(GenealogicalIndex(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    pub fn generation(&self) -> usize {
        self.0.len()
    }

    pub fn path(&self) -> &[u32] {
        &self.0
    }

    pub fn path_u64(&self) -> Vec<u64> {
        self.0.iter().map(|&x| u64::from(x)).collect()
    }
}

impl fmt::Display for GenealogicalIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "∅");
        }
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ".")?;
            }
            write!(f, "{x}")?;
        }
        Ok(())
    }
}

/// Every permutation of `[n]` as a relabeling vector (`i ↦ perm[i-1]`),
/// in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<Label>> {
    fn rec(cur: &mut Vec<Label>, used: &mut [bool], out: &mut Vec<Vec<Label>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i as Label + 1);
                rec(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}
