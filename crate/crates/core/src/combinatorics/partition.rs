use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{GroundSet, Label};
use crate::error::{Error, Result};

/// A set partition of a finite label set.
///
/// Blocks are sorted internally and listed by least element, so two
/// partitions are equal exactly when they have the same blocks.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<Label>>", into = "Vec<Vec<Label>>")]
pub struct SetPartition {
    blocks: Vec<Vec<Label>>,
}

impl SetPartition {
    /// Canonicalizes a list of disjoint non-empty blocks.
    pub fn new(blocks: Vec<Vec<Label>>) -> Result<Self> {
        let mut blocks = blocks;
        for b in &mut blocks {
            if b.is_empty() {
                return Err(Error::EmptyBlock);
            }
            b.sort_unstable();
            if let Some(w) = b.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::OverlappingBlocks(w[0]));
            }
        }
        if blocks.is_empty() {
            return Err(Error::EmptyGround);
        }
        blocks.sort_unstable_by_key(|b| b[0]);
        let mut all: Vec<Label> = blocks.iter().flatten().copied().collect();
        all.sort_unstable();
        if let Some(w) = all.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::OverlappingBlocks(w[0]));
        }
        Ok(SetPartition { blocks })
    }

    /// Blocks already sorted internally and by least element, disjoint.
    pub(crate) fn from_canonical(blocks: Vec<Vec<Label>>) -> Self {
        debug_assert_eq!(
            SetPartition::new(blocks.clone()).map(|p| p.blocks).as_ref(),
            Ok(&blocks)
        );
        SetPartition { blocks }
    }

    /// Groups `ground` (sorted) by the color of each element.
    pub fn from_colors(ground: &[Label], colors: &[usize]) -> Self {
        assert_eq!(ground.len(), colors.len());
        let mut slot: BTreeMap<usize, usize> = BTreeMap::new();
        let mut blocks: Vec<Vec<Label>> = Vec::new();
        // ground is increasing, so blocks open in least-element order
        for (&x, &c) in ground.iter().zip(colors) {
            let i = *slot.entry(c).or_insert_with(|| {
                blocks.push(Vec::new());
                blocks.len() - 1
            });
            blocks[i].push(x);
        }
        SetPartition { blocks }
    }

    /// The one-block partition `1_b`.
    pub fn one_block(ground: &GroundSet) -> Self {
        SetPartition {
            blocks: vec![ground.as_slice().to_vec()],
        }
    }

    pub fn singletons(ground: &GroundSet) -> Self {
        SetPartition {
            blocks: ground.iter().map(|&x| vec![x]).collect(),
        }
    }

    /// The partition `{S, {x}}` that splits one leaf off.
    pub fn split_one_leaf(rest: &GroundSet, x: Label) -> Result<Self> {
        SetPartition::new(vec![rest.as_slice().to_vec(), vec![x]])
    }

    pub fn blocks(&self) -> &[Vec<Label>] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }

    pub fn len(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_one_block(&self) -> bool {
        self.blocks.len() == 1
    }

    pub fn ground(&self) -> GroundSet {
        let mut all: Vec<Label> = self.blocks.iter().flatten().copied().collect();
        all.sort_unstable();
        GroundSet::from_sorted(all)
    }

    /// Index of the block holding `x`.
    pub fn block_index_of(&self, x: Label) -> Option<usize> {
        self.blocks.iter().position(|b| b.binary_search(&x).is_ok())
    }

    /// Sizes of the non-empty intersections `b ∩ block` in block order.
    pub fn restricted_sizes(&self, b: &[Label]) -> Vec<usize> {
        let mut counts = vec![0usize; self.blocks.len()];
        for &x in b {
            if let Some(i) = self.block_index_of(x) {
                counts[i] += 1;
            }
        }
        counts.retain(|&c| c > 0);
        counts
    }

    /// `{b ∩ S} \ {∅}`.
    pub fn restrict(&self, s: &GroundSet) -> Result<Self> {
        let ground = self.ground();
        if let Some(&x) = s.iter().find(|&&x| !ground.contains(x)) {
            return Err(Error::NotInGround(x));
        }
        Ok(self.restrict_unchecked(s.as_slice()))
    }

    pub(crate) fn restrict_unchecked(&self, s: &[Label]) -> Self {
        let blocks = self
            .blocks
            .iter()
            .map(|b| {
                b.iter()
                    .copied()
                    .filter(|x| s.binary_search(x).is_ok())
                    .collect::<Vec<_>>()
            })
            .filter(|b: &Vec<Label>| !b.is_empty())
            .collect();
        SetPartition { blocks }
    }

    /// Relabels through an injection defined on the whole ground set.
    pub fn apply_injection(&self, map: &BTreeMap<Label, Label>) -> Result<Self> {
        let blocks = self
            .blocks
            .iter()
            .map(|b| {
                b.iter()
                    .map(|&x| map.get(&x).copied().ok_or(Error::MapNotTotal(x)))
                    .collect()
            })
            .collect::<Result<Vec<Vec<Label>>>>()?;
        SetPartition::new(blocks).map_err(|e| match e {
            Error::OverlappingBlocks(y) => Error::MapNotInjective(y),
            e => e,
        })
    }

    /// Relabels `i ↦ perm[i - 1]` on a partition of `[n]`.
    pub fn permute(&self, perm: &[Label]) -> Self {
        let blocks = self
            .blocks
            .iter()
            .map(|b| b.iter().map(|&x| perm[x as usize - 1]).collect())
            .collect();
        SetPartition::new(blocks).expect("permutation relabeling")
    }

    /// Coarsest common refinement.
    pub fn meet(&self, other: &SetPartition) -> Result<Self> {
        if self.ground() != other.ground() {
            return Err(Error::GroundMismatch);
        }
        let mut blocks = Vec::new();
        for b in &self.blocks {
            for c in &other.blocks {
                let inter: Vec<Label> = b.iter().copied().filter(|x| c.binary_search(x).is_ok()).collect();
                if !inter.is_empty() {
                    blocks.push(inter);
                }
            }
        }
        SetPartition::new(blocks)
    }

    /// True when every block of `self` lies inside a block of `coarser`.
    pub fn refines(&self, coarser: &SetPartition) -> bool {
        self.blocks.iter().all(|b| {
            coarser
                .block_index_of(b[0])
                .is_some_and(|i| b.iter().all(|x| coarser.blocks[i].binary_search(x).is_ok()))
        })
    }
}

impl TryFrom<Vec<Vec<Label>>> for SetPartition {
    type Error = Error;
    fn try_from(blocks: Vec<Vec<Label>>) -> Result<Self> {
        SetPartition::new(blocks)
    }
}

impl From<SetPartition> for Vec<Vec<Label>> {
    fn from(p: SetPartition) -> Self {
        p.blocks
    }
}

impl fmt::Display for SetPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_blocks(f, &self.blocks)
    }
}

pub(crate) fn write_blocks(f: &mut fmt::Formatter<'_>, blocks: &[Vec<Label>]) -> fmt::Result {
    write!(f, "[")?;
    for (i, b) in blocks.iter().enumerate() {
        if i > 0 {
            write!(f, ",")?;
        }
        write!(f, "[")?;
        for (j, x) in b.iter().enumerate() {
            if j > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, "]")?;
    }
    write!(f, "]")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(blocks: &[&[Label]]) -> SetPartition {
        SetPartition::new(blocks.iter().map(|b| b.to_vec()).collect()).unwrap()
    }

    #[test]
    fn canonical_order() {
        assert_eq!(p(&[&[3], &[2, 1]]).blocks(), &[vec![1, 2], vec![3]]);
        assert_eq!(p(&[&[1]]).blocks(), &[vec![1]]);
    }

    #[test]
    fn rejects_overlap_and_empty() {
        assert_eq!(
            SetPartition::new(vec![vec![1, 2], vec![2, 3]]),
            Err(Error::OverlappingBlocks(2))
        );
        assert_eq!(SetPartition::new(vec![vec![1], vec![]]), Err(Error::EmptyBlock));
        assert_eq!(SetPartition::new(vec![]), Err(Error::EmptyGround));
    }

    #[test]
    fn restriction() {
        let b = p(&[&[1, 3], &[2]]);
        assert_eq!(
            b.restrict(&GroundSet::new(vec![1, 2]).unwrap()).unwrap(),
            p(&[&[1], &[2]])
        );
        assert_eq!(b.restrict(&b.ground()).unwrap(), b);
        assert_eq!(
            b.restrict(&GroundSet::new(vec![1, 4]).unwrap()),
            Err(Error::NotInGround(4))
        );
    }

    #[test]
    fn injections() {
        let b = p(&[&[1, 2], &[3]]);
        let swap: BTreeMap<Label, Label> = [(1, 3), (2, 2), (3, 1)].into_iter().collect();
        assert_eq!(b.apply_injection(&swap).unwrap(), p(&[&[1], &[2, 3]]));
        let id: BTreeMap<Label, Label> = [(1, 1), (2, 2), (3, 3)].into_iter().collect();
        assert_eq!(b.apply_injection(&id).unwrap(), b);
        let partial: BTreeMap<Label, Label> = [(1, 1), (2, 2)].into_iter().collect();
        assert_eq!(b.apply_injection(&partial), Err(Error::MapNotTotal(3)));
        let clash: BTreeMap<Label, Label> = [(1, 1), (2, 1), (3, 3)].into_iter().collect();
        assert_eq!(b.apply_injection(&clash), Err(Error::MapNotInjective(1)));
    }

    #[test]
    fn meet_examples() {
        let b = p(&[&[1, 2], &[3]]);
        let c = p(&[&[1], &[2, 3]]);
        assert_eq!(b.meet(&c).unwrap(), p(&[&[1], &[2], &[3]]));
        assert_eq!(b.meet(&b).unwrap(), b);
        let one = SetPartition::one_block(&b.ground());
        assert_eq!(b.meet(&one).unwrap(), b);
        assert_eq!(b.meet(&p(&[&[1, 2]])), Err(Error::GroundMismatch));
    }

    #[test]
    fn colors_group_in_least_element_order() {
        let part = SetPartition::from_colors(&[1, 2, 3, 4], &[5, 0, 5, 2]);
        assert_eq!(part, p(&[&[1, 3], &[2], &[4]]));
    }

    #[test]
    fn json_shape() {
        let b = p(&[&[3], &[1, 2]]);
        assert_eq!(serde_json::to_string(&b).unwrap(), "[[1,2],[3]]");
        let back: SetPartition = serde_json::from_str("[[3],[2,1]]").unwrap();
        assert_eq!(back, b);
        assert!(serde_json::from_str::<SetPartition>("[[1,2],[2]]").is_err());
    }
}
