use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use super::partition::write_blocks;
use super::{GroundSet, Label, SetPartition};
use crate::error::{Error, Result};

/// A laminar family of label sets containing its root and every singleton.
///
/// Vertices are kept sorted by size (descending) then least element. In a
/// laminar family that pair identifies a vertex, which makes lookups a
/// binary search. Parent and child links are derived at construction.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<Label>>", into = "Vec<Vec<Label>>")]
pub struct FragmentationTree {
    vertices: Vec<Vec<Label>>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
}

fn vertex_key(v: &[Label]) -> (std::cmp::Reverse<usize>, Label) {
    (std::cmp::Reverse(v.len()), v[0])
}

impl FragmentationTree {
    pub fn new(vertices: Vec<Vec<Label>>) -> Result<Self> {
        let mut vertices = vertices;
        for v in &mut vertices {
            if v.is_empty() {
                return Err(Error::EmptyBlock);
            }
            v.sort_unstable();
            if let Some(w) = v.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::OverlappingBlocks(w[0]));
            }
        }
        vertices.sort_unstable_by(|a, b| vertex_key(a).cmp(&vertex_key(b)).then_with(|| a.cmp(b)));
        vertices.dedup();
        if vertices.is_empty() {
            return Err(Error::EmptyTree);
        }

        let n = vertices.len();
        let mut parent = vec![None; n];
        let mut children = vec![Vec::new(); n];
        // deepest vertex seen so far that contains each label
        let mut deepest: HashMap<Label, usize> = vertices[0].iter().map(|&x| (x, 0)).collect();
        for idx in 1..n {
            let v = &vertices[idx];
            let p = *deepest.get(&v[0]).ok_or_else(|| Error::NotInRoot(v.clone()))?;
            for x in v {
                match deepest.get(x) {
                    None => return Err(Error::NotInRoot(v.clone())),
                    Some(&q) if q != p => return Err(Error::NotLaminar(v.clone())),
                    _ => {}
                }
            }
            parent[idx] = Some(p);
            children[p].push(idx);
            for &x in v {
                deepest.insert(x, idx);
            }
        }
        for &x in &vertices[0] {
            if vertices[deepest[&x]].len() != 1 {
                return Err(Error::MissingSingleton(x));
            }
        }
        for c in &mut children {
            c.sort_unstable_by_key(|&i| vertices[i][0]);
        }
        Ok(FragmentationTree {
            vertices,
            parent,
            children,
        })
    }

    /// The only tree on a one-element ground set.
    pub fn leaf(x: Label) -> Self {
        FragmentationTree {
            vertices: vec![vec![x]],
            parent: vec![None],
            children: vec![Vec::new()],
        }
    }

    /// Root with every singleton as a child.
    pub fn star(ground: &GroundSet) -> Self {
        let mut vs = vec![ground.as_slice().to_vec()];
        if ground.len() > 1 {
            vs.extend(ground.iter().map(|&x| vec![x]));
        }
        FragmentationTree::new(vs).expect("star is a valid tree")
    }

    /// The comb `{[n], [n-1], …, [2], {1}, …, {n}}` on a sorted ground set.
    pub fn caterpillar(ground: &GroundSet) -> Self {
        let g = ground.as_slice();
        let mut vs: Vec<Vec<Label>> = (2..=g.len()).map(|m| g[..m].to_vec()).collect();
        vs.extend(g.iter().map(|&x| vec![x]));
        FragmentationTree::new(vs).expect("caterpillar is a valid tree")
    }

    /// Halves every vertex recursively: a binary tree of depth ⌈log₂ n⌉.
    pub fn balanced(ground: &GroundSet) -> Self {
        let mut vs = Vec::new();
        let mut stack = vec![ground.as_slice().to_vec()];
        while let Some(v) = stack.pop() {
            if v.len() > 1 {
                let mid = v.len() / 2;
                stack.push(v[..mid].to_vec());
                stack.push(v[mid..].to_vec());
            }
            vs.push(v);
        }
        FragmentationTree::new(vs).expect("balanced tree is valid")
    }

    /// Root split by `root` with each block finished off by `subtree`.
    pub fn graft(root: &SetPartition, subtree: impl Fn(&GroundSet) -> FragmentationTree) -> Result<Self> {
        let ground = root.ground();
        let mut vs = vec![ground.as_slice().to_vec()];
        for b in root.blocks() {
            let g = GroundSet::from_sorted(b.clone());
            let t = subtree(&g);
            if t.ground() != b.as_slice() {
                return Err(Error::GroundMismatch);
            }
            vs.extend(t.vertices);
        }
        FragmentationTree::new(vs)
    }

    pub fn ground(&self) -> &[Label] {
        &self.vertices[0]
    }

    pub fn ground_set(&self) -> GroundSet {
        GroundSet::from_sorted(self.vertices[0].clone())
    }

    pub fn num_leaves(&self) -> usize {
        self.vertices[0].len()
    }

    pub fn vertices(&self) -> &[Vec<Label>] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> &[Label] {
        &self.vertices[i]
    }

    pub fn parent_of(&self, i: usize) -> Option<usize> {
        self.parent[i]
    }

    pub fn children_of(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    pub fn index_of(&self, v: &[Label]) -> Option<usize> {
        if v.is_empty() {
            return None;
        }
        let key = vertex_key(v);
        let i = self.vertices.binary_search_by(|w| vertex_key(w).cmp(&key)).ok()?;
        (self.vertices[i] == v).then_some(i)
    }

    pub fn contains_vertex(&self, v: &[Label]) -> bool {
        self.index_of(v).is_some()
    }

    /// Indices of vertices with at least two labels.
    pub fn internal_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.vertices.len()).filter(|&i| self.vertices[i].len() >= 2)
    }

    /// `frag(v)` as a partition of `v`.
    pub fn children_partition(&self, i: usize) -> SetPartition {
        if self.children[i].is_empty() {
            return SetPartition::from_canonical(vec![self.vertices[i].clone()]);
        }
        SetPartition::from_canonical(self.children[i].iter().map(|&c| self.vertices[c].clone()).collect())
    }

    /// `Π_T`, the children of the root.
    pub fn root_partition(&self) -> Result<SetPartition> {
        if self.vertices[0].len() < 2 {
            return Err(Error::NoRootPartition);
        }
        Ok(self.children_partition(0))
    }

    /// Largest number of children of any vertex.
    pub fn degree(&self) -> usize {
        self.children.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Root partition of the reduced subtree `T|_b` for `b ⊆ ground`, `#b ≥ 2`.
    ///
    /// This is the split of `b` by the children of the smallest vertex that
    /// contains `b`.
    pub fn restricted_root_partition(&self, b: &[Label]) -> SetPartition {
        debug_assert!(b.len() >= 2 && b.windows(2).all(|w| w[0] < w[1]));
        let mut cur = 0;
        'descend: loop {
            for &c in &self.children[cur] {
                let cv = &self.vertices[c];
                if cv.binary_search(&b[0]).is_ok() {
                    if b.iter().all(|x| cv.binary_search(x).is_ok()) {
                        cur = c;
                        continue 'descend;
                    }
                    break 'descend;
                }
            }
            break;
        }
        let kids = &self.children[cur];
        let mut blocks: Vec<Vec<Label>> = vec![Vec::new(); kids.len()];
        for &x in b {
            let j = kids
                .iter()
                .position(|&c| self.vertices[c].binary_search(&x).is_ok())
                .expect("children cover the parent");
            blocks[j].push(x);
        }
        blocks.retain(|blk| !blk.is_empty());
        blocks.sort_unstable_by_key(|blk| blk[0]);
        SetPartition::from_canonical(blocks)
    }

    /// The reduced subtree `{t ∩ S} \ {∅}`.
    pub fn restrict(&self, s: &GroundSet) -> Result<Self> {
        if let Some(&x) = s.iter().find(|&&x| self.vertices[0].binary_search(&x).is_err()) {
            return Err(Error::NotInGround(x));
        }
        Ok(self.restrict_unchecked(s.as_slice()))
    }

    pub(crate) fn restrict_unchecked(&self, s: &[Label]) -> Self {
        let mut seen = HashSet::new();
        let mut vs = Vec::new();
        for v in &self.vertices {
            let w: Vec<Label> = v.iter().copied().filter(|x| s.binary_search(x).is_ok()).collect();
            if !w.is_empty() && seen.insert(w.clone()) {
                vs.push(w);
            }
        }
        FragmentationTree::new(vs).expect("restriction of a tree is a tree")
    }

    /// The subtree rooted at vertex `i`, which equals `T|_v`.
    pub fn subtree(&self, i: usize) -> Self {
        let mut vs = Vec::new();
        let mut stack = vec![i];
        while let Some(j) = stack.pop() {
            vs.push(self.vertices[j].clone());
            stack.extend(&self.children[j]);
        }
        FragmentationTree::new(vs).expect("subtree is a tree")
    }

    pub fn apply_injection(&self, map: &BTreeMap<Label, Label>) -> Result<Self> {
        let mut images = HashSet::new();
        for &x in &self.vertices[0] {
            let y = *map.get(&x).ok_or(Error::MapNotTotal(x))?;
            if !images.insert(y) {
                return Err(Error::MapNotInjective(y));
            }
        }
        let vs = self
            .vertices
            .iter()
            .map(|v| v.iter().map(|x| map[x]).collect())
            .collect();
        FragmentationTree::new(vs)
    }

    /// Relabels `i ↦ perm[i - 1]` on a tree of `[n]`.
    pub fn permute(&self, perm: &[Label]) -> Self {
        let vs = self
            .vertices
            .iter()
            .map(|v| v.iter().map(|&x| perm[x as usize - 1]).collect())
            .collect();
        FragmentationTree::new(vs).expect("permutation relabeling")
    }

    /// Depth-first walk from the root, children by least element.
    pub fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.vertices.len());
        let mut stack = vec![0];
        while let Some(i) = stack.pop() {
            out.push(i);
            stack.extend(self.children[i].iter().rev());
        }
        out
    }
}

impl PartialEq for FragmentationTree {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices
    }
}

impl Eq for FragmentationTree {}

impl Hash for FragmentationTree {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.vertices.hash(state);
    }
}

impl PartialOrd for FragmentationTree {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for FragmentationTree {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.vertices.cmp(&other.vertices)
    }
}

impl TryFrom<Vec<Vec<Label>>> for FragmentationTree {
    type Error = Error;
    fn try_from(v: Vec<Vec<Label>>) -> Result<Self> {
        FragmentationTree::new(v)
    }
}

impl From<FragmentationTree> for Vec<Vec<Label>> {
    fn from(t: FragmentationTree) -> Self {
        t.vertices
    }
}

impl fmt::Display for FragmentationTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_blocks(f, &self.vertices)
    }
}

/// Largest `m` with `T|[m] = T'|[m]` on the first `m` labels of the shared
/// ground set, or `None` when the trees are equal.
pub fn agreement_depth(a: &FragmentationTree, b: &FragmentationTree) -> Result<Option<usize>> {
    if a.ground() != b.ground() {
        return Err(Error::GroundMismatch);
    }
    if a == b {
        return Ok(None);
    }
    let g = a.ground();
    // restrictions agree on a prefix-closed set of m, so search for the last agreeing one
    let agree = |m: usize| a.restrict_unchecked(&g[..m]) == b.restrict_unchecked(&g[..m]);
    let (mut lo, mut hi) = (1, g.len() - 1);
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if agree(mid) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    Ok(Some(lo))
}

/// `1 / max{m : T|[m] = T'|[m]}`, and 0 for equal trees.
pub fn tree_distance(a: &FragmentationTree, b: &FragmentationTree) -> Result<f64> {
    Ok(match agreement_depth(a, b)? {
        None => 0.0,
        Some(m) => 1.0 / m as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(vs: &[&[Label]]) -> FragmentationTree {
        FragmentationTree::new(vs.iter().map(|v| v.to_vec()).collect()).unwrap()
    }

    #[test]
    fn validation() {
        assert!(matches!(
            FragmentationTree::new(vec![vec![1, 2, 3], vec![1, 2], vec![2, 3], vec![1], vec![2], vec![3]]),
            Err(Error::NotLaminar(_))
        ));
        assert_eq!(
            FragmentationTree::new(vec![vec![1, 2], vec![1]]),
            Err(Error::MissingSingleton(2))
        );
        assert!(matches!(
            FragmentationTree::new(vec![vec![1, 2], vec![1], vec![2], vec![3]]),
            Err(Error::NotInRoot(_))
        ));
        assert_eq!(FragmentationTree::new(vec![]), Err(Error::EmptyTree));
    }

    #[test]
    fn root_partitions() {
        let star = FragmentationTree::star(&GroundSet::range(3));
        assert_eq!(star.root_partition().unwrap().blocks(), &[vec![1], vec![2], vec![3]]);
        let cat = t(&[&[1, 2, 3], &[1, 2], &[1], &[2], &[3]]);
        assert_eq!(cat.root_partition().unwrap().blocks(), &[vec![1, 2], vec![3]]);
        let pair = t(&[&[1, 2], &[1], &[2]]);
        assert_eq!(pair.root_partition().unwrap().blocks(), &[vec![1], vec![2]]);
        assert_eq!(FragmentationTree::leaf(4).root_partition(), Err(Error::NoRootPartition));
    }

    #[test]
    fn restriction() {
        let cat = t(&[&[1, 2, 3], &[1, 2], &[1], &[2], &[3]]);
        let r = cat.restrict(&GroundSet::new(vec![1, 3]).unwrap()).unwrap();
        assert_eq!(r, t(&[&[1, 3], &[1], &[3]]));
        assert_eq!(cat.restrict(&GroundSet::range(3)).unwrap(), cat);
        assert_eq!(
            cat.restrict(&GroundSet::new(vec![4]).unwrap()),
            Err(Error::NotInGround(4))
        );
    }

    #[test]
    fn restricted_root_partition_matches_restriction() {
        let tree = t(&[
            &[1, 2, 3, 4, 5],
            &[1, 3],
            &[2, 4, 5],
            &[4, 5],
            &[1],
            &[2],
            &[3],
            &[4],
            &[5],
        ]);
        for b in [vec![2, 3], vec![3, 4], vec![1, 2, 3], vec![3, 5], vec![1, 2, 3, 4, 5]] {
            let via_restrict = tree
                .restrict(&GroundSet::new(b.clone()).unwrap())
                .unwrap()
                .root_partition()
                .unwrap();
            assert_eq!(tree.restricted_root_partition(&b), via_restrict, "b = {b:?}");
        }
        let tree = t(&[
            &[1, 2, 3, 4, 5],
            &[1, 2, 3],
            &[1, 2],
            &[4, 5],
            &[1],
            &[2],
            &[3],
            &[4],
            &[5],
        ]);
        for b in [
            vec![1, 2],
            vec![1, 3],
            vec![2, 3, 4],
            vec![4, 5],
            vec![1, 2, 3],
            vec![1, 2, 3, 4, 5],
        ] {
            let via_restrict = tree
                .restrict(&GroundSet::new(b.clone()).unwrap())
                .unwrap()
                .root_partition()
                .unwrap();
            assert_eq!(tree.restricted_root_partition(&b), via_restrict, "b = {b:?}");
        }
    }

    #[test]
    fn injection_relabels() {
        let pair = t(&[&[1, 2], &[1], &[2]]);
        let map: BTreeMap<Label, Label> = [(1, 5), (2, 7)].into_iter().collect();
        assert_eq!(pair.apply_injection(&map).unwrap(), t(&[&[5, 7], &[5], &[7]]));
        let bad: BTreeMap<Label, Label> = [(1, 5), (2, 5)].into_iter().collect();
        assert_eq!(pair.apply_injection(&bad), Err(Error::MapNotInjective(5)));
    }

    #[test]
    fn distance_examples() {
        let a = t(&[&[1, 2, 3], &[1, 2], &[1], &[2], &[3]]);
        let b = t(&[&[1, 2, 3], &[1, 3], &[1], &[2], &[3]]);
        assert_eq!(tree_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(tree_distance(&a, &b).unwrap(), 0.5);
        let c = t(&[&[1, 2], &[1], &[2]]);
        assert_eq!(tree_distance(&a, &c), Err(Error::GroundMismatch));
    }

    #[test]
    fn json_orders_by_size_then_least() {
        let cat = t(&[&[3], &[2], &[1, 2], &[1], &[1, 2, 3]]);
        assert_eq!(serde_json::to_string(&cat).unwrap(), "[[1,2,3],[1,2],[1],[2],[3]]");
    }

    #[test]
    fn balanced_and_caterpillar() {
        let g = GroundSet::range(7);
        assert_eq!(FragmentationTree::balanced(&g).degree(), 2);
        let c = FragmentationTree::caterpillar(&g);
        assert_eq!(c.degree(), 2);
        assert_eq!(c.vertices().len(), 2 * 7 - 1);
    }
}
