//! Exhaustive enumeration and deletion-map fibers.
//!
//! Partitions come out in restricted-growth-string order: element `i` of the
//! ground set gets block `a_i ≤ 1 + max(a_1, …, a_{i-1})`, and strings are
//! listed lexicographically. Trees are listed by root partition (in that
//! order), then lexicographically by the subtrees of the root blocks.

use super::{FragmentationTree, GroundSet, Label, SetPartition};

/// All partitions of `ground` with at most `max_blocks` blocks.
pub fn partitions_of(ground: &[Label], max_blocks: Option<usize>) -> Vec<SetPartition> {
    let n = ground.len();
    let cap = max_blocks.unwrap_or(n).min(n);
    let mut out = Vec::new();
    if n == 0 || cap == 0 {
        return out;
    }
    let mut rgs = vec![0usize; n];
    fn rec(i: usize, used: usize, cap: usize, rgs: &mut Vec<usize>, ground: &[Label], out: &mut Vec<SetPartition>) {
        if i == rgs.len() {
            out.push(SetPartition::from_colors(ground, rgs));
            return;
        }
        let top = (used + 1).min(cap);
        for a in 0..top {
            rgs[i] = a;
            rec(i + 1, used.max(a + 1), cap, rgs, ground, out);
        }
    }
    rec(1, 1, cap, &mut rgs, ground, &mut out);
    out
}

/// `𝒫_[n]^(k)`; `k = None` means unbounded.
pub fn enumerate_partitions(n: usize, k: Option<usize>) -> Vec<SetPartition> {
    partitions_of(GroundSet::range(n).as_slice(), k)
}

/// Bell numbers by the Bell triangle.
pub fn bell_number(n: usize) -> u128 {
    let mut row = vec![1u128];
    for _ in 0..n {
        let mut next = vec![*row.last().unwrap()];
        for &x in &row {
            let last = *next.last().unwrap();
            next.push(last + x);
        }
        row = next;
    }
    row[0]
}

/// All fragmentation trees of `ground` with fragmentation degree at most `k`.
pub fn trees_of(ground: &[Label], k: Option<usize>) -> Vec<FragmentationTree> {
    subtree_vertex_sets(ground, k)
        .into_iter()
        .map(|vs| FragmentationTree::new(vs).expect("enumerated trees are valid"))
        .collect()
}

fn subtree_vertex_sets(ground: &[Label], k: Option<usize>) -> Vec<Vec<Vec<Label>>> {
    if ground.len() == 1 {
        return vec![vec![ground.to_vec()]];
    }
    let mut out = Vec::new();
    for root in partitions_of(ground, k) {
        if root.num_blocks() < 2 {
            continue;
        }
        let per_block: Vec<Vec<Vec<Vec<Label>>>> = root.blocks().iter().map(|b| subtree_vertex_sets(b, k)).collect();
        // odometer over subtree choices, first block most significant
        let mut pick = vec![0usize; per_block.len()];
        loop {
            let mut vs = vec![ground.to_vec()];
            for (choices, &j) in per_block.iter().zip(&pick) {
                vs.extend(choices[j].iter().cloned());
            }
            out.push(vs);
            let mut exhausted = true;
            for pos in (0..pick.len()).rev() {
                pick[pos] += 1;
                if pick[pos] < per_block[pos].len() {
                    exhausted = false;
                    break;
                }
                pick[pos] = 0;
            }
            if exhausted {
                break;
            }
        }
    }
    out
}

/// `𝒯_[n]^(k)`.
pub fn enumerate_trees(n: usize, k: Option<usize>) -> Vec<FragmentationTree> {
    trees_of(GroundSet::range(n).as_slice(), k)
}

/// Partitions of `ground ∪ {x}` (at most `k` blocks) that restrict to `part`.
pub fn partition_fiber(part: &SetPartition, x: Label, k: Option<usize>) -> Vec<SetPartition> {
    let mut out = Vec::new();
    for i in 0..part.num_blocks() {
        let mut blocks = part.blocks().to_vec();
        blocks[i].push(x);
        out.push(SetPartition::new(blocks).expect("fresh label"));
    }
    if k.is_none_or(|k| part.num_blocks() < k) {
        let mut blocks = part.blocks().to_vec();
        blocks.push(vec![x]);
        out.push(SetPartition::new(blocks).expect("fresh label"));
    }
    out
}

/// Trees of `ground ∪ {x}` (degree at most `k`) that restrict to `tree`.
///
/// The new leaf either joins an internal vertex as an extra child or
/// subdivides the edge above a vertex.
pub fn tree_fiber(tree: &FragmentationTree, x: Label, k: Option<usize>) -> Vec<FragmentationTree> {
    let mut out = Vec::new();
    let nv = tree.vertices().len();
    let ancestors = |mut i: usize| {
        let mut a = Vec::new();
        while let Some(p) = tree.parent_of(i) {
            a.push(p);
            i = p;
        }
        a
    };
    let with_x = |v: &[Label]| {
        let mut w = v.to_vec();
        w.push(x);
        w
    };
    for i in 0..nv {
        let anc = ancestors(i);
        let internal = tree.vertex(i).len() >= 2;
        if internal && k.is_none_or(|k| tree.children_of(i).len() < k) {
            let vs = (0..nv)
                .map(|j| {
                    if j == i || anc.contains(&j) {
                        with_x(tree.vertex(j))
                    } else {
                        tree.vertex(j).to_vec()
                    }
                })
                .chain(std::iter::once(vec![x]))
                .collect();
            out.push(FragmentationTree::new(vs).expect("fresh label"));
        }
        if k.is_none_or(|k| k >= 2) {
            let vs = (0..nv)
                .map(|j| {
                    if anc.contains(&j) {
                        with_x(tree.vertex(j))
                    } else {
                        tree.vertex(j).to_vec()
                    }
                })
                .chain([with_x(tree.vertex(i)), vec![x]])
                .collect();
            out.push(FragmentationTree::new(vs).expect("fresh label"));
        }
    }
    out
}
