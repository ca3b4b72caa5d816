//! Fragmentation trees with edge lengths.
//!
//! The length of the edge above vertex `b` is stored at `b`. A transition
//! first draws the shape with the `CP(ν)` AB kernel and then gives every
//! non-singleton vertex `b` an independent `Exp(θ q_b)` length, where
//! `q_b = 1 − p_b(π, 1_b)`. Which partition `π` enters `q_b` is selected by
//! [`RateForm`]. Singleton leaves get length 0.

use std::collections::BTreeMap;

use rand::RngCore;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::ab_kernel::AbKernel;
use crate::combinatorics::{FragmentationTree, GroundSet, Label, SetPartition};
use crate::cp_kernel::{CpKernel, PartitionKernel};
use crate::error::{Error, Result};
use crate::paintbox::MixtureMeasure;

/// Which tree supplies the partition in the edge-length rate `θ q_b(π, 1_b)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateForm {
    /// `π = Π_{T|b}`, the reduced subtree of the current tree. Lengths then
    /// stay consistent under restriction.
    #[default]
    PreviousTree,
    /// `π = Π_{T'|b}`, the split just drawn for `b`.
    NextTree,
}

/// A fragmentation tree with a non-negative length for each vertex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WeightedRepr", into = "WeightedRepr")]
pub struct WeightedTree {
    tree: FragmentationTree,
    lengths: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightedRepr {
    vertices: FragmentationTree,
    lengths: Vec<f64>,
}

impl TryFrom<WeightedRepr> for WeightedTree {
    type Error = Error;
    fn try_from(r: WeightedRepr) -> Result<Self> {
        WeightedTree::new(r.vertices, r.lengths)
    }
}

impl From<WeightedTree> for WeightedRepr {
    fn from(w: WeightedTree) -> Self {
        WeightedRepr {
            vertices: w.tree,
            lengths: w.lengths,
        }
    }
}

impl WeightedTree {
    /// `lengths[i]` belongs to `tree.vertex(i)`.
    pub fn new(tree: FragmentationTree, lengths: Vec<f64>) -> Result<Self> {
        if lengths.len() != tree.vertices().len() {
            return Err(Error::InvalidParameter(format!(
                "{} lengths for {} vertices",
                lengths.len(),
                tree.vertices().len()
            )));
        }
        if let Some(x) = lengths.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(Error::InvalidParameter(format!("edge length {x}")));
        }
        Ok(WeightedTree { tree, lengths })
    }

    /// Every length zero.
    pub fn unweighted(tree: FragmentationTree) -> Self {
        let lengths = vec![0.0; tree.vertices().len()];
        WeightedTree { tree, lengths }
    }

    /// Lengths looked up by vertex; missing vertices get 0.
    pub fn from_map(tree: FragmentationTree, lengths: &BTreeMap<Vec<Label>, f64>) -> Result<Self> {
        let ls = tree
            .vertices()
            .iter()
            .map(|v| lengths.get(v).copied().unwrap_or(0.0))
            .collect();
        WeightedTree::new(tree, ls)
    }

    pub fn tree(&self) -> &FragmentationTree {
        &self.tree
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    /// `t_b`, with `t_b = 0` when `b` is not a vertex.
    pub fn length_of(&self, b: &[Label]) -> f64 {
        self.tree.index_of(b).map_or(0.0, |i| self.lengths[i])
    }

    pub fn root_length(&self) -> f64 {
        self.lengths[0]
    }

    /// Sum of the lengths on the path from the root down to leaf `x`.
    pub fn path_length(&self, x: Label) -> Option<f64> {
        let mut i = self.tree.index_of(&[x])?;
        let mut total = self.lengths[i];
        while let Some(p) = self.tree.parent_of(i) {
            total += self.lengths[p];
            i = p;
        }
        Some(total)
    }
}

fn q_b(kernel: &CpKernel, b: &[Label], pi: &SetPartition) -> f64 {
    let one = SetPartition::one_block(&GroundSet::new(b.to_vec()).expect("vertex labels are distinct"));
    1.0 - kernel.prob(pi, &one)
}

fn rate_partition(form: RateForm, t: &FragmentationTree, t_next: &FragmentationTree, i: usize) -> SetPartition {
    match form {
        RateForm::PreviousTree => t.restricted_root_partition(t_next.vertex(i)),
        RateForm::NextTree => t_next.children_partition(i),
    }
}

/// Draws the shape from the AB kernel, then each non-singleton length.
pub fn weighted_sample(
    current: &WeightedTree,
    nu: &MixtureMeasure,
    k: usize,
    theta: f64,
    form: RateForm,
    rng: &mut dyn RngCore,
) -> Result<WeightedTree> {
    if !(theta.is_finite() && theta > 0.0) {
        return Err(Error::InvalidParameter(format!("theta must be positive, got {theta}")));
    }
    let kernel = CpKernel::new(nu.clone(), k)?;
    let ab = AbKernel::new(kernel.clone());
    let t = current.tree();
    let shape = ab.sample(t, rng)?;
    let mut lengths = vec![0.0; shape.vertices().len()];
    for i in shape.internal_vertices() {
        let b = shape.vertex(i);
        let q = q_b(&kernel, b, &rate_partition(form, t, &shape, i));
        if q <= 0.0 {
            return Err(Error::DegenerateKernel(b.to_vec()));
        }
        lengths[i] = Exp::new(theta * q).expect("positive rate").sample(rng);
    }
    WeightedTree::new(shape, lengths)
}

/// Log density of `next` under [`weighted_sample`] from `current`.
///
/// Each non-singleton vertex `b` of the new tree contributes
/// `log θ + log p_b(Π_{T|b}, Π_{T'|b}) − θ t'_b q_b(Π_{T|b}, 1_b)` in the
/// previous-tree form. In the next-tree form the shape factor is still
/// `p_b / q_b(Π_{T|b})` and the length factor uses `q_b(Π_{T'|b})`.
/// A shape the kernel cannot reach gives `−∞`.
pub fn weighted_log_density(
    current: &WeightedTree,
    next: &WeightedTree,
    nu: &MixtureMeasure,
    k: usize,
    theta: f64,
    form: RateForm,
) -> Result<f64> {
    if !(theta.is_finite() && theta > 0.0) {
        return Err(Error::InvalidParameter(format!("theta must be positive, got {theta}")));
    }
    let t = current.tree();
    let t_next = next.tree();
    if t.ground() != t_next.ground() {
        return Err(Error::GroundMismatch);
    }
    let kernel = CpKernel::new(nu.clone(), k)?;
    let mut total = 0.0;
    for i in t_next.internal_vertices() {
        let b = t_next.vertex(i);
        let from = t.restricted_root_partition(b);
        let p = kernel.prob(&from, &t_next.children_partition(i));
        if p <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        let q_old = q_b(&kernel, b, &from);
        if q_old <= 0.0 {
            return Err(Error::DegenerateKernel(b.to_vec()));
        }
        let q_rate = match form {
            RateForm::PreviousTree => q_old,
            RateForm::NextTree => q_b(&kernel, b, &t_next.children_partition(i)),
        };
        total += theta.ln() + p.ln() - q_old.ln() + q_rate.ln() - theta * next.lengths[i] * q_rate;
    }
    Ok(total)
}

/// Drops the largest label. Where a vertex `A ∪ {x}` collapses onto a vertex
/// `A` the two lengths add; other lengths carry over.
pub fn weighted_restrict(tree: &WeightedTree) -> Result<WeightedTree> {
    let t = tree.tree();
    if t.num_leaves() < 2 {
        return Err(Error::InvalidParameter("cannot drop the only label".into()));
    }
    let x = *t.ground().last().expect("non-empty");
    let mut merged: BTreeMap<Vec<Label>, f64> = BTreeMap::new();
    for (v, &len) in t.vertices().iter().zip(tree.lengths()) {
        let w: Vec<Label> = v.iter().copied().filter(|&y| y != x).collect();
        if !w.is_empty() {
            *merged.entry(w).or_insert(0.0) += len;
        }
    }
    let shape = FragmentationTree::new(merged.keys().cloned().collect())?;
    WeightedTree::from_map(shape, &merged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paintbox::RankedMassPartition;
    use crate::streams::seeded;

    fn half() -> MixtureMeasure {
        MixtureMeasure::point(RankedMassPartition::uniform(2))
    }

    fn t(vs: &[&[Label]]) -> FragmentationTree {
        FragmentationTree::new(vs.iter().map(|v| v.to_vec()).collect()).unwrap()
    }

    fn lengths(tree: FragmentationTree, ls: &[(&[Label], f64)]) -> WeightedTree {
        let map = ls.iter().map(|(v, l)| (v.to_vec(), *l)).collect();
        WeightedTree::from_map(tree, &map).unwrap()
    }

    #[test]
    fn pair_density() {
        let pair = WeightedTree::unweighted(FragmentationTree::star(&GroundSet::range(2)));
        for form in [RateForm::PreviousTree, RateForm::NextTree] {
            let d = weighted_log_density(&pair, &pair, &half(), 2, 1.0, form).unwrap();
            assert!((d - 0.5f64.ln()).abs() < 1e-15);
        }
    }

    #[test]
    fn density_decreases_with_length() {
        let cur = WeightedTree::unweighted(FragmentationTree::caterpillar(&GroundSet::range(3)));
        let shape = t(&[&[1, 2, 3], &[1, 3], &[1], &[2], &[3]]);
        let a = lengths(shape.clone(), &[(&[1, 2, 3], 0.2), (&[1, 3], 0.4)]);
        let b = lengths(shape, &[(&[1, 2, 3], 0.2), (&[1, 3], 0.5)]);
        let da = weighted_log_density(&cur, &a, &half(), 2, 1.5, RateForm::PreviousTree).unwrap();
        let db = weighted_log_density(&cur, &b, &half(), 2, 1.5, RateForm::PreviousTree).unwrap();
        assert!(db < da);
    }

    #[test]
    fn unreachable_shape_has_no_density() {
        let cur = WeightedTree::unweighted(FragmentationTree::caterpillar(&GroundSet::range(3)));
        let star = WeightedTree::unweighted(FragmentationTree::star(&GroundSet::range(3)));
        let d = weighted_log_density(&cur, &star, &half(), 2, 1.0, RateForm::PreviousTree).unwrap();
        assert_eq!(d, f64::NEG_INFINITY);
    }

    #[test]
    fn restriction_adds_collapsed_lengths() {
        // root split {[2], {3}}: the root edge absorbs the [2] edge
        let tree = t(&[&[1, 2, 3], &[1, 2], &[1], &[2], &[3]]);
        let w = lengths(tree, &[(&[1, 2, 3], 0.3), (&[1, 2], 0.5)]);
        let r = weighted_restrict(&w).unwrap();
        assert_eq!(r.tree(), &t(&[&[1, 2], &[1], &[2]]));
        assert!((r.root_length() - 0.8).abs() < 1e-15);

        // leaf 3 attached below the root: root edge unchanged
        let tree = t(&[&[1, 2, 3], &[1, 3], &[1], &[2], &[3]]);
        let w = lengths(tree, &[(&[1, 2, 3], 0.3), (&[1, 3], 0.5), (&[1], 0.1)]);
        let r = weighted_restrict(&w).unwrap();
        assert_eq!(r.root_length(), 0.3);
        assert!((r.length_of(&[1]) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn restriction_preserves_path_lengths() {
        let tree = FragmentationTree::balanced(&GroundSet::range(6));
        let ls: Vec<f64> = (0..tree.vertices().len()).map(|i| 0.1 * (i as f64 + 1.0)).collect();
        let w = WeightedTree::new(tree, ls).unwrap();
        let r = weighted_restrict(&w).unwrap();
        for x in 1..=5 {
            assert!((r.path_length(x).unwrap() - w.path_length(x).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn samples_are_valid() {
        let cur = WeightedTree::unweighted(FragmentationTree::caterpillar(&GroundSet::range(5)));
        let nu = MixtureMeasure::dirichlet(2, 1.0).unwrap();
        let mut rng = seeded(6);
        for form in [RateForm::PreviousTree, RateForm::NextTree] {
            for _ in 0..50 {
                let next = weighted_sample(&cur, &nu, 2, 2.0, form, &mut rng).unwrap();
                assert!(next.lengths().iter().all(|&x| x >= 0.0));
                assert!(weighted_log_density(&cur, &next, &nu, 2, 2.0, form)
                    .unwrap()
                    .is_finite());
            }
        }
        assert!(weighted_sample(&cur, &nu, 2, 0.0, RateForm::PreviousTree, &mut rng).is_err());
    }

    #[test]
    fn json_shape() {
        let w = lengths(FragmentationTree::star(&GroundSet::range(2)), &[(&[1, 2], 0.5)]);
        let text = serde_json::to_string(&w).unwrap();
        assert_eq!(text, r#"{"vertices":[[1,2],[1],[2]],"lengths":[0.5,0.0,0.0]}"#);
        assert_eq!(serde_json::from_str::<WeightedTree>(&text).unwrap(), w);
        assert!(serde_json::from_str::<WeightedTree>(r#"{"vertices":[[1,2],[1],[2]],"lengths":[0.5]}"#).is_err());
    }
}
