//! Conservative mass fragmentations of 1 and the associated mass chain.
//!
//! A state is a finite-depth tree of masses whose children sum to their
//! parent. One step of the chain rebuilds the tree top-down: the children of
//! the node at index `u` are the ranked column totals of a `k × k` matrix
//! whose rows are the root children of the previous state, each split by a
//! mass partition `s^u_i ~ ν` and shuffled by a permutation `σ^u_i`.

use rand::RngCore;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::ab_kernel::CtChainConfig;
use crate::combinatorics::{FragmentationTree, GenealogicalIndex, Label};
use crate::error::{Error, Result};
use crate::paintbox::{uniform_permutation, MixtureMeasure};
use crate::streams::stream_rng;

/// Masses below this are treated as zero.
pub const MASS_FLOOR: f64 = 1e-12;
pub const DEFAULT_DEPTH: usize = 4;
const CONSERVATION_TOL: f64 = 1e-9;

/// A vertex of a mass fragmentation. Children are ranked by mass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MassNode {
    pub mass: f64,
    #[serde(default)]
    pub children: Vec<MassNode>,
}

impl MassNode {
    pub fn leaf(mass: f64) -> Self {
        MassNode {
            mass,
            children: Vec::new(),
        }
    }

    pub fn child_masses(&self) -> Vec<f64> {
        self.children.iter().map(|c| c.mass).collect()
    }
}

/// A conservative mass fragmentation of 1, truncated at finite depth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MassNode", into = "MassNode")]
pub struct MassFragmentation {
    root: MassNode,
}

impl MassFragmentation {
    pub fn new(root: MassNode) -> Result<Self> {
        if (root.mass - 1.0).abs() > CONSERVATION_TOL {
            return Err(Error::InvalidMass(format!("root mass {} is not 1", root.mass)));
        }
        let mut stack = vec![&root];
        while let Some(node) = stack.pop() {
            if !(node.mass.is_finite() && node.mass >= 0.0) {
                return Err(Error::InvalidMass(format!("mass {}", node.mass)));
            }
            if !node.children.is_empty() {
                let masses = node.child_masses();
                if masses.windows(2).any(|w| w[0] < w[1]) {
                    return Err(Error::InvalidMass(format!("children {masses:?} are not ranked")));
                }
                let total: f64 = masses.iter().sum();
                if (total - node.mass).abs() > CONSERVATION_TOL {
                    return Err(Error::InvalidMass(format!(
                        "children {masses:?} sum to {total}, parent has {}",
                        node.mass
                    )));
                }
            }
            stack.extend(&node.children);
        }
        Ok(MassFragmentation { root })
    }

    /// Root 1 with the given ranked children.
    pub fn from_root_children(children: Vec<f64>) -> Result<Self> {
        MassFragmentation::new(MassNode {
            mass: 1.0,
            children: children.into_iter().map(MassNode::leaf).collect(),
        })
    }

    /// The unsplit state: a lone root of mass 1.
    pub fn trivial() -> Self {
        MassFragmentation {
            root: MassNode::leaf(1.0),
        }
    }

    pub fn root(&self) -> &MassNode {
        &self.root
    }

    pub fn root_children(&self) -> Vec<f64> {
        self.root.child_masses()
    }

    /// Node at a genealogical index (children counted from 1 by rank).
    pub fn get(&self, u: &GenealogicalIndex) -> Option<&MassNode> {
        u.path()
            .iter()
            .try_fold(&self.root, |node, &j| node.children.get(j as usize - 1))
    }

    /// Every node with its index, parents before children.
    pub fn nodes(&self) -> Vec<(GenealogicalIndex, &MassNode)> {
        let mut out = Vec::new();
        let mut stack = vec![(GenealogicalIndex::root(), &self.root)];
        while let Some((u, node)) = stack.pop() {
            for (j, c) in node.children.iter().enumerate().rev() {
                stack.push((u.child(j as u32 + 1), c));
            }
            out.push((u, node));
        }
        out
    }

    /// Largest `|Σ children − parent|` over nodes with children.
    pub fn conservation_error(&self) -> f64 {
        self.nodes()
            .iter()
            .filter(|(_, n)| !n.children.is_empty())
            .map(|(_, n)| (n.child_masses().iter().sum::<f64>() - n.mass).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_children(&self) -> usize {
        self.nodes().iter().map(|(_, n)| n.children.len()).max().unwrap_or(0)
    }

    pub fn depth(&self) -> usize {
        self.nodes().iter().map(|(u, _)| u.generation()).max().unwrap_or(0)
    }
}

impl TryFrom<MassNode> for MassFragmentation {
    type Error = Error;
    fn try_from(root: MassNode) -> Result<Self> {
        MassFragmentation::new(root)
    }
}

impl From<MassFragmentation> for MassNode {
    fn from(m: MassFragmentation) -> Self {
        m.root
    }
}

/// `(s^u, σ^u)` for one index: `k` mass vectors of length `k` and `k`
/// 0-based permutations of `0..k`.
#[derive(Clone, Debug, PartialEq)]
pub struct MassDriver {
    masses: Vec<Vec<f64>>,
    perms: Vec<Vec<usize>>,
}

impl MassDriver {
    pub fn new(masses: Vec<Vec<f64>>, perms: Vec<Vec<usize>>) -> Result<Self> {
        let k = perms.len();
        if k == 0 || masses.len() != k {
            return Err(Error::InvalidDriver(format!(
                "{} mass rows for {k} permutations",
                masses.len()
            )));
        }
        for s in &masses {
            let total: f64 = s.iter().sum();
            if s.len() != k || s.iter().any(|&x| x < 0.0) || (total - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidDriver(format!("{s:?} is not a point of the {k}-simplex")));
            }
        }
        for p in &perms {
            let mut sorted = p.clone();
            sorted.sort_unstable();
            if sorted != (0..k).collect::<Vec<_>>() {
                return Err(Error::InvalidDriver(format!("{p:?} is not a permutation of 0..{k}")));
            }
        }
        Ok(MassDriver { masses, perms })
    }

    pub fn k(&self) -> usize {
        self.perms.len()
    }

    pub fn masses(&self) -> &[Vec<f64>] {
        &self.masses
    }

    pub fn perms(&self) -> &[Vec<usize>] {
        &self.perms
    }
}

/// Supplies the mass driver used at each genealogical index.
pub trait MassDriverSource {
    fn mass_driver(&mut self, u: &GenealogicalIndex) -> MassDriver;
}

/// Independent drivers from `ν`, one stream per index derived from `seed`.
#[derive(Clone, Debug)]
pub struct IndexedMassDrivers<'a> {
    nu: &'a MixtureMeasure,
    k: usize,
    seed: u64,
}

impl<'a> IndexedMassDrivers<'a> {
    pub fn new(nu: &'a MixtureMeasure, k: usize, seed: u64) -> Self {
        IndexedMassDrivers { nu, k, seed }
    }
}

impl MassDriverSource for IndexedMassDrivers<'_> {
    fn mass_driver(&mut self, u: &GenealogicalIndex) -> MassDriver {
        let mut rng = stream_rng(self.seed, "mass-driver", &u.path_u64());
        let masses = (0..self.k)
            .map(|_| self.nu.sample_masses(&mut rng).padded(self.k))
            .collect();
        let perms = (0..self.k).map(|_| uniform_permutation(self.k, &mut rng)).collect();
        MassDriver { masses, perms }
    }
}

/// One step of the mass chain with the given drivers, truncated at `depth`.
///
/// The rows of every matrix are the root children of `state` (padded with
/// zeros to `k`; a lone root counts as the single child 1). Column `m` of
/// the matrix at `u` totals `μ̃^u μ^i s^u_{i,σ^u_i(m)}` over rows `i`; the
/// totals ranked in decreasing order (ties by column) become the children
/// of `u`.
pub fn mass_apply(
    state: &MassFragmentation,
    drivers: &mut dyn MassDriverSource,
    k: usize,
    depth: usize,
) -> Result<MassFragmentation> {
    let mut rows = state.root_children();
    if rows.is_empty() {
        rows.push(1.0);
    }
    if rows.len() > k {
        return Err(Error::DegreeTooLarge(rows.len()));
    }
    rows.resize(k, 0.0);

    fn build(
        u: GenealogicalIndex,
        mass: f64,
        level: usize,
        rows: &[f64],
        drivers: &mut dyn MassDriverSource,
        k: usize,
        depth: usize,
    ) -> Result<MassNode> {
        if level >= depth || mass < MASS_FLOOR {
            return Ok(MassNode::leaf(mass));
        }
        let d = drivers.mass_driver(&u);
        if d.k() != k {
            return Err(Error::InvalidDriver(format!("driver has {} rows, expected {k}", d.k())));
        }
        let mut totals: Vec<(usize, f64)> = (0..k)
            .map(|m| {
                let t = rows
                    .iter()
                    .enumerate()
                    .map(|(i, &mu)| mass * mu * d.masses[i][d.perms[i][m]])
                    .sum();
                (m, t)
            })
            .collect();
        // stable sort keeps column order among ties
        totals.sort_by(|a, b| b.1.total_cmp(&a.1));
        let mut children = Vec::new();
        for (j, &(_, t)) in totals.iter().enumerate() {
            if t >= MASS_FLOOR {
                children.push(build(u.child(j as u32 + 1), t, level + 1, rows, drivers, k, depth)?);
            }
        }
        Ok(MassNode { mass, children })
    }

    let root = build(GenealogicalIndex::root(), 1.0, 0, &rows, drivers, k, depth)?;
    Ok(MassFragmentation { root })
}

/// One step of the mass chain with fresh drivers from `ν`.
pub fn mass_step(
    state: &MassFragmentation,
    nu: &MixtureMeasure,
    k: usize,
    depth: usize,
    rng: &mut dyn RngCore,
) -> Result<MassFragmentation> {
    let mut drivers = IndexedMassDrivers::new(nu, k, rng.next_u64());
    mass_apply(state, &mut drivers, k, depth)
}

/// `#(A ∩ [n]) / n` for `A = {x : member(x)}`.
pub fn asymptotic_frequency(member: impl Fn(Label) -> bool, n: usize) -> f64 {
    let hits = (1..=n as Label).filter(|&x| member(x)).count();
    hits as f64 / n as f64
}

/// Each vertex replaced by its share `#v / n` of the ground set; children
/// ranked by mass, ties by least element.
pub fn mass_of_tree(t: &FragmentationTree) -> MassFragmentation {
    let n = t.num_leaves() as f64;
    fn node(t: &FragmentationTree, i: usize, n: f64) -> MassNode {
        let mut kids: Vec<usize> = t.children_of(i).to_vec();
        kids.sort_by_key(|&c| std::cmp::Reverse(t.vertex(c).len()));
        MassNode {
            mass: t.vertex(i).len() as f64 / n,
            children: kids.into_iter().map(|c| node(t, c, n)).collect(),
        }
    }
    MassFragmentation { root: node(t, 0, n) }
}

/// Atom times of the driving process and the state after each atom,
/// starting with `(0, m0)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MassPath {
    pub atom_times: Vec<f64>,
    pub path: Vec<(f64, MassFragmentation)>,
}

/// Continuous-time mass chain: at rate-`λ` atom times the state is updated
/// by [`mass_apply`] with fresh drivers; it is constant in between.
pub fn mass_ct_simulate(
    m0: &MassFragmentation,
    nu: &MixtureMeasure,
    k: usize,
    cfg: &CtChainConfig,
    depth: usize,
    rng: &mut dyn RngCore,
) -> Result<MassPath> {
    let clock = Exp::new(cfg.lambda()).expect("positive rate");
    let mut atom_times = Vec::new();
    let mut path = vec![(0.0, m0.clone())];
    let mut state = m0.clone();
    let mut time = 0.0;
    loop {
        time += clock.sample(rng);
        if time > cfg.horizon() {
            break;
        }
        atom_times.push(time);
        state = mass_step(&state, nu, k, depth, rng)?;
        path.push((time, state.clone()));
    }
    Ok(MassPath { atom_times, path })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::GroundSet;
    use crate::paintbox::RankedMassPartition;
    use crate::streams::seeded;

    struct Fixed(MassDriver);

    impl MassDriverSource for Fixed {
        fn mass_driver(&mut self, _: &GenealogicalIndex) -> MassDriver {
            self.0.clone()
        }
    }

    #[test]
    fn column_totals() {
        let state = MassFragmentation::from_root_children(vec![0.6, 0.4]).unwrap();
        let d = MassDriver::new(vec![vec![0.5, 0.5]; 2], vec![vec![0, 1]; 2]).unwrap();
        let next = mass_apply(&state, &mut Fixed(d), 2, 1).unwrap();
        assert_eq!(next.root_children(), vec![0.5, 0.5]);

        let state = MassFragmentation::from_root_children(vec![0.5, 0.5]).unwrap();
        let d = MassDriver::new(vec![vec![1.0, 0.0]; 2], vec![vec![0, 1], vec![1, 0]]).unwrap();
        let next = mass_apply(&state, &mut Fixed(d), 2, 1).unwrap();
        assert_eq!(next.root_children(), vec![0.5, 0.5]);
    }

    #[test]
    fn ranking_and_depth() {
        let state = MassFragmentation::from_root_children(vec![0.7, 0.3]).unwrap();
        let d = MassDriver::new(vec![vec![0.8, 0.2], vec![0.6, 0.4]], vec![vec![1, 0], vec![0, 1]]).unwrap();
        let next = mass_apply(&state, &mut Fixed(d), 2, 2).unwrap();
        // columns: 0.7·0.2 + 0.3·0.6 = 0.32 and 0.7·0.8 + 0.3·0.4 = 0.68
        let c = next.root_children();
        assert!((c[0] - 0.68).abs() < 1e-15 && (c[1] - 0.32).abs() < 1e-15);
        assert_eq!(next.depth(), 2);
        let grand = next.get(&GenealogicalIndex::root().child(1)).unwrap();
        assert!((grand.children[0].mass - 0.68 * 0.68).abs() < 1e-15);
        assert!(next.conservation_error() < 1e-12);
    }

    #[test]
    fn lone_root_counts_as_one_child() {
        let d = MassDriver::new(vec![vec![0.5, 0.5]; 2], vec![vec![0, 1]; 2]).unwrap();
        let next = mass_apply(&MassFragmentation::trivial(), &mut Fixed(d), 2, 1).unwrap();
        assert_eq!(next.root_children(), vec![0.5, 0.5]);
    }

    #[test]
    fn random_steps_conserve_mass() {
        let nu = MixtureMeasure::dirichlet(3, 0.5).unwrap();
        let mut state = MassFragmentation::trivial();
        let mut rng = seeded(12);
        for _ in 0..200 {
            state = mass_step(&state, &nu, 3, DEFAULT_DEPTH, &mut rng).unwrap();
            assert!(state.conservation_error() < 1e-9);
            assert!(state.max_children() <= 3);
            assert!(MassFragmentation::new(state.root().clone()).is_ok());
        }
    }

    #[test]
    fn frequencies() {
        assert_eq!(asymptotic_frequency(|x| x % 2 == 0, 1000), 0.5);
        assert_eq!(asymptotic_frequency(|x| x <= 10, 10), 1.0);
        assert_eq!(asymptotic_frequency(|x| x == 7, 1000), 0.001);
    }

    #[test]
    fn masses_of_trees() {
        let star = mass_of_tree(&FragmentationTree::star(&GroundSet::range(4)));
        assert_eq!(star.root_children(), vec![0.25; 4]);
        let cat = mass_of_tree(&FragmentationTree::caterpillar(&GroundSet::range(4)));
        assert_eq!(cat.root_children(), vec![0.75, 0.25]);
        let under = cat.get(&GenealogicalIndex::root().child(1)).unwrap();
        assert_eq!(under.child_masses(), vec![0.5, 0.25]);
        assert!(cat.conservation_error() < 1e-15);
    }

    #[test]
    fn validation_and_json() {
        assert!(MassFragmentation::from_root_children(vec![0.3, 0.7]).is_err());
        assert!(MassFragmentation::from_root_children(vec![0.5, 0.4]).is_err());
        let m = MassFragmentation::from_root_children(vec![0.5, 0.5]).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(
            text,
            r#"{"mass":1.0,"children":[{"mass":0.5,"children":[]},{"mass":0.5,"children":[]}]}"#
        );
        let back: MassFragmentation = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<MassFragmentation>(r#"{"mass":0.5}"#).is_err());
    }

    #[test]
    fn unit_nu_copies_rows() {
        let nu = MixtureMeasure::point(RankedMassPartition::unit());
        let state = MassFragmentation::from_root_children(vec![0.7, 0.3]).unwrap();
        let mut rng = seeded(0);
        for _ in 0..20 {
            let c = mass_step(&state, &nu, 2, 1, &mut rng).unwrap().root_children();
            assert!(c == vec![0.7, 0.3] || c == vec![1.0]);
        }
    }

    #[test]
    fn ct_path_is_seeded() {
        let nu = MixtureMeasure::dirichlet(2, 1.0).unwrap();
        let cfg = CtChainConfig::new(1.0, 5.0).unwrap();
        let a = mass_ct_simulate(&MassFragmentation::trivial(), &nu, 2, &cfg, 2, &mut seeded(7)).unwrap();
        let b = mass_ct_simulate(&MassFragmentation::trivial(), &nu, 2, &cfg, 2, &mut seeded(7)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.path.len(), a.atom_times.len() + 1);
    }
}
