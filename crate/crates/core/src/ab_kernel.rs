//! Ancestral branching transitions on fragmentation trees.
//!
//! A transition `T ↦ T'` is built top-down: each non-singleton vertex `b` of
//! `T'` is split by a partition kernel applied to the root partition of the
//! reduced subtree `T|_b`, conditioned on the split being non-trivial.

use std::collections::{BTreeMap, HashMap};

use rand::RngCore;
use rand_distr::{Distribution, Exp};
use serde::Serialize;

use crate::analysis::StochasticMatrix;
use crate::combinatorics::{enumerate_trees, FragmentationTree, GenealogicalIndex, GroundSet, Label, SetPartition};
use crate::cp_kernel::{cp_apply, sample_driver, CpDriver, CpKernel, PartitionKernel};
use crate::error::{Error, Result};
use crate::mass_frag::{MassDriver, MassDriverSource};
use crate::paintbox::{paintbox_cells, uniform_permutation, MixtureMeasure};
use crate::streams::{stream_rng, StreamRng};

pub const DEFAULT_REJECTION_CAP: usize = 1_000_000;
pub const DEFAULT_TREE_CAP: usize = 6;

/// The AB kernel `Q` built on a partition kernel family.
#[derive(Clone, Debug)]
pub struct AbKernel<K> {
    base: K,
    rejection_cap: usize,
}

impl AbKernel<CpKernel> {
    /// AB kernel driven by `CP(ν)` on `𝒫^(k)`.
    pub fn cp(nu: MixtureMeasure, k: usize) -> Result<Self> {
        Ok(AbKernel::new(CpKernel::new(nu, k)?))
    }
}

impl<K: PartitionKernel> AbKernel<K> {
    pub fn new(base: K) -> Self {
        AbKernel {
            base,
            rejection_cap: DEFAULT_REJECTION_CAP,
        }
    }

    pub fn with_rejection_cap(mut self, cap: usize) -> Self {
        self.rejection_cap = cap.max(1);
        self
    }

    pub fn base(&self) -> &K {
        &self.base
    }

    pub fn rejection_cap(&self) -> usize {
        self.rejection_cap
    }

    /// `p_b(π, ·) / (1 − p_b(π, 1_b))` evaluated at `to`.
    fn conditioned(&self, b: &[Label], from: &SetPartition, to: &SetPartition) -> Result<f64> {
        let one = SetPartition::one_block(&GroundSet::new(b.to_vec())?);
        let q = 1.0 - self.base.prob(from, &one);
        if q <= 0.0 {
            return Err(Error::DegenerateKernel(b.to_vec()));
        }
        Ok(self.base.prob(from, to) / q)
    }

    /// `Q(T, T')` as a product over the non-singleton vertices of `T'`.
    pub fn prob(&self, t: &FragmentationTree, t_next: &FragmentationTree) -> Result<f64> {
        if t.ground() != t_next.ground() {
            return Err(Error::GroundMismatch);
        }
        let mut p = 1.0;
        for i in t_next.internal_vertices() {
            let b = t_next.vertex(i);
            let from = t.restricted_root_partition(b);
            p *= self.conditioned(b, &from, &t_next.children_partition(i))?;
            if p == 0.0 {
                break;
            }
        }
        Ok(p)
    }

    /// `Q(T, T')` by recursion: the root factor times the transitions of the
    /// reduced subtrees below each root block.
    pub fn prob_recursive(&self, t: &FragmentationTree, t_next: &FragmentationTree) -> Result<f64> {
        if t.ground() != t_next.ground() {
            return Err(Error::GroundMismatch);
        }
        if t.num_leaves() == 1 {
            return Ok(1.0);
        }
        let root_next = t_next.root_partition()?;
        let mut p = self.conditioned(t.ground(), &t.root_partition()?, &root_next)?;
        for &c in t_next.children_of(0) {
            if p == 0.0 {
                break;
            }
            let sub_next = t_next.subtree(c);
            let sub = t.restrict_unchecked(sub_next.ground());
            p *= self.prob_recursive(&sub, &sub_next)?;
        }
        Ok(p)
    }

    /// Draws `T' ~ Q(T, ·)`, splitting frontier blocks in order of least
    /// element and redrawing one-block splits.
    pub fn sample(&self, t: &FragmentationTree, rng: &mut dyn RngCore) -> Result<FragmentationTree> {
        let ground = t.ground().to_vec();
        let mut vertices: Vec<Vec<Label>> = ground.iter().map(|&x| vec![x]).collect();
        let mut frontier: BTreeMap<Label, Vec<Label>> = BTreeMap::new();
        if ground.len() >= 2 {
            frontier.insert(ground[0], ground.clone());
        }
        vertices.push(ground);
        while let Some((_, b)) = frontier.pop_first() {
            let from = t.restricted_root_partition(&b);
            let split = self.nontrivial_draw(&from, rng)?;
            for blk in split.blocks() {
                if blk.len() >= 2 {
                    frontier.insert(blk[0], blk.clone());
                    vertices.push(blk.clone());
                }
            }
        }
        FragmentationTree::new(vertices)
    }

    fn nontrivial_draw(&self, from: &SetPartition, rng: &mut dyn RngCore) -> Result<SetPartition> {
        for _ in 0..self.rejection_cap {
            let draw = self.base.sample(from, rng);
            if !draw.is_one_block() {
                return Ok(draw);
            }
        }
        Err(Error::RejectionCapExceeded(self.rejection_cap))
    }

    /// Exact matrix over `𝒯_[n]^(k)` in enumeration order.
    pub fn matrix(&self, n: usize, cap: usize) -> Result<StochasticMatrix<FragmentationTree>> {
        if n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        if n > cap {
            return Err(Error::StateSpaceTooLarge { size: n, cap });
        }
        let states = enumerate_trees(n, self.base.max_blocks());
        StochasticMatrix::try_from_fn(states, |a, b| self.prob(a, b))
    }
}

pub fn ab_prob<K: PartitionKernel>(
    t: &FragmentationTree,
    t_next: &FragmentationTree,
    kernel: &AbKernel<K>,
) -> Result<f64> {
    kernel.prob(t, t_next)
}

pub fn ab_prob_recursive<K: PartitionKernel>(
    t: &FragmentationTree,
    t_next: &FragmentationTree,
    kernel: &AbKernel<K>,
) -> Result<f64> {
    kernel.prob_recursive(t, t_next)
}

pub fn ab_sample<K: PartitionKernel>(
    t: &FragmentationTree,
    kernel: &AbKernel<K>,
    rng: &mut dyn RngCore,
) -> Result<FragmentationTree> {
    kernel.sample(t, rng)
}

pub fn ab_matrix<K: PartitionKernel>(n: usize, kernel: &AbKernel<K>) -> Result<StochasticMatrix<FragmentationTree>> {
    kernel.matrix(n, DEFAULT_TREE_CAP)
}

/// Supplies the CP driver used at each genealogical index.
pub trait DriverSource {
    /// Driver for index `u`; its cuts must cover `ground`.
    fn cp_driver(&mut self, u: &GenealogicalIndex, ground: &[Label]) -> CpDriver;
}

/// Independent `CP(ν)` drivers, one stream per index derived from `seed`.
#[derive(Clone, Debug)]
pub struct IndexedDrivers<'a> {
    nu: &'a MixtureMeasure,
    k: usize,
    seed: u64,
}

impl<'a> IndexedDrivers<'a> {
    pub fn new(nu: &'a MixtureMeasure, k: usize, seed: u64) -> Self {
        IndexedDrivers { nu, k, seed }
    }
}

impl DriverSource for IndexedDrivers<'_> {
    fn cp_driver(&mut self, u: &GenealogicalIndex, ground: &[Label]) -> CpDriver {
        let mut rng = stream_rng(self.seed, "cp-driver", &u.path_u64());
        sample_driver(ground, self.nu, self.k, &mut rng)
    }
}

/// Per-index randomness `(s^u, σ^u)` shared between the tree and the mass
/// chain. Row `i` of the tree driver is cut by the `s^u_i`-paintbox with
/// cell `c` holding the labels painted with mass `s^u_{i,c}`.
#[derive(Clone, Debug)]
pub struct CoupledDrivers<'a> {
    nu: &'a MixtureMeasure,
    k: usize,
    seed: u64,
}

impl<'a> CoupledDrivers<'a> {
    pub fn new(nu: &'a MixtureMeasure, k: usize, seed: u64) -> Self {
        CoupledDrivers { nu, k, seed }
    }

    /// `(s^u, σ^u)` followed by the generator positioned after them.
    fn masses_and_perms(&self, u: &GenealogicalIndex) -> (Vec<Vec<f64>>, Vec<Vec<usize>>, StreamRng) {
        let mut rng = stream_rng(self.seed, "coupled-driver", &u.path_u64());
        let masses: Vec<Vec<f64>> = (0..self.k)
            .map(|_| self.nu.sample_masses(&mut rng).padded(self.k))
            .collect();
        let perms = (0..self.k).map(|_| uniform_permutation(self.k, &mut rng)).collect();
        (masses, perms, rng)
    }

    pub fn mass_driver(&self, u: &GenealogicalIndex) -> MassDriver {
        let (masses, perms, _) = self.masses_and_perms(u);
        MassDriver::new(masses, perms).expect("sampled driver is valid")
    }
}

impl DriverSource for CoupledDrivers<'_> {
    fn cp_driver(&mut self, u: &GenealogicalIndex, ground: &[Label]) -> CpDriver {
        let (masses, perms, mut rng) = self.masses_and_perms(u);
        let cells = masses.iter().map(|s| paintbox_cells(s, ground, &mut rng)).collect();
        CpDriver::from_cells(cells, perms).expect("sampled driver is valid")
    }
}

impl MassDriverSource for CoupledDrivers<'_> {
    fn mass_driver(&mut self, u: &GenealogicalIndex) -> MassDriver {
        CoupledDrivers::mass_driver(self, u)
    }
}

/// Builds `T'` from `T` with the genealogical branching map.
///
/// The vertex at index `u` splits its labels `b` by `CP(Π_{T|b}, B^u, σ^u)`.
/// A one-block result moves the vertex to index `u·1` with the driver found
/// there; otherwise the `j`-th block (by least element) gets index `u·j`.
pub fn genealogical_apply(
    t: &FragmentationTree,
    drivers: &mut dyn DriverSource,
    rejection_cap: usize,
) -> Result<FragmentationTree> {
    let ground = t.ground().to_vec();
    let mut vertices: Vec<Vec<Label>> = ground.iter().map(|&x| vec![x]).collect();
    let mut stack = Vec::new();
    if ground.len() >= 2 {
        stack.push((GenealogicalIndex::root(), ground.clone()));
    }
    vertices.push(ground);
    while let Some((mut u, b)) = stack.pop() {
        let from = t.restricted_root_partition(&b);
        let mut attempts = 0;
        let split = loop {
            let driver = drivers.cp_driver(&u, &b);
            let out = cp_apply(&from, &driver)?;
            if !out.is_one_block() {
                break out;
            }
            attempts += 1;
            if attempts >= rejection_cap {
                return Err(Error::RejectionCapExceeded(rejection_cap));
            }
            u = u.child(1);
        };
        for (j, blk) in split.blocks().iter().enumerate() {
            if blk.len() >= 2 {
                stack.push((u.child(j as u32 + 1), blk.clone()));
                vertices.push(blk.clone());
            }
        }
    }
    FragmentationTree::new(vertices)
}

/// One genealogical-branching draw with fresh independent drivers.
pub fn genealogical_sample(
    t: &FragmentationTree,
    nu: &MixtureMeasure,
    k: usize,
    rng: &mut dyn RngCore,
) -> Result<FragmentationTree> {
    if t.degree() > k {
        return Err(Error::DegreeTooLarge(t.degree()));
    }
    let mut drivers = IndexedDrivers::new(nu, k, rng.next_u64());
    genealogical_apply(t, &mut drivers, DEFAULT_REJECTION_CAP)
}

/// Global jump rate and time horizon of a continuous-time chain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CtChainConfig {
    lambda: f64,
    horizon: f64,
}

impl CtChainConfig {
    pub fn new(lambda: f64, horizon: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        Ok(CtChainConfig { lambda, horizon })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }
}

/// Jump-hold simulation: hold for `Exp(λ(1 − Q(T,T)))`, then jump to a draw
/// of `Q(T, ·)` conditioned to differ from `T`. The path starts at `(0, T0)`
/// and records every jump up to the horizon.
pub fn ct_simulate<K: PartitionKernel>(
    t0: &FragmentationTree,
    kernel: &AbKernel<K>,
    cfg: &CtChainConfig,
    rng: &mut dyn RngCore,
) -> Result<Vec<(f64, FragmentationTree)>> {
    let mut path = vec![(0.0, t0.clone())];
    let mut stay: HashMap<FragmentationTree, f64> = HashMap::new();
    let mut state = t0.clone();
    let mut time = 0.0;
    loop {
        let q = match stay.get(&state) {
            Some(&q) => q,
            None => {
                let q = kernel.prob(&state, &state)?;
                stay.insert(state.clone(), q);
                q
            }
        };
        let rate = cfg.lambda * (1.0 - q);
        if rate <= 0.0 {
            break;
        }
        time += Exp::new(rate).expect("positive rate").sample(rng);
        if time > cfg.horizon {
            break;
        }
        let mut next = kernel.sample(&state, rng)?;
        let mut tries = 1;
        while next == state {
            if tries >= kernel.rejection_cap {
                return Err(Error::RejectionCapExceeded(kernel.rejection_cap));
            }
            next = kernel.sample(&state, rng)?;
            tries += 1;
        }
        state = next;
        path.push((time, state.clone()));
    }
    Ok(path)
}

/// Output of [`poisson_simulate`]: every atom time, and the path of state
/// changes starting at `(0, T0)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PoissonPath {
    pub atom_times: Vec<f64>,
    pub path: Vec<(f64, FragmentationTree)>,
}

/// Poissonian construction: at rate-`λ` atom times a candidate is built by
/// the genealogical map with fresh drivers, and the state moves only if the
/// candidate differs.
pub fn poisson_simulate(
    t0: &FragmentationTree,
    nu: &MixtureMeasure,
    k: usize,
    cfg: &CtChainConfig,
    rng: &mut dyn RngCore,
) -> Result<PoissonPath> {
    if t0.degree() > k {
        return Err(Error::DegreeTooLarge(t0.degree()));
    }
    let clock = Exp::new(cfg.lambda).expect("positive rate");
    let mut atom_times = Vec::new();
    let mut path = vec![(0.0, t0.clone())];
    let mut state = t0.clone();
    let mut time = 0.0;
    loop {
        time += clock.sample(rng);
        if time > cfg.horizon {
            break;
        }
        atom_times.push(time);
        let mut drivers = IndexedDrivers::new(nu, k, rng.next_u64());
        let candidate = genealogical_apply(&state, &mut drivers, DEFAULT_REJECTION_CAP)?;
        if candidate != state {
            state = candidate;
            path.push((time, state.clone()));
        }
    }
    Ok(PoissonPath { atom_times, path })
}
