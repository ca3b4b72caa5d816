//! Cut-and-paste transitions on set partitions.
//!
//! A CP step cuts every block of the current partition by an independent
//! partition, assigns each piece a column, and pastes pieces that share a
//! column. [`CpKernel`] is the paintbox-driven instance: cuts are `ρ_ν`
//! paintboxes and columns come from uniform permutations of `[k]`.

use std::collections::BTreeMap;

use rand::RngCore;

use crate::analysis::StochasticMatrix;
use crate::combinatorics::{enumerate_partitions, Label, SetPartition};
use crate::error::{Error, Result};
use crate::paintbox::{ln_falling, size_biased_labels, uniform_permutation, LabelMeasure, MixtureMeasure};

/// A family `{p_b}` of Markov kernels on partitions of finite label sets.
///
/// `prob` and `sample` take partitions of the same ground set; only the
/// ground set of `from` is used to decide where `sample` lives.
pub trait PartitionKernel {
    fn prob(&self, from: &SetPartition, to: &SetPartition) -> f64;
    fn sample(&self, from: &SetPartition, rng: &mut dyn RngCore) -> SetPartition;
    /// Upper bound on the number of blocks of any output, if there is one.
    fn max_blocks(&self) -> Option<usize>;
    fn describe(&self) -> String;
}

impl<K: PartitionKernel + ?Sized> PartitionKernel for &K {
    fn prob(&self, from: &SetPartition, to: &SetPartition) -> f64 {
        (**self).prob(from, to)
    }
    fn sample(&self, from: &SetPartition, rng: &mut dyn RngCore) -> SetPartition {
        (**self).sample(from, rng)
    }
    fn max_blocks(&self) -> Option<usize> {
        (**self).max_blocks()
    }
    fn describe(&self) -> String {
        (**self).describe()
    }
}

/// The `CP(ν)` kernel on `𝒫^(k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CpKernel {
    nu: MixtureMeasure,
    k: usize,
}

impl CpKernel {
    pub fn new(nu: MixtureMeasure, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if nu.dim() > k {
            return Err(Error::InvalidParameter(format!(
                "nu charges {} masses but k = {k}",
                nu.dim()
            )));
        }
        Ok(CpKernel { nu, k })
    }

    pub fn nu(&self) -> &MixtureMeasure {
        &self.nu
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

impl PartitionKernel for CpKernel {
    fn prob(&self, from: &SetPartition, to: &SetPartition) -> f64 {
        cp_prob_unchecked(from, to, &self.nu, self.k)
    }

    fn sample(&self, from: &SetPartition, rng: &mut dyn RngCore) -> SetPartition {
        let driver = sample_driver(from.ground().as_slice(), &self.nu, self.k, rng);
        cp_apply_unchecked(from, &driver)
    }

    fn max_blocks(&self) -> Option<usize> {
        Some(self.k)
    }

    fn describe(&self) -> String {
        format!("CP(nu) with k = {}, nu = {}", self.k, self.nu.to_json())
    }
}

/// `p_n(B, B'; ν)` of the `CP(ν)` kernel.
pub fn cp_prob(from: &SetPartition, to: &SetPartition, nu: &MixtureMeasure, k: usize) -> Result<f64> {
    if from.ground() != to.ground() {
        return Err(Error::GroundMismatch);
    }
    if from.num_blocks() > k {
        return Err(Error::InvalidParameter(format!(
            "{} blocks exceed k = {k}",
            from.num_blocks()
        )));
    }
    Ok(cp_prob_unchecked(from, to, nu, k))
}

fn cp_prob_unchecked(from: &SetPartition, to: &SetPartition, nu: &MixtureMeasure, k: usize) -> f64 {
    let r = to.num_blocks();
    if r > k {
        return 0.0;
    }
    let mut log_pre = ln_falling(k, r);
    let mut rho = 1.0;
    for b in from.blocks() {
        let sizes = to.restricted_sizes(b);
        log_pre -= ln_falling(k, sizes.len());
        rho *= nu.prob_sizes(&sizes);
        if rho == 0.0 {
            return 0.0;
        }
    }
    log_pre.exp() * rho
}

/// The randomness of one CP step: a cut of the ground set for each row and a
/// permutation of the `k` columns for each row.
///
/// Cuts are stored as `k` cells per row, some possibly empty. Row `i` sends
/// cell `perms[i][j]` to column `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct CpDriver {
    cells: Vec<Vec<Vec<Label>>>,
    perms: Vec<Vec<usize>>,
}

impl CpDriver {
    /// Cuts as partitions (blocks in least-element order, padded with empty
    /// cells) and 0-based permutations of `0..k`, where `k = perms.len()`.
    pub fn new(cuts: Vec<SetPartition>, perms: Vec<Vec<usize>>) -> Result<Self> {
        let k = perms.len();
        let cells = cuts
            .into_iter()
            .map(|c| {
                if c.num_blocks() > k {
                    return Err(Error::InvalidDriver(format!("cut {c} has more than {k} blocks")));
                }
                let mut cells: Vec<Vec<Label>> = c.blocks().to_vec();
                cells.resize(k, Vec::new());
                Ok(cells)
            })
            .collect::<Result<Vec<_>>>()?;
        CpDriver::from_cells(cells, perms)
    }

    /// Cuts given directly as `k` cells per row.
    pub fn from_cells(cells: Vec<Vec<Vec<Label>>>, perms: Vec<Vec<usize>>) -> Result<Self> {
        let k = perms.len();
        if k == 0 {
            return Err(Error::InvalidDriver("no rows".into()));
        }
        if cells.len() != k {
            return Err(Error::InvalidDriver(format!(
                "{} cuts for {k} permutations",
                cells.len()
            )));
        }
        for p in &perms {
            let mut seen = vec![false; k];
            if p.len() != k || p.iter().any(|&x| x >= k || std::mem::replace(&mut seen[x], true)) {
                return Err(Error::InvalidDriver(format!("{p:?} is not a permutation of 0..{k}")));
            }
        }
        for row in &cells {
            if row.len() != k {
                return Err(Error::InvalidDriver(format!(
                    "a cut has {} cells, expected {k}",
                    row.len()
                )));
            }
        }
        Ok(CpDriver { cells, perms })
    }

    pub fn k(&self) -> usize {
        self.perms.len()
    }

    pub fn cells(&self) -> &[Vec<Vec<Label>>] {
        &self.cells
    }

    pub fn perms(&self) -> &[Vec<usize>] {
        &self.perms
    }
}

/// `CP(B, C, σ)`: blocks are the non-empty column totals `⋃ᵢ Bᵢ ∩ C_{i,σᵢ(j)}`.
pub fn cp_apply(from: &SetPartition, driver: &CpDriver) -> Result<SetPartition> {
    if from.num_blocks() > driver.k() {
        return Err(Error::InvalidDriver(format!(
            "{} blocks but only {} rows",
            from.num_blocks(),
            driver.k()
        )));
    }
    let covered = |x: Label| driver.cells.iter().all(|row| row.iter().any(|c| c.contains(&x)));
    if let Some(&x) = from.ground().iter().find(|&&x| !covered(x)) {
        return Err(Error::InvalidDriver(format!("label {x} missing from a cut")));
    }
    Ok(cp_apply_unchecked(from, driver))
}

fn cp_apply_unchecked(from: &SetPartition, driver: &CpDriver) -> SetPartition {
    let k = driver.k();
    let mut column_of: BTreeMap<Label, usize> = BTreeMap::new();
    for (i, b) in from.blocks().iter().enumerate() {
        let row = &driver.cells[i];
        for (j, &cell) in driver.perms[i].iter().enumerate() {
            for &x in &row[cell] {
                if b.binary_search(&x).is_ok() {
                    column_of.insert(x, j);
                }
            }
        }
    }
    debug_assert_eq!(column_of.len(), from.len());
    let (ground, colors): (Vec<Label>, Vec<usize>) = column_of.into_iter().unzip();
    debug_assert!(colors.iter().all(|&c| c < k));
    SetPartition::from_colors(&ground, &colors)
}

/// `k` i.i.d. `ρ_ν` cuts of `ground` and `k` i.i.d. uniform permutations.
pub fn sample_driver(ground: &[Label], nu: &MixtureMeasure, k: usize, rng: &mut dyn RngCore) -> CpDriver {
    let cells = (0..k)
        .map(|_| {
            let cut = nu.sample_partition(ground, rng);
            let mut cells: Vec<Vec<Label>> = cut.blocks().to_vec();
            cells.resize(k, Vec::new());
            cells
        })
        .collect();
    let perms = (0..k).map(|_| uniform_permutation(k, rng)).collect();
    CpDriver { cells, perms }
}

/// One draw from `p_n(B, ·; ν)`.
pub fn cp_sample(from: &SetPartition, nu: &MixtureMeasure, k: usize, rng: &mut dyn RngCore) -> Result<SetPartition> {
    if from.num_blocks() > k {
        return Err(Error::InvalidParameter(format!(
            "{} blocks exceed k = {k}",
            from.num_blocks()
        )));
    }
    let driver = sample_driver(from.ground().as_slice(), nu, k, rng);
    Ok(cp_apply_unchecked(from, &driver))
}

/// The general cut-and-paste map.
///
/// `cuts[i]` partitions block `i` of `pi` into pieces `C_{i,1..kᵢ}`,
/// `labels[i]` holds the `kᵢ` labels of row `i` and `perms[i]` is a 0-based
/// permutation of `0..kᵢ`. Piece `C_{i,j}` receives `labels[i][perms[i][j]]`
/// and pieces with equal labels are pasted together.
pub fn general_cp_apply(
    pi: &SetPartition,
    cuts: &[SetPartition],
    perms: &[Vec<usize>],
    labels: &[Vec<Label>],
) -> Result<SetPartition> {
    let rows = pi.num_blocks();
    if cuts.len() != rows || perms.len() != rows || labels.len() != rows {
        return Err(Error::InvalidDriver(format!(
            "expected {rows} cuts, permutations and label rows"
        )));
    }
    let mut label_of: BTreeMap<Label, Label> = BTreeMap::new();
    for (i, b) in pi.blocks().iter().enumerate() {
        if cuts[i].ground().as_slice() != b.as_slice() {
            return Err(Error::InvalidDriver(format!(
                "cut {} does not partition block {i}",
                cuts[i]
            )));
        }
        let ki = cuts[i].num_blocks();
        if perms[i].len() != ki || labels[i].len() != ki {
            return Err(Error::InvalidDriver(format!(
                "row {i} needs {ki} labels and a permutation of 0..{ki}"
            )));
        }
        for (j, piece) in cuts[i].blocks().iter().enumerate() {
            let l = *perms[i]
                .get(j)
                .and_then(|&p| labels[i].get(p))
                .ok_or_else(|| Error::InvalidDriver(format!("bad permutation in row {i}")))?;
            label_of.extend(piece.iter().map(|&x| (x, l)));
        }
    }
    let (ground, ls): (Vec<Label>, Vec<Label>) = label_of.into_iter().unzip();
    let colors: Vec<usize> = ls.into_iter().map(|l| l as usize).collect();
    Ok(SetPartition::from_colors(&ground, &colors))
}

/// Cuts each block with `cutter`, labels the pieces by a size-biased draw
/// from `mu` in uniformly permuted order, and pastes equal labels.
pub fn general_cp_sample(
    pi: &SetPartition,
    cutter: &mut dyn FnMut(&[Label], &mut dyn RngCore) -> SetPartition,
    mu: &LabelMeasure,
    rng: &mut dyn RngCore,
) -> Result<SetPartition> {
    let mut cuts = Vec::with_capacity(pi.num_blocks());
    let mut perms = Vec::with_capacity(pi.num_blocks());
    let mut labels = Vec::with_capacity(pi.num_blocks());
    for b in pi.blocks() {
        let cut = cutter(b, rng);
        let ki = cut.num_blocks();
        labels.push(size_biased_labels(mu, ki, rng)?);
        perms.push(uniform_permutation(ki, rng));
        cuts.push(cut);
    }
    general_cp_apply(pi, &cuts, &perms, &labels)
}

/// Exact `CP(ν)` matrix over `𝒫_[n]^(k)` in enumeration order.
pub fn cp_matrix(n: usize, k: usize, nu: &MixtureMeasure, cap: usize) -> Result<StochasticMatrix<SetPartition>> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if n > cap {
        return Err(Error::StateSpaceTooLarge { size: n, cap });
    }
    let kernel = CpKernel::new(nu.clone(), k)?;
    kernel_matrix(&kernel, n)
}

/// Tabulates any partition kernel over the partitions of `[n]` it can reach.
pub fn kernel_matrix<K: PartitionKernel + ?Sized>(kernel: &K, n: usize) -> Result<StochasticMatrix<SetPartition>> {
    let states = enumerate_partitions(n, kernel.max_blocks());
    StochasticMatrix::from_fn(states, |a, b| kernel.prob(a, b))
}

pub const DEFAULT_PARTITION_CAP: usize = 10;
