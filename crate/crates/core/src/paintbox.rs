//! Paintbox partitions: ranked mass partitions, mixing measures `ν`, exact
//! finite-dimensional probabilities and samplers.
//!
//! Only conservative mass partitions (masses summing to one) are accepted.
//! All probabilities depend on a partition only through its block sizes.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, RngCore};
use rand_distr::Gamma;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{Label, SetPartition};
use crate::error::{Error, Result};

const SUM_TOL: f64 = 1e-12;

/// A point `s₁ ≥ s₂ ≥ … ≥ s_k ≥ 0` of the ranked simplex, `Σ sⱼ = 1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(into = "Vec<f64>")]
pub struct RankedMassPartition {
    masses: Vec<f64>,
}

impl RankedMassPartition {
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::InvalidMass("no masses".into()));
        }
        if masses.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::InvalidMass(format!(
                "{masses:?} has a negative or non-finite entry"
            )));
        }
        if masses.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidMass(format!("{masses:?} is not non-increasing")));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::Dissipative(total));
        }
        Ok(RankedMassPartition { masses })
    }

    /// Sorts into non-increasing order first.
    pub fn from_unranked(mut masses: Vec<f64>) -> Result<Self> {
        masses.sort_unstable_by(|a, b| b.total_cmp(a));
        RankedMassPartition::new(masses)
    }

    /// `(1, 0, …, 0)`.
    pub fn unit() -> Self {
        RankedMassPartition { masses: vec![1.0] }
    }

    pub fn uniform(k: usize) -> Self {
        RankedMassPartition {
            masses: vec![1.0 / k as f64; k],
        }
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Number of strictly positive masses.
    pub fn support(&self) -> usize {
        self.masses.iter().take_while(|&&m| m > 0.0).count()
    }

    /// Masses padded with zeros (or truncated) to length `k`.
    pub fn padded(&self, k: usize) -> Vec<f64> {
        let mut m = self.masses.clone();
        m.resize(k, 0.0);
        m
    }

    pub fn is_unit(&self) -> bool {
        (self.masses[0] - 1.0).abs() <= SUM_TOL
    }
}

impl From<RankedMassPartition> for Vec<f64> {
    fn from(s: RankedMassPartition) -> Self {
        s.masses
    }
}

/// `ρ_s(π)` from block sizes: the sum over injective colorings of the
/// blocks of `Π sⱼ^{#block}`.
pub fn paintbox_prob_sizes(s: &RankedMassPartition, sizes: &[usize]) -> f64 {
    let masses: Vec<f64> = s.masses.iter().copied().filter(|&m| m > 0.0).collect();
    if sizes.len() > masses.len() {
        return 0.0;
    }
    fn rec(i: usize, sizes: &[usize], masses: &[f64], used: &mut [bool]) -> f64 {
        if i == sizes.len() {
            return 1.0;
        }
        let mut total = 0.0;
        for j in 0..masses.len() {
            if !used[j] {
                used[j] = true;
                total += masses[j].powi(sizes[i] as i32) * rec(i + 1, sizes, masses, used);
                used[j] = false;
            }
        }
        total
    }
    rec(0, sizes, &masses, &mut vec![false; masses.len()])
}

/// Probability of `pi` under the `s`-paintbox on its ground set.
pub fn paintbox_prob(s: &RankedMassPartition, pi: &SetPartition) -> f64 {
    paintbox_prob_sizes(s, &pi.block_sizes())
}

/// Colors each label independently with `P(color j) = sⱼ`.
pub fn paintbox_sample_on<R: Rng + ?Sized>(s: &RankedMassPartition, ground: &[Label], rng: &mut R) -> SetPartition {
    let positive: Vec<f64> = s.masses.iter().copied().filter(|&m| m > 0.0).collect();
    if positive.len() == 1 {
        return SetPartition::from_colors(ground, &vec![0; ground.len()]);
    }
    let colors = WeightedIndex::new(&positive).expect("positive masses");
    let draws: Vec<usize> = ground.iter().map(|_| colors.sample(rng)).collect();
    SetPartition::from_colors(ground, &draws)
}

/// Colors `ground` by `masses` (zeros allowed) and returns one cell per
/// color, in color order. Cells of unused colors are empty.
pub fn paintbox_cells<R: Rng + ?Sized>(masses: &[f64], ground: &[Label], rng: &mut R) -> Vec<Vec<Label>> {
    let mut cells = vec![Vec::new(); masses.len()];
    let colors = WeightedIndex::new(masses).expect("masses have positive total");
    for &x in ground {
        cells[colors.sample(rng)].push(x);
    }
    cells
}

/// Paintbox partition of `[n]`.
pub fn paintbox_sample<R: Rng + ?Sized>(s: &RankedMassPartition, n: usize, rng: &mut R) -> SetPartition {
    let ground: Vec<Label> = (1..=n as Label).collect();
    paintbox_sample_on(s, &ground, rng)
}

/// A probability measure `ν` on the ranked simplex.
#[derive(Clone, Debug, PartialEq)]
pub enum MixtureMeasure {
    FiniteSupport {
        atoms: Vec<(RankedMassPartition, f64)>,
    },
    /// Ranked `Dirichlet(β, …, β)` on `k` coordinates.
    SymmetricDirichlet {
        k: usize,
        beta: f64,
    },
}

impl MixtureMeasure {
    pub fn finite(atoms: Vec<(RankedMassPartition, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("no atoms".into()));
        }
        if atoms.iter().any(|(_, w)| !w.is_finite() || *w <= 0.0) {
            return Err(Error::InvalidMeasure("weights must be positive".into()));
        }
        let total: f64 = atoms.iter().map(|(_, w)| w).sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}")));
        }
        Ok(MixtureMeasure::FiniteSupport { atoms })
    }

    pub fn point(s: RankedMassPartition) -> Self {
        MixtureMeasure::FiniteSupport { atoms: vec![(s, 1.0)] }
    }

    pub fn dirichlet(k: usize, beta: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidMeasure("dirichlet needs k >= 1".into()));
        }
        if !beta.is_finite() || beta <= 0.0 {
            return Err(Error::InvalidMeasure(format!("dirichlet needs beta > 0, got {beta}")));
        }
        Ok(MixtureMeasure::SymmetricDirichlet { k, beta })
    }

    /// Largest number of positive masses any `s` in the support can have.
    pub fn dim(&self) -> usize {
        match self {
            MixtureMeasure::FiniteSupport { atoms } => atoms.iter().map(|(s, _)| s.support()).max().unwrap_or(1),
            MixtureMeasure::SymmetricDirichlet { k, .. } => *k,
        }
    }

    /// All mass on `(1, 0, …, 0)`.
    pub fn is_degenerate(&self) -> bool {
        match self {
            MixtureMeasure::FiniteSupport { atoms } => atoms.iter().all(|(s, _)| s.is_unit()),
            MixtureMeasure::SymmetricDirichlet { k, .. } => *k == 1,
        }
    }

    /// `ρ_ν` of any partition with the given block sizes.
    pub fn prob_sizes(&self, sizes: &[usize]) -> f64 {
        match self {
            MixtureMeasure::FiniteSupport { atoms } => {
                atoms.iter().map(|(s, w)| w * paintbox_prob_sizes(s, sizes)).sum()
            }
            MixtureMeasure::SymmetricDirichlet { k, beta } => {
                let r = sizes.len();
                if r > *k {
                    return 0.0;
                }
                let n: usize = sizes.iter().sum();
                let mut log_p = ln_falling(*k, r);
                for &m in sizes {
                    log_p += ln_rising(*beta, m);
                }
                log_p -= ln_rising(*k as f64 * beta, n);
                log_p.exp()
            }
        }
    }

    pub fn sample_masses<R: Rng + ?Sized>(&self, rng: &mut R) -> RankedMassPartition {
        match self {
            MixtureMeasure::FiniteSupport { atoms } => {
                if atoms.len() == 1 {
                    return atoms[0].0.clone();
                }
                let pick = WeightedIndex::new(atoms.iter().map(|(_, w)| *w)).expect("positive weights");
                atoms[pick.sample(rng)].0.clone()
            }
            MixtureMeasure::SymmetricDirichlet { k, beta } => {
                let gamma = Gamma::new(*beta, 1.0).expect("beta > 0");
                loop {
                    let g: Vec<f64> = (0..*k).map(|_| gamma.sample(rng)).collect();
                    let total: f64 = g.iter().sum();
                    // tiny beta can underflow every coordinate to zero
                    if total > 0.0 && total.is_finite() {
                        let mut m: Vec<f64> = g.iter().map(|x| x / total).collect();
                        m.sort_unstable_by(|a, b| b.total_cmp(a));
                        let fix: f64 = m.iter().sum();
                        m.iter_mut().for_each(|x| *x /= fix);
                        return RankedMassPartition { masses: m };
                    }
                }
            }
        }
    }

    /// `s ~ ν`, then the `s`-paintbox on `ground`.
    pub fn sample_partition<R: Rng + ?Sized>(&self, ground: &[Label], rng: &mut R) -> SetPartition {
        let s = self.sample_masses(rng);
        paintbox_sample_on(&s, ground, rng)
    }
}

/// `ln(k! / (k - r)!)`.
pub fn ln_falling(k: usize, r: usize) -> f64 {
    ((k - r + 1)..=k).map(|x| (x as f64).ln()).sum()
}

/// `ln (x)↑m = ln x(x+1)…(x+m-1)`.
pub fn ln_rising(x: f64, m: usize) -> f64 {
    (0..m).map(|i| (x + i as f64).ln()).sum()
}

/// `ρ_ν(π)`.
pub fn rho_nu_prob(nu: &MixtureMeasure, pi: &SetPartition) -> f64 {
    nu.prob_sizes(&pi.block_sizes())
}

/// `s ~ ν`, then the `s`-paintbox on `[n]`.
pub fn rho_nu_sample<R: Rng + ?Sized>(nu: &MixtureMeasure, n: usize, rng: &mut R) -> SetPartition {
    let ground: Vec<Label> = (1..=n as Label).collect();
    nu.sample_partition(&ground, rng)
}

/// JSON form of `ν`:
/// `{"type":"finite","atoms":[{"s":[…],"w":…}]}` or
/// `{"type":"dirichlet","k":K,"beta":B}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum MixtureSpec {
    Finite { atoms: Vec<AtomSpec> },
    Dirichlet { k: usize, beta: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub s: Vec<f64>,
    pub w: f64,
}

impl TryFrom<MixtureSpec> for MixtureMeasure {
    type Error = Error;
    fn try_from(spec: MixtureSpec) -> Result<Self> {
        match spec {
            MixtureSpec::Finite { atoms } => MixtureMeasure::finite(
                atoms
                    .into_iter()
                    .map(|a| Ok((RankedMassPartition::from_unranked(a.s)?, a.w)))
                    .collect::<Result<_>>()?,
            ),
            MixtureSpec::Dirichlet { k, beta } => MixtureMeasure::dirichlet(k, beta),
        }
    }
}

impl From<&MixtureMeasure> for MixtureSpec {
    fn from(nu: &MixtureMeasure) -> Self {
        match nu {
            MixtureMeasure::FiniteSupport { atoms } => MixtureSpec::Finite {
                atoms: atoms
                    .iter()
                    .map(|(s, w)| AtomSpec {
                        s: s.masses.clone(),
                        w: *w,
                    })
                    .collect(),
            },
            MixtureMeasure::SymmetricDirichlet { k, beta } => MixtureSpec::Dirichlet { k: *k, beta: *beta },
        }
    }
}

impl MixtureMeasure {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: MixtureSpec = serde_json::from_str(text)?;
        spec.try_into()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&MixtureSpec::from(self)).expect("plain data")
    }
}

/// A probability measure on finitely many labels.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelMeasure {
    atoms: Vec<(Label, f64)>,
}

impl LabelMeasure {
    pub fn new(atoms: Vec<(Label, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidLabelMeasure("no atoms".into()));
        }
        if atoms.iter().any(|(_, p)| !p.is_finite() || *p <= 0.0) {
            return Err(Error::InvalidLabelMeasure("probabilities must be positive".into()));
        }
        let mut labels: Vec<Label> = atoms.iter().map(|(l, _)| *l).collect();
        labels.sort_unstable();
        if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidLabelMeasure(format!("label {} repeated", w[0])));
        }
        let total: f64 = atoms.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidLabelMeasure(format!("probabilities sum to {total}")));
        }
        Ok(LabelMeasure { atoms })
    }

    /// Uniform on `{1, …, k}`.
    pub fn uniform(k: usize) -> Self {
        LabelMeasure {
            atoms: (1..=k as Label).map(|l| (l, 1.0 / k as f64)).collect(),
        }
    }

    pub fn atoms(&self) -> &[(Label, f64)] {
        &self.atoms
    }

    pub fn support_size(&self) -> usize {
        self.atoms.len()
    }
}

/// Draws `count` distinct labels without replacement, each draw
/// proportional to the remaining mass (a size-biased ordering).
pub fn size_biased_labels(mu: &LabelMeasure, count: usize, rng: &mut dyn RngCore) -> Result<Vec<Label>> {
    if count > mu.atoms.len() {
        return Err(Error::LabelSupportExhausted {
            requested: count,
            available: mu.atoms.len(),
        });
    }
    let mut remaining = mu.atoms.clone();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let i = if remaining.len() == 1 {
            0
        } else {
            WeightedIndex::new(remaining.iter().map(|(_, p)| *p))
                .expect("positive remaining mass")
                .sample(rng)
        };
        out.push(remaining.swap_remove(i).0);
    }
    Ok(out)
}

/// Uniform permutation of `0..k` as an index vector.
pub fn uniform_permutation<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<usize> {
    let mut p: Vec<usize> = (0..k).collect();
    p.shuffle(rng);
    p
}
