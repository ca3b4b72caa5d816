use serde::{Deserialize, Serialize};

use crate::ab_kernel::AbKernel;
use crate::combinatorics::{enumerate_trees, FragmentationTree, SetPartition};
use crate::error::{Error, Result};
use crate::paintbox::MixtureMeasure;

pub const PERMANENT_CAP: usize = 10;

/// `Σ_σ α^{c(σ)} Πᵢ A_{i,σ(i)}` with `c(σ)` the number of cycles.
pub fn alpha_permanent(a: &[Vec<f64>], alpha: f64) -> Result<f64> {
    let n = a.len();
    if n > PERMANENT_CAP {
        return Err(Error::PermanentTooLarge {
            size: n,
            cap: PERMANENT_CAP,
        });
    }
    if let Some(row) = a.iter().find(|r| r.len() != n) {
        return Err(Error::InvalidParameter(format!(
            "row of length {} in a {n}×{n} matrix",
            row.len()
        )));
    }
    fn cycles(perm: &[usize]) -> i32 {
        let mut seen = vec![false; perm.len()];
        let mut c = 0;
        for s in 0..perm.len() {
            if !seen[s] {
                c += 1;
                let mut i = s;
                while !seen[i] {
                    seen[i] = true;
                    i = perm[i];
                }
            }
        }
        c
    }
    fn rec(i: usize, prod: f64, a: &[Vec<f64>], alpha: f64, perm: &mut Vec<usize>, used: &mut [bool]) -> f64 {
        if i == a.len() {
            return prod * alpha.powi(cycles(perm));
        }
        let mut total = 0.0;
        for j in 0..a.len() {
            if !used[j] && a[i][j] != 0.0 {
                used[j] = true;
                perm.push(j);
                total += rec(i + 1, prod * a[i][j], a, alpha, perm, used);
                perm.pop();
                used[j] = false;
            }
        }
        total
    }
    Ok(rec(0, 1.0, a, alpha, &mut Vec::with_capacity(n), &mut vec![false; n]))
}

/// How a partition becomes a 0-1 matrix for the α-permanent formula.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixConvention {
    /// `B_ij = 1` iff `i` and `j` share a block.
    #[default]
    CoMembership,
    /// Rows are elements, columns are blocks, padded with zero columns to a
    /// square matrix.
    Incidence,
}

pub fn partition_matrix(p: &SetPartition, convention: MatrixConvention) -> Vec<Vec<f64>> {
    let ground = p.ground();
    let g = ground.as_slice();
    let n = g.len();
    let block: Vec<usize> = g.iter().map(|&x| p.block_index_of(x).expect("x in ground")).collect();
    match convention {
        MatrixConvention::CoMembership => (0..n)
            .map(|i| (0..n).map(|j| if block[i] == block[j] { 1.0 } else { 0.0 }).collect())
            .collect(),
        MatrixConvention::Incidence => (0..n)
            .map(|i| (0..n).map(|j| if block[i] == j { 1.0 } else { 0.0 }).collect())
            .collect(),
    }
}

/// The closed-form binary-tree kernel
/// `Π_b 2 per_{α/2}(B ∧ B') / (per_α B − 2 per_{α/2} B)` over the
/// non-singleton vertices `b` of `t'`, with `B = Π_{t|b}` and `B' = Π_{t'|b}`.
pub fn ab2_alpha_prob(
    t: &FragmentationTree,
    t_next: &FragmentationTree,
    alpha: f64,
    convention: MatrixConvention,
) -> Result<f64> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    if t.ground() != t_next.ground() {
        return Err(Error::GroundMismatch);
    }
    for tree in [t, t_next] {
        if tree.degree() > 2 {
            return Err(Error::DegreeTooLarge(tree.degree()));
        }
    }
    let mut q = 1.0;
    for i in t_next.internal_vertices() {
        let b = t.restricted_root_partition(t_next.vertex(i));
        let b_next = t_next.children_partition(i);
        let per = |p: &SetPartition, a: f64| alpha_permanent(&partition_matrix(p, convention), a);
        let den = per(&b, alpha)? - 2.0 * per(&b, alpha / 2.0)?;
        if den <= 0.0 {
            return Err(Error::NonPositiveDenominator(den));
        }
        q *= 2.0 * per(&b.meet(&b_next)?, alpha / 2.0)? / den;
    }
    Ok(q)
}

/// Comparison of the closed form with the `CP(ν)` kernel for
/// `ν = SymmetricDirichlet(2, α/2)` over all pairs of binary trees of `[n]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlphaCrossCheck {
    pub alpha: f64,
    pub n: usize,
    pub convention: MatrixConvention,
    pub pairs: usize,
    /// `None` when the closed form could not be evaluated.
    pub max_abs_diff: Option<f64>,
    pub worst_pair: Option<(FragmentationTree, FragmentationTree)>,
    pub error: Option<String>,
}

impl AlphaCrossCheck {
    pub fn agrees(&self, tol: f64) -> bool {
        self.max_abs_diff.is_some_and(|d| d <= tol)
    }
}

pub fn alpha_cross_check(n: usize, alpha: f64, convention: MatrixConvention) -> Result<AlphaCrossCheck> {
    let ab = AbKernel::cp(MixtureMeasure::dirichlet(2, alpha / 2.0)?, 2)?;
    let trees = enumerate_trees(n, Some(2));
    let mut report = AlphaCrossCheck {
        alpha,
        n,
        convention,
        pairs: trees.len() * trees.len(),
        max_abs_diff: Some(0.0),
        worst_pair: None,
        error: None,
    };
    for a in &trees {
        for b in &trees {
            let exact = ab.prob(a, b)?;
            match ab2_alpha_prob(a, b, alpha, convention) {
                Ok(v) => {
                    let d = (v - exact).abs();
                    if report.max_abs_diff.is_some_and(|m| d > m) {
                        report.max_abs_diff = Some(d);
                        report.worst_pair = Some((a.clone(), b.clone()));
                    }
                }
                Err(e) => {
                    report.max_abs_diff = None;
                    report.worst_pair = Some((a.clone(), b.clone()));
                    report.error = Some(e.to_string());
                    return Ok(report);
                }
            }
        }
    }
    Ok(report)
}
