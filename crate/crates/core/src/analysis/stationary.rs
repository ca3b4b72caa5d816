use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use super::StochasticMatrix;
use crate::error::{Error, Result};

const RESIDUAL_TOL: f64 = 1e-10;
const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITER: usize = 1_000_000;

fn reachable(n: usize, edge: impl Fn(usize, usize) -> bool) -> Vec<Option<usize>> {
    let mut level = vec![None; n];
    level[0] = Some(0);
    let mut queue = VecDeque::from([0]);
    while let Some(i) = queue.pop_front() {
        for j in 0..n {
            if level[j].is_none() && edge(i, j) {
                level[j] = Some(level[i].unwrap() + 1);
                queue.push_back(j);
            }
        }
    }
    level
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Period of an irreducible chain, or [`Error::NotIrreducible`].
pub fn period<S>(m: &StochasticMatrix<S>) -> Result<usize> {
    let n = m.len();
    if n == 0 {
        return Err(Error::NotStochastic("empty matrix".into()));
    }
    let forward = reachable(n, |i, j| m.get(i, j) > 0.0);
    let backward = reachable(n, |i, j| m.get(j, i) > 0.0);
    if forward.iter().chain(&backward).any(Option::is_none) {
        return Err(Error::NotIrreducible);
    }
    // every edge i → j closes a cycle whose length differs from
    // level(i) + 1 − level(j) by a multiple of the period
    let level: Vec<usize> = forward.into_iter().map(Option::unwrap).collect();
    let mut d = 0;
    for i in 0..n {
        for j in 0..n {
            if m.get(i, j) > 0.0 {
                d = gcd(d, (level[i] + 1).abs_diff(level[j]));
            }
        }
    }
    Ok(d)
}

/// `‖ρM − ρ‖₁`.
pub fn stationary_residual<S>(m: &StochasticMatrix<S>, rho: &[f64]) -> f64 {
    m.left_mul(rho).iter().zip(rho).map(|(a, b)| (a - b).abs()).sum()
}

/// The unique stationary law of an irreducible aperiodic matrix.
///
/// Solves `(Mᵀ − I)ρ = 0` with the last equation replaced by `Σρ = 1`,
/// falling back to power iteration when the solve is not accurate enough.
pub fn stationary<S>(m: &StochasticMatrix<S>) -> Result<Vec<f64>> {
    let d = period(m)?;
    if d != 1 {
        return Err(Error::Periodic(d));
    }
    let n = m.len();
    let mut a = DMatrix::from_fn(n, n, |i, j| m.get(j, i) - if i == j { 1.0 } else { 0.0 });
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    if let Some(x) = a.lu().solve(&b) {
        let rho: Vec<f64> = x.iter().map(|&v| v.max(0.0)).collect();
        let total: f64 = rho.iter().sum();
        let rho: Vec<f64> = rho.iter().map(|v| v / total).collect();
        if stationary_residual(m, &rho) <= RESIDUAL_TOL {
            return Ok(rho);
        }
    }
    let mut rho = vec![1.0 / n as f64; n];
    for _ in 0..POWER_MAX_ITER {
        let next = m.left_mul(&rho);
        let change: f64 = next.iter().zip(&rho).map(|(a, b)| (a - b).abs()).sum();
        rho = next;
        if change < POWER_TOL {
            return Ok(rho);
        }
    }
    Err(Error::SolveFailed(format!(
        "power iteration residual {} after {POWER_MAX_ITER} steps",
        stationary_residual(m, &rho)
    )))
}
