use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ROW_TOL: f64 = 1e-9;

/// A row-stochastic matrix indexed by an ordered list of states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StochasticMatrix<S> {
    states: Vec<S>,
    rows: Vec<Vec<f64>>,
}

impl<S> StochasticMatrix<S> {
    pub fn new(states: Vec<S>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = states.len();
        if rows.len() != n {
            return Err(Error::NotStochastic(format!("{} states but {} rows", n, rows.len())));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::NotStochastic(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            if let Some(j) = row.iter().position(|&x| !x.is_finite() || x < 0.0) {
                return Err(Error::NotStochastic(format!("entry ({i},{j}) = {}", row[j])));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > ROW_TOL {
                return Err(Error::NotStochastic(format!("row {i} sums to {total}")));
            }
        }
        Ok(StochasticMatrix { states, rows })
    }

    /// Tabulates `f(from, to)` over every ordered pair of states.
    pub fn from_fn(states: Vec<S>, f: impl Fn(&S, &S) -> f64) -> Result<Self> {
        let rows = states
            .iter()
            .map(|a| states.iter().map(|b| f(a, b)).collect())
            .collect();
        StochasticMatrix::new(states, rows)
    }

    /// Like [`from_fn`](Self::from_fn) for a fallible evaluator.
    pub fn try_from_fn(states: Vec<S>, f: impl Fn(&S, &S) -> Result<f64>) -> Result<Self> {
        let rows = states
            .iter()
            .map(|a| states.iter().map(|b| f(a, b)).collect::<Result<Vec<f64>>>())
            .collect::<Result<Vec<_>>>()?;
        StochasticMatrix::new(states, rows)
    }

    pub fn states(&self) -> &[S] {
        &self.states
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i][j]
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Largest deviation of a row sum from one.
    pub fn max_row_error(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `x ↦ xM` for a row vector `x`.
    pub fn left_mul(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for (xi, row) in x.iter().zip(&self.rows) {
            for (o, m) in out.iter_mut().zip(row) {
                *o += xi * m;
            }
        }
        out
    }
}

impl<S: Eq + Hash> StochasticMatrix<S> {
    /// State to index lookup table.
    pub fn index(&self) -> HashMap<&S, usize> {
        self.states.iter().enumerate().map(|(i, s)| (s, i)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_rows() {
        assert!(StochasticMatrix::new(vec![0, 1], vec![vec![0.5, 0.5], vec![1.0, 0.0]]).is_ok());
        assert!(StochasticMatrix::new(vec![0, 1], vec![vec![0.5, 0.4], vec![1.0, 0.0]]).is_err());
        assert!(StochasticMatrix::new(vec![0, 1], vec![vec![1.5, -0.5], vec![1.0, 0.0]]).is_err());
        assert!(StochasticMatrix::new(vec![0], vec![vec![1.0], vec![1.0]]).is_err());
    }

    #[test]
    fn json_shape() {
        let m = StochasticMatrix::new(vec!["a", "b"], vec![vec![0.5, 0.5], vec![0.0, 1.0]]).unwrap();
        assert_eq!(
            serde_json::to_string(&m).unwrap(),
            r#"{"states":["a","b"],"rows":[[0.5,0.5],[0.0,1.0]]}"#
        );
    }
}
