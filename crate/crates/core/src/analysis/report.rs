use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::{stationary, stationary_residual, StochasticMatrix};
use crate::ab_kernel::AbKernel;
use crate::combinatorics::{enumerate_partitions, enumerate_trees, partition_fiber, permutations, tree_fiber, Label};
use crate::cp_kernel::{kernel_matrix, CpKernel, PartitionKernel};
use crate::error::{Error, Result};
use crate::paintbox::MixtureMeasure;

/// Named invariant suites.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    RowSums,
    Exchangeability,
    Consistency,
    Stationarity,
    RecursionEquiv,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::RowSums,
        Suite::Exchangeability,
        Suite::Consistency,
        Suite::Stationarity,
        Suite::RecursionEquiv,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::RowSums => "row_sums",
            Suite::Exchangeability => "exchangeability",
            Suite::Consistency => "consistency",
            Suite::Stationarity => "stationarity",
            Suite::RecursionEquiv => "recursion_equiv",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown suite {s:?}")))
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One exhaustive check within a suite.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub tolerance: f64,
    pub max_violation: f64,
    pub passed: bool,
    pub counterexample: Option<String>,
}

impl CheckResult {
    fn new(name: &str, tolerance: f64) -> Self {
        CheckResult {
            name: name.to_string(),
            tolerance,
            max_violation: 0.0,
            passed: true,
            counterexample: None,
        }
    }

    /// Records a violation; the first one over tolerance becomes the
    /// counterexample.
    fn observe(&mut self, violation: f64, witness: impl FnOnce() -> String) {
        let violation = if violation.is_nan() { f64::INFINITY } else { violation };
        self.max_violation = self.max_violation.max(violation);
        if violation > self.tolerance && self.passed {
            self.passed = false;
            self.counterexample = Some(witness());
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyReport {
    pub property: String,
    pub n: usize,
    pub kernel: String,
    pub passed: bool,
    pub max_violation: f64,
    pub counterexample: Option<String>,
    pub checks: Vec<CheckResult>,
}

impl PropertyReport {
    fn from_checks(suite: Suite, n: usize, kernel: String, checks: Vec<CheckResult>) -> Self {
        let failed = checks.iter().find(|c| !c.passed);
        PropertyReport {
            property: suite.name().to_string(),
            n,
            kernel,
            passed: failed.is_none(),
            max_violation: checks.iter().map(|c| c.max_violation).fold(0.0, f64::max),
            counterexample: failed.and_then(|c| c.counterexample.as_ref().map(|w| format!("{}: {w}", c.name))),
            checks,
        }
    }
}

impl fmt::Display for PropertyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} n={} [{}] max violation {:.3e}",
            self.property,
            self.n,
            if self.passed { "PASS" } else { "FAIL" },
            self.max_violation
        )?;
        for c in &self.checks {
            writeln!(
                f,
                "  {:<32} {} {:.3e} (tol {:.0e})",
                c.name,
                if c.passed { "ok  " } else { "FAIL" },
                c.max_violation,
                c.tolerance
            )?;
            if let Some(w) = &c.counterexample {
                writeln!(f, "    counterexample: {w}")?;
            }
        }
        Ok(())
    }
}

const ROW_TOL: f64 = 1e-9;
const EXCHANGE_TOL: f64 = 1e-12;
const CONSISTENCY_TOL: f64 = 1e-9;
const RESIDUAL_TOL: f64 = 1e-10;
const INVARIANCE_TOL: f64 = 1e-9;
const RECURSION_TOL: f64 = 1e-12;

fn perm_str(p: &[Label]) -> String {
    format!("{p:?}")
}

/// Runs `suite` for the `CP(ν)` kernel on `𝒫^(k)` and its AB kernel.
pub fn property_report(suite: Suite, n: usize, k: usize, nu: &MixtureMeasure) -> Result<PropertyReport> {
    run_suite(suite, CpKernel::new(nu.clone(), k)?, n)
}

/// Runs `suite` exhaustively on `[n]` for any partition kernel family and the
/// AB kernel built on it. Failures are reported, not returned as errors.
pub fn run_suite<K: PartitionKernel>(suite: Suite, kernel: K, n: usize) -> Result<PropertyReport> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let k = kernel.max_blocks();
    let description = kernel.describe();
    let ab = AbKernel::new(kernel);
    let checks = match suite {
        Suite::RowSums => {
            let mut part = CheckResult::new("partition rows sum to 1", ROW_TOL);
            for b in enumerate_partitions(n, k) {
                let total: f64 = enumerate_partitions(n, k).iter().map(|c| ab.base().prob(&b, c)).sum();
                part.observe((total - 1.0).abs(), || format!("from {b}: sum {total}"));
            }
            let mut tree = CheckResult::new("tree rows sum to 1", ROW_TOL);
            let trees = enumerate_trees(n, k);
            for t in &trees {
                let total = trees.iter().map(|u| ab.prob(t, u)).sum::<Result<f64>>()?;
                tree.observe((total - 1.0).abs(), || format!("from {t}: sum {total}"));
            }
            vec![part, tree]
        }
        Suite::Exchangeability => {
            let perms = permutations(n);
            let mut part = CheckResult::new("partition kernel exchangeable", EXCHANGE_TOL);
            let states = enumerate_partitions(n, k);
            for a in &states {
                for b in &states {
                    let p = ab.base().prob(a, b);
                    for s in &perms {
                        let q = ab.base().prob(&a.permute(s), &b.permute(s));
                        part.observe((p - q).abs(), || {
                            format!("sigma {} from {a} to {b}: {p} vs {q}", perm_str(s))
                        });
                    }
                }
            }
            let mut tree = CheckResult::new("tree kernel exchangeable", EXCHANGE_TOL);
            let trees = enumerate_trees(n, k);
            for a in &trees {
                for b in &trees {
                    let p = ab.prob(a, b)?;
                    for s in &perms {
                        let q = ab.prob(&a.permute(s), &b.permute(s))?;
                        tree.observe((p - q).abs(), || {
                            format!("sigma {} from {a} to {b}: {p} vs {q}", perm_str(s))
                        });
                    }
                }
            }
            vec![part, tree]
        }
        Suite::Consistency => {
            let x = n as Label + 1;
            let mut part = CheckResult::new("partition kernel consistent", CONSISTENCY_TOL);
            let states = enumerate_partitions(n, k);
            for b in &states {
                for b_star in partition_fiber(b, x, k) {
                    for c in &states {
                        let lifted: f64 = partition_fiber(c, x, k)
                            .iter()
                            .map(|c_star| ab.base().prob(&b_star, c_star))
                            .sum();
                        let p = ab.base().prob(b, c);
                        part.observe((lifted - p).abs(), || {
                            format!("from {b_star} over fiber of {c}: {lifted} vs {p}")
                        });
                    }
                }
            }
            let mut tree = CheckResult::new("tree kernel consistent", CONSISTENCY_TOL);
            let trees = enumerate_trees(n, k);
            for t in &trees {
                for t_star in tree_fiber(t, x, k) {
                    for u in &trees {
                        let lifted = tree_fiber(u, x, k)
                            .iter()
                            .map(|u_star| ab.prob(&t_star, u_star))
                            .sum::<Result<f64>>()?;
                        let p = ab.prob(t, u)?;
                        tree.observe((lifted - p).abs(), || {
                            format!("from {t_star} over fiber of {u}: {lifted} vs {p}")
                        });
                    }
                }
            }
            vec![part, tree]
        }
        Suite::Stationarity => {
            let perms = permutations(n);
            let mut checks = Vec::new();
            let pm = kernel_matrix(ab.base(), n)?;
            checks.extend(stationarity_checks("partition", &pm, &perms, |p, s| p.permute(s)));
            let tm = StochasticMatrix::try_from_fn(enumerate_trees(n, k), |a, b| ab.prob(a, b))?;
            checks.extend(stationarity_checks("tree", &tm, &perms, |t, s| t.permute(s)));
            checks
        }
        Suite::RecursionEquiv => {
            let mut tree = CheckResult::new("product form equals recursion", RECURSION_TOL);
            let trees = enumerate_trees(n, k);
            for a in &trees {
                for b in &trees {
                    let p = ab.prob(a, b)?;
                    let r = ab.prob_recursive(a, b)?;
                    tree.observe((p - r).abs(), || format!("from {a} to {b}: {p} vs {r}"));
                }
            }
            vec![tree]
        }
    };
    Ok(PropertyReport::from_checks(suite, n, description, checks))
}

fn stationarity_checks<S: Eq + std::hash::Hash + fmt::Display>(
    level: &str,
    m: &StochasticMatrix<S>,
    perms: &[Vec<Label>],
    act: impl Fn(&S, &[Label]) -> S,
) -> Vec<CheckResult> {
    let mut residual = CheckResult::new(&format!("{level} stationary residual"), RESIDUAL_TOL);
    let mut invariance = CheckResult::new(&format!("{level} stationary law exchangeable"), INVARIANCE_TOL);
    match stationary(m) {
        Ok(rho) => {
            let r = stationary_residual(m, &rho);
            residual.observe(r, || format!("residual {r}"));
            let index = m.index();
            for s in perms {
                for (i, state) in m.states().iter().enumerate() {
                    let j = index[&act(state, s)];
                    let d = (rho[i] - rho[j]).abs();
                    invariance.observe(d, || {
                        format!("sigma {} at {state}: {} vs {}", perm_str(s), rho[i], rho[j])
                    });
                }
            }
        }
        Err(e) => {
            residual.observe(f64::INFINITY, || e.to_string());
            invariance.observe(f64::INFINITY, || e.to_string());
        }
    }
    vec![residual, invariance]
}
