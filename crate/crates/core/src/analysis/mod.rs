//! Exact oracles over enumerated state spaces: stationary laws, property
//! suites, α-permanents and sampling statistics.

mod matrix;
mod permanent;
mod report;
mod stationary;
pub mod stats;

pub use matrix::StochasticMatrix;
pub use permanent::{
    ab2_alpha_prob, alpha_cross_check, alpha_permanent, partition_matrix, AlphaCrossCheck, MatrixConvention,
    PERMANENT_CAP,
};
pub use report::{property_report, run_suite, CheckResult, PropertyReport, Suite};
pub use stationary::{period, stationary, stationary_residual};

use crate::combinatorics::SetPartition;
use crate::error::Result;

/// Coarsest common refinement of two partitions of the same ground set.
pub fn meet(a: &SetPartition, b: &SetPartition) -> Result<SetPartition> {
    a.meet(b)
}
