use thiserror::Error;

use crate::combinatorics::Label;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty block")]
    EmptyBlock,
    #[error("label {0} appears in more than one block")]
    OverlappingBlocks(Label),
    #[error("empty ground set")]
    EmptyGround,
    #[error("label {0} is not in the ground set")]
    NotInGround(Label),
    #[error("ground sets differ")]
    GroundMismatch,
    #[error("vertex {0:?} is not contained in the root")]
    NotInRoot(Vec<Label>),
    #[error("vertices are not laminar: {0:?} crosses another vertex")]
    NotLaminar(Vec<Label>),
    #[error("missing singleton vertex {{{0}}}")]
    MissingSingleton(Label),
    #[error("tree has no vertices")]
    EmptyTree,
    #[error("a single-element ground set has no root partition")]
    NoRootPartition,
    #[error("map is not defined on label {0}")]
    MapNotTotal(Label),
    #[error("map sends two labels to {0}")]
    MapNotInjective(Label),
    #[error("invalid mass partition: {0}")]
    InvalidMass(String),
    #[error("dissipative mass partition (sum {0}) is not supported")]
    Dissipative(f64),
    #[error("invalid mixture measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid label measure: {0}")]
    InvalidLabelMeasure(String),
    #[error("requested {requested} labels but the measure has {available} atoms")]
    LabelSupportExhausted { requested: usize, available: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid driver: {0}")]
    InvalidDriver(String),
    #[error("kernel puts all mass on the one-block partition of {0:?}")]
    DegenerateKernel(Vec<Label>),
    #[error("{0} consecutive one-block draws; kernel is near-degenerate")]
    RejectionCapExceeded(usize),
    #[error("state space of size {size} exceeds cap {cap}")]
    StateSpaceTooLarge { size: usize, cap: usize },
    #[error("matrix is not stochastic: {0}")]
    NotStochastic(String),
    #[error("chain is not irreducible")]
    NotIrreducible,
    #[error("chain is periodic with period {0}")]
    Periodic(usize),
    #[error("stationary solve failed: {0}")]
    SolveFailed(String),
    #[error("matrix of size {size} exceeds the permanent cap {cap}")]
    PermanentTooLarge { size: usize, cap: usize },
    #[error("non-positive denominator {0} in the alpha-permanent ratio")]
    NonPositiveDenominator(f64),
    #[error("tree has a vertex with {0} children, above the bound")]
    DegreeTooLarge(usize),
    #[error("newick parse error: {0}")]
    Newick(String),
    #[error("json error: {0}")]
    Json(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
