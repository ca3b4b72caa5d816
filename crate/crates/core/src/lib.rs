//! Ancestral branching (AB) and cut-and-paste (CP) Markov chains on set
//! partitions and fragmentation trees.
//!
//! The crate provides exact transition probabilities for both families,
//! samplers that realise them, the associated mass-fragmentation and
//! weighted-tree chains, and brute-force checkers for exchangeability,
//! consistency and stationarity on small ground sets.

pub mod ab_kernel;
pub mod analysis;
pub mod combinatorics;
pub mod cp_kernel;
pub mod error;
pub mod io;
pub mod mass_frag;
pub mod paintbox;
pub mod streams;
pub mod weighted_trees;

pub use combinatorics::{FragmentationTree, GenealogicalIndex, GroundSet, Label, SetPartition};
pub use error::{Error, Result};
