//! Pattern profiles of permutations and their representation-theoretic
//! decomposition.
//!
//! The crate counts length-`k` patterns in a permutation, projects the
//! resulting profile onto the isotypic blocks of `S_k`, and computes exact
//! and Monte Carlo moments of those projections under the uniform law.
//! Classical rank statistics are recovered as fixed linear functionals.

pub mod combinat;
pub mod error;
pub mod linalg;
pub mod moments;
pub mod montecarlo;
pub mod perm;
pub mod poly;
pub mod qfield;
pub mod rep;
pub mod stats;

pub use error::{Error, Result};
pub use perm::{profile, Permutation, Profile};
pub use qfield::QNum;
