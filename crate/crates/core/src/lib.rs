//! Multiple-instance active learning.
//!
//! The learner holds a pool of weakly labeled bags and repeatedly asks an
//! oracle for every instance label of one positive bag, retraining a
//! cost-sensitive SVM after each answer. Bag selection is pluggable
//! ([`strategy`]): random positive bags, simple margin, aggregated
//! informativeness, and cluster-based aggregative sampling.

pub mod cluster;
pub mod data;
pub mod error;
pub mod eval;
pub mod experiment;
mod rng;
pub mod session;
pub mod strategy;
pub mod svm;

pub use error::{Error, Result};
