//! Reference implementations for testing: a projected-gradient QP solver,
//! exhaustive Ward clustering, the bag selection rules written out directly,
//! counting forms of the ranking metrics and t-distribution quadrature.
//! Everything here favors obviousness over speed.

pub mod checks;
pub mod qp;
pub mod selection;
pub mod stats;
pub mod ward;
