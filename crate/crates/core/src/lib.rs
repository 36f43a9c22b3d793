//! Moment dual of the two-colony stepping stone model with Ξ-resampling.

pub mod partition;
pub mod rational;
pub mod simplex;
pub mod dyadic;
pub mod mutation;
pub mod moments;
pub mod poly;
pub mod reversibility;
pub mod dual;
