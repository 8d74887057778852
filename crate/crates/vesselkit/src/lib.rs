//! Numerical toolkit for commutative operator vessels: strict embeddings and
//! their algebraic conditions, power-series and spectral solvers for the
//! compatibility systems, conservative system simulation along lines, and a
//! discretized commutative unitary dilation.

pub mod dilation;
pub mod fixtures;
pub mod linalg;
pub mod report;
pub mod series;
pub mod spectral;
pub mod system;
pub mod vessel;

pub use linalg::{CMat, CVec, C64};
pub use report::{ConditionEntry, ConditionReport};
