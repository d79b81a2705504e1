//! Numerical laboratory for `u_tt - Δ_H u + u_t = |u|^p` on the Heisenberg group.

pub mod error;
pub mod certificate;
pub mod diagnostics;
pub mod experiments;
pub mod geometry;
pub mod grid;
pub mod solver;

pub use error::{Error, Result};
