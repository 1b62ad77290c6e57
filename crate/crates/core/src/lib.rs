//! Adaptive coarse-grid refinement on hierarchical hybrid grids.
//!
//! An unstructured macro mesh is refined adaptively with red-green closure
//! ([`mesh`]) and each macro element is refined uniformly into a structured
//! lattice ([`hhg`]). P1 finite elements ([`fem`]) are solved by full
//! multigrid ([`multigrid`]), whose stored coarse solutions drive the error
//! estimator ([`estimator`]). [`amr`] runs the refinement schemes and [`app`]
//! is the command-line front end.

pub mod amr;
pub mod app;
pub mod error;
pub mod estimator;
pub mod fem;
pub mod hhg;
pub mod mesh;
pub mod multigrid;
pub mod par;
pub mod problems;

pub use error::{Error, Result};
