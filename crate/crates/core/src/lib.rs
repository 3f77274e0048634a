//! Adaptive finite elements for the smallest Laplace–Dirichlet eigenpair on
//! polygonal domains, driven by a pointwise (L∞) residual estimator.
//!
//! The pipeline is `mesh` → `space` → `eigensolve` → `estimator` → `adapt`,
//! with `report` handling benchmarks, error measurement and artifacts and
//! `cli` wiring everything to the command line.

pub mod adapt;
pub mod cli;
pub mod eigensolve;
pub mod error;
pub mod estimator;
pub mod mesh;
pub mod report;
pub mod space;

pub use error::{Error, Result};
