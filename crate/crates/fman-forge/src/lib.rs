//! Chart-level verification engine for F-manifold structures.
//!
//! The crate evaluates multiplication tensors, vector fields, and metrics
//! given by closed-form expressions on coordinate charts, and checks the
//! defining identities of the surrounding geometry numerically at seeded
//! sample points: associativity and the Hertling-Manin condition, eventual
//! identities and the duality they induce, invariant-metric compatibility
//! and curvature, induced hydrodynamic flows, and diagonal Hermitian data
//! on complex charts.

pub mod compat;
pub mod error;
pub mod eventual;
pub mod expr;
pub mod field;
pub mod fmanifold;
pub mod hydro;
pub mod manifest;
pub mod metric;
pub mod patch;
pub mod report;
pub mod suite;
pub mod ttstar;

pub use error::{Error, Result};
