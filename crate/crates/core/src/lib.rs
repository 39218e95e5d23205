//! Solid angles of simplicial cones and angle sums of simplices.
//!
//! The crate is organised bottom-up:
//!
//! - [`numlin`]: small dense linear algebra (Gram matrices, Cholesky, solves).
//! - [`cones`]: simplicial cones, dual normals, membership and exact
//!   low-dimensional angles.
//! - [`mc`]: seeded random streams and the Monte Carlo angle estimators.
//! - [`simplex`]: simplices, angle sums, random and parametric simplex
//!   families, and the facet-hyperplane region census.
//! - [`cli`]: experiment runners producing serialisable reports.
//!
//! Solid angles are normalised so that the whole space has angle 1.

pub mod cli;
pub mod cones;
mod decimal;
pub mod error;
pub mod mc;
pub mod numlin;
pub mod simplex;

pub use error::{Error, Result};
