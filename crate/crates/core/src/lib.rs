//! Circumcentered-reflection method (CRM) and classical projection methods for
//! finding common fixed points of firmly nonexpansive operators.
//!
//! - [`geometry`]: circumcenters and reflections.
//! - [`operators`]: projections, convex combinations, compositions and property checks.
//! - [`ellipsoid`]: ellipsoids with a KKT reference projector and an ADMM projector.
//! - [`product_space`]: lifting `m` operators to one operator plus the diagonal subspace.
//! - [`solvers`]: MAP, CRM, PPM and SPM iterations, diagnostics and rate estimates.
//! - [`instance_gen`]: seeded random ellipsoid instances.
//! - [`bench`]: experiment grid, summary statistics, performance profiles and export.

pub mod bench;
pub mod ellipsoid;
pub mod error;
pub mod geometry;
pub mod instance_gen;
pub mod operators;
pub mod product_space;
pub mod solvers;

pub use error::{Error, Result};
pub use geometry::Point;
