//! Normalized Ricci flow on axisymmetric two-spheres, the isoperimetric
//! profile of its latitude circles, and checks of the comparison bounds that
//! drive the flow to the round metric.
//!
//! * [`metric`]: conformal metrics `e^{2u} g_round` on a colatitude grid.
//! * [`flow`]: RK4 integration of `∂u/∂t = 1 − K` with area projection.
//! * [`isoperimetric`]: latitude profile, Chavel–Feldman bound, evolution
//!   residual and a brute-force curve search.
//! * [`bounds`]: logistic comparison and curvature-decay checks.
//! * [`config`], [`series`], [`commands`]: manifests, CSV output and the CLI.

pub mod bounds;
pub mod commands;
pub mod config;
pub mod error;
pub mod flow;
pub mod isoperimetric;
pub mod metric;
pub mod series;

pub use error::{Error, Result};
