//! Adaptive classification of scattered data into smooth classes with
//! piecewise kernel interpolation.
//!
//! Scattered samples of a function that is smooth on a few subdomains but
//! discontinuous across their boundaries are split into per-subdomain
//! classes, and each class gets its own radial-kernel interpolant. The
//! piecewise result avoids the oscillations a single global interpolant
//! develops near the discontinuities.
//!
//! The pipeline runs in three phases over a point set `X` with values `f`:
//!
//! 1. **localization** — a per-point indicator `sigma_i` (the native-space
//!    norm of a small neighborhood interpolant) separates "good" points in
//!    smooth regions from "bad" points near discontinuities; the good points
//!    are then split into connected seed classes over the neighbor graph
//!    ([`locality`], [`splitting`]);
//! 2. **blow-up** — classes grow by absorbing unsure points whose inclusion
//!    degrades the local interpolation quality the least ([`blowup`]);
//! 3. **final assignment** — leftover points are placed by normalized
//!    prediction error ([`assignment`]).
//!
//! [`evaluation`] builds the piecewise approximant and a global baseline and
//! measures both on an evaluation grid; [`benchfuncs`] provides four test
//! surfaces with known discontinuity loci; [`pipeline`] wires the phases
//! together behind a single config.
//!
//! The numerical core is generic over the scalar type (`f32`/`f64`); the
//! crate root exports `f64` aliases for the common types.

pub mod assignment;
pub mod benchfuncs;
pub mod blowup;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod io;
pub mod kernel;
pub mod locality;
pub mod pipeline;
pub mod scalar;
pub mod splitting;

pub use error::{Error, Result};

/// `f64` working types.
pub type Point2 = geometry::Point<f64, 2>;
pub type PointSet2 = geometry::PointSet<f64, 2>;
pub type Edge2 = geometry::Edge<f64>;
pub type Kernel64 = kernel::Kernel<f64>;
pub type Interpolant2 = kernel::Interpolant<f64, 2>;
