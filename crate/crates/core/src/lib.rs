//! Numerical laboratory for contracting curvature flows of closed convex
//! hypersurfaces in `R^{n+1}`.
//!
//! The flows move each point of a star-shaped (radial picture) or convex
//! (support picture) hypersurface inward with normal speed `r^a F^b` or
//! `u^a F^b`, where `F` is a symmetric, 1-homogeneous, inverse-concave
//! function of the principal curvatures, `r` is the distance to the origin
//! and `u` the support function. The crate provides:
//!
//! - [`curvature`]: a registry of certified speed functions `F` with
//!   analytic gradients and inverse-concave duals,
//! - [`geometry`]: exact axisymmetric differential geometry on 1-D polar
//!   grids (principal curvatures, support/radial conversions),
//! - [`flow`]: explicit CFL-controlled RK4 integration of the four flow
//!   variants (weights r/u, normalized or not) in either parametrization,
//! - [`diagnostics`]: ratio/gradient monitors, exponential-rate fitting and
//!   bound reports,
//! - [`scenarios`]: initial bodies, exact sphere barriers, the closed-form
//!   sub-solution profile and nesting comparisons.

// NaN-rejecting `!(x > 0)` comparisons and index-based loops over several
// parallel arrays are deliberate in the numerical kernels.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod curvature;
pub mod diagnostics;
pub mod flow;
pub mod geometry;
pub mod grid;
pub mod scenarios;

pub use curvature::{CurvatureFunction, EigenTuple};
pub use geometry::{GeometryFields, Profile, ProfileKind};
