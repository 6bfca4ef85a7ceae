//! Numerical laboratory for degenerate one-phase free boundary problems.
//!
//! The central object is a nonnegative scalar field `w` on a uniform grid
//! solving `Δw = h(∇w)/w` on its positivity set, with the gradient pinned to
//! the boundary of a star-shaped constraint set `D` along the free boundary.
//! The classical obstacle problem and the Alt-Phillips minimizers are the
//! quadratic-`h` specializations, reached through the power change of
//! variables `w = u^{1/β}`.
//!
//! Module layout:
//! - [`geometry`]: the constraint set `D`, its radial function, normals and gauge;
//! - [`fields`]: uniform grids, scalar fields, discrete calculus, persistence;
//! - [`potentials`]: the nonlinearity `h`, power potentials, energies, residuals;
//! - [`solvers`]: obstacle / Alt-Phillips / degenerate fixed-point / Perron schemes;
//! - [`fb_analysis`]: free boundary extraction and quantitative diagnostics;
//! - [`linearized`]: the degenerate Neumann-type problem `L_s φ = 0` on a half domain.

pub mod error;
pub mod fb_analysis;
pub mod fields;
pub mod geometry;
pub mod linearized;
pub mod potentials;
pub mod solvers;

pub use error::CoreError;

/// Library version string.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
