//! Numerical laboratory for relative spectral invariants of rotationally
//! symmetric surfaces with funnel, cusp and boundary ends.
//!
//! The pipeline: [`geometry`] builds a conformal weight on a cylinder chart,
//! [`discretize`] splits the Laplacian into Fourier modes and solves each
//! generalized Sturm–Liouville problem, [`spectral`] forms heat traces and
//! kernels, and [`zeta`] turns a relative heat trace into relative heat
//! invariants and a relative determinant. [`oracle`] holds independent
//! brute-force checks.

pub mod discretize;
pub mod error;
pub mod geometry;
pub mod oracle;
pub mod quad;
pub mod special;
pub mod spectral;
pub mod zeta;

pub use error::{Error, Result};
