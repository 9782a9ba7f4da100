//! Numerical laboratory for the inverse admittivity problem with
//! piecewise-constant complex coefficients on layered domains.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`] and [`mesh`]: strip partitions, chains of regions and
//!   interface-conforming triangulations.
//! - [`fundsol`]: Laplace and two-phase (flat interface) fundamental solutions.
//! - [`forward`]: P1 finite elements for `div(γ∇u) = 0` with Dirichlet data.
//! - [`dtn`]: discrete Dirichlet-to-Neumann maps and fractional boundary norms.
//! - [`singular`]: singular solutions `G = Γ_l + w`, probe integrals and the
//!   interior/boundary identity for two admittivities.
//! - [`stability`]: modulus calculus, constant tracking, three-sphere checks,
//!   sensitivity analysis and Gauss-Newton reconstruction.

pub mod dtn;
pub mod error;
pub mod forward;
pub mod fundsol;
pub mod geometry;
pub mod linalg;
pub mod mesh;
pub mod quadrature;
pub mod singular;
pub mod stability;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// A point in the plane.
pub type Point = [f64; 2];
