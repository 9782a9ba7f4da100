//! Quantitative stability: the ω-modulus calculus, constant tracking,
//! three-sphere checks, sensitivity of `γ ↦ Λ_γ`, reconstruction and sweeps.

pub mod modulus;
pub mod sweep;
pub mod reconstruct;
pub mod sensitivity;
pub mod three_sphere;
pub mod tracker;

pub use modulus::{omega, omega_cap, omega_inverse, omega_iterate};
pub use three_sphere::{three_sphere_ratio, three_sphere_suite, HarmonicPolynomial, ThreeSphereSuite};
pub use tracker::{constant_bound, delta_recursion, tau, ConstantTracker, DeltaRecursion, LipschitzBound, Tower};
pub use sensitivity::{sensitivity_jacobian, Sensitivity};
pub use reconstruct::{gauss_newton_reconstruct, noise_sweep, GaussNewtonOptions, NoiseKind, Reconstruction};
pub use sweep::{stability_sweep, DataSupport, SweepRecord};
