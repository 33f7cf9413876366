//! Correlation functions of characteristic polynomials for unitary-invariant
//! Hermitian random-matrix ensembles with weight `exp(-N V(x))`.
//!
//! The crate computes the exact finite-N determinantal formulas (built from monic
//! orthogonal polynomials and their Cauchy transforms), their Dyson scaling-limit
//! predictions, and independent checks: a Monte-Carlo eigenvalue sampler and
//! brute-force verification of the underlying algebraic identities.

pub mod asymptotics;
pub mod cauchy;
pub mod correlators;
pub mod ensemble;
pub mod equilibrium;
pub mod error;
pub mod format;
pub mod identities;
pub mod kernels;
pub mod linalg;
pub mod montecarlo;
pub mod orthopoly;
pub mod quadrature;
pub mod scaled;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use scaled::ScaledComplex;
