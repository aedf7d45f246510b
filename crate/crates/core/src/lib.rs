//! Variational energies driven by moving anisotropies, on box grids.
//!
//! The crate is organised bottom-up:
//!
//! - [`anisotropy`]: coefficient-matrix vector fields, built-in families,
//!   the convergence modulus `σ(h)` and pseudoinverse algebra;
//! - [`grid`]: box grids, scalar and vector fields, discrete gradients and norms;
//! - [`mollify`]: bump mollifiers, convolution, rate-coupled approximation
//!   sequences and the commutator measurement;
//! - [`functionals`]: integrands, growth checks, perturbed energies and momenta;
//! - [`solve`]: matrix-free Dirichlet solves, Rayleigh quotients and Poincaré checks;
//! - [`experiments`]: configured convergence experiments and their reports.

pub mod anisotropy;
pub mod error;
pub mod experiments;
pub mod functionals;
pub mod grid;
pub mod mollify;
pub mod solve;

pub use error::{Error, Result};
