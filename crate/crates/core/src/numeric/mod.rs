//! Shared numerical routines: Gauss-Hermite quadrature, Hermite functions,
//! matrix exponentials of anti-Hermitian generators, and a small simplex
//! optimizer.

mod expm;
mod gauss_hermite;
mod hermite;
mod nelder_mead;

pub use expm::expm_antihermitian;
pub use gauss_hermite::{gauss_hermite, GaussHermite};
pub use hermite::{hermite_functions, hermite_polys_normalized, quadrature_eigenvector};
pub use nelder_mead::{nelder_mead, NelderMeadResult};
