//! Fock-space simulation of a measurement-based squeezing gate acting on
//! non-Gaussian optical states.
//!
//! The crate models a single optical mode in a truncated Fock basis with the
//! convention `[x, p] = i` (vacuum quadrature variance 1/2, Wigner functions
//! normalized to unit integral over dx dp). On top of that it provides
//!
//! * Gaussian unitaries, loss channels and realistic state preparation
//!   ([`gates`]),
//! * the measurement-based squeezing gate itself, in deterministic-channel,
//!   Monte-Carlo and analytic Gaussian-moment form ([`mb_squeezer`]),
//! * Wigner functions and quadrature marginals ([`phase_space`]),
//! * simulated homodyne tomography with maximum-likelihood reconstruction
//!   ([`tomography`]),
//! * coherent-state distinguishability/interference metrics, classical
//!   interference benchmarks and the anti-correlation witness ([`metrics`]).
//!
//! The `squeezer` binary wires these into file-based pipelines; see the
//! repository README for the command-line surface.

pub mod cli;
pub mod error;
pub mod fock;
pub mod gates;
pub mod mb_squeezer;
pub mod metrics;
pub mod numeric;
pub mod phase_space;
pub mod tomography;

pub use error::{Error, Result};
pub use fock::{DensityMatrix, JointDensityMatrix, JointKet, Ket, ModeOperator};

/// Complex scalar used throughout the crate.
pub type C64 = num_complex::Complex64;
/// Dense complex matrix.
pub type CMat = nalgebra::DMatrix<C64>;
/// Dense complex vector.
pub type CVec = nalgebra::DVector<C64>;
