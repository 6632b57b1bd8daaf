//! Matrix exponential for anti-Hermitian generators.
//!
//! Every unitary generator in this crate (squeezing, displacement, beam
//! splitter blocks) is anti-Hermitian, so `exp(M) = U diag(e^{iλ}) U†` with
//! `M = iH` and `H` Hermitian. The eigen route is stable at the truncation
//! edge where Padé scaling-and-squaring loses accuracy.

use crate::{C64, CMat};

/// Exponential of an anti-Hermitian matrix.
///
/// Debug builds assert `M† = -M`; release builds symmetrize silently.
pub fn expm_antihermitian(m: &CMat) -> CMat {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "generator must be square");
    let h = m.map(|z| z * C64::new(0.0, -1.0));
    debug_assert!(
        (&h - h.adjoint()).norm() <= 1e-10 * (1.0 + h.norm()),
        "generator is not anti-Hermitian"
    );
    let h = (&h + h.adjoint()).scale(0.5);
    let eig = h.symmetric_eigen();
    let phases = CMat::from_diagonal(&eig.eigenvalues.map(|l| C64::from_polar(1.0, l)));
    &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
}
