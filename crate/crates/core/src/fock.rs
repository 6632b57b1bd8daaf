//! Truncated Fock-space states and mode operators.
//!
//! Conventions, fixed once for the whole crate:
//!
//! * `x = (a + a†)/√2`, `p = (a - a†)/(i√2)`, so `[x, p] = i` and the vacuum
//!   has quadrature variance 1/2 along every direction.
//! * `x(θ)` is the Hermitian part of `a e^{-iθ}`; `x(0) = x`, `x(π/2) = p`.
//! * Wigner functions integrate to one over `dx dp` (see [`crate::phase_space`]).
//!
//! States are immutable values; all operations are pure functions.

use crate::error::{Error, Result};
use crate::{C64, CMat, CVec};
use serde::{Deserialize, Serialize};

/// Vacuum quadrature variance in this convention.
pub const VACUUM_VARIANCE: f64 = 0.5;

/// Deficit above which constructors refuse to renormalize silently.
pub const RENORM_DEFICIT_LIMIT: f64 = 1e-6;

/// Cumulative log-factorials `ln(0!), ln(1!), ..., ln((n-1)!)`.
///
/// Amplitude ratios like `α^n/√(n!)` are assembled in log space so cutoffs
/// beyond n ≈ 170 stay finite.
pub fn log_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let mut acc = 0.0;
    for k in 0..n {
        if k > 0 {
            acc += (k as f64).ln();
        }
        out.push(acc);
    }
    out
}

/// Parity sector of a coherent-state superposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

/* Pure states ****************************************************************/

/// Normalized pure state in a truncated Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Ket {
    amps: CVec,
}

impl Ket {
    /// Fock state `|n⟩`.
    pub fn fock(n: usize, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        if n >= dim {
            return Err(Error::CutoffViolation { n, dim });
        }
        let mut amps = CVec::zeros(dim);
        amps[n] = C64::new(1.0, 0.0);
        Ok(Ket { amps })
    }

    /// Coherent state `|α⟩` with `c_n ∝ α^n/√(n!)`.
    ///
    /// Errors when the truncated tail weight reaches 1e-8; the state is
    /// renormalized after truncation.
    pub fn coherent(alpha: C64, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        let lf = log_factorials(dim);
        let mag = alpha.norm();
        let phase = if mag > 0.0 {
            alpha / mag
        } else {
            C64::new(1.0, 0.0)
        };
        let mut amps = CVec::zeros(dim);
        let mut rot = C64::new(1.0, 0.0);
        for n in 0..dim {
            let ln_mag = if mag > 0.0 {
                n as f64 * mag.ln() - 0.5 * lf[n] - 0.5 * mag * mag
            } else if n == 0 {
                0.0
            } else {
                f64::NEG_INFINITY
            };
            amps[n] = rot * ln_mag.exp();
            rot *= phase;
        }
        let captured = amps.norm_squared();
        let deficit = 1.0 - captured;
        if deficit >= 1e-8 {
            return Err(Error::TailWeight {
                deficit,
                limit: 1e-8,
            });
        }
        amps /= C64::from(captured.sqrt());
        Ok(Ket { amps })
    }

    /// Coherent-state superposition `|α⟩ ± |-α⟩`, normalized.
    ///
    /// The odd branch has support only on odd Fock levels and degenerates to
    /// `|1⟩` as `α → 0`; `α = 0` itself is rejected for odd parity.
    pub fn css(alpha: C64, parity: Parity, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        if parity == Parity::Odd && alpha.norm() == 0.0 {
            return Err(Error::DegenerateNorm);
        }
        let plus = Ket::coherent(alpha, dim)?;
        let keep_even = parity == Parity::Even;
        // |α⟩ ± |-α⟩ keeps exactly the even/odd half of the expansion.
        let mut amps = plus.amps.clone();
        for n in 0..dim {
            if (n % 2 == 0) != keep_even {
                amps[n] = C64::new(0.0, 0.0);
            }
        }
        let norm = amps.norm();
        if norm < 1e-12 {
            return Err(Error::DegenerateNorm);
        }
        amps /= C64::from(norm);
        Ok(Ket { amps })
    }

    /// Build from raw amplitudes; renormalizes and reports the deficit,
    /// refusing silently large ones.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let (ket, _deficit) = Ket::renormalized(CVec::from_vec(amps))?;
        Ok(ket)
    }

    /// Renormalize a raw vector, returning the state and `1 - ||v||²`.
    ///
    /// Errors on deficits above [`RENORM_DEFICIT_LIMIT`] or on vanishing norm.
    pub fn renormalized(v: CVec) -> Result<(Self, f64)> {
        check_dim(v.len())?;
        let n2 = v.norm_squared();
        if n2 < 1e-300 {
            return Err(Error::ZeroProbability("state norm underflow".into()));
        }
        let deficit = 1.0 - n2;
        if deficit > RENORM_DEFICIT_LIMIT {
            return Err(Error::TailWeight {
                deficit,
                limit: RENORM_DEFICIT_LIMIT,
            });
        }
        let mut v = v;
        v /= C64::from(n2.sqrt());
        Ok((Ket { amps: v }, deficit))
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amp(&self, n: usize) -> C64 {
        self.amps[n]
    }

    pub fn amplitudes(&self) -> &CVec {
        &self.amps
    }

    /// `⟨self|other⟩`.
    pub fn overlap(&self, other: &Ket) -> Result<C64> {
        same_dim(self.dim(), other.dim())?;
        Ok(self.amps.dotc(&other.amps))
    }

    pub fn to_density_matrix(&self) -> DensityMatrix {
        let m = &self.amps * self.amps.adjoint();
        DensityMatrix { elems: m }
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .map(|(n, a)| n as f64 * a.norm_sqr())
            .sum()
    }

    /// Population in the top `levels` Fock levels; a cheap cutoff-adequacy
    /// diagnostic.
    pub fn tail_weight(&self, levels: usize) -> f64 {
        let dim = self.dim();
        let start = dim.saturating_sub(levels);
        (start..dim).map(|n| self.amps[n].norm_sqr()).sum()
    }
}

/* Mixed states ***************************************************************/

/// Hermitian, unit-trace, positive-semidefinite matrix in the Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    elems: CMat,
}

impl DensityMatrix {
    pub fn from_ket(ket: &Ket) -> Self {
        ket.to_density_matrix()
    }

    /// Wrap a matrix that is already a valid state (checked).
    pub fn new(elems: CMat) -> Result<Self> {
        let dm = DensityMatrix { elems };
        dm.validate()?;
        Ok(dm)
    }

    /// Wrap without validation; for internal construction paths that
    /// guarantee the invariants structurally.
    pub(crate) fn new_unchecked(elems: CMat) -> Self {
        DensityMatrix { elems }
    }

    /// Convex mixture `Σ w_i ρ_i` (weights renormalized to sum to one).
    pub fn mixture(parts: &[(f64, DensityMatrix)]) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::EmptyInput("mixture of no states".into()));
        }
        let dim = parts[0].1.dim();
        let total: f64 = parts.iter().map(|(w, _)| *w).sum();
        if total <= 0.0 || parts.iter().any(|(w, _)| *w < 0.0) {
            return Err(Error::InvalidParameter(
                "mixture weights must be nonnegative with positive sum".into(),
            ));
        }
        let mut acc = CMat::zeros(dim, dim);
        for (w, rho) in parts {
            same_dim(dim, rho.dim())?;
            acc += rho.elems.scale(w / total);
        }
        Ok(DensityMatrix { elems: acc })
    }

    pub fn dim(&self) -> usize {
        self.elems.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.elems
    }

    pub fn element(&self, m: usize, n: usize) -> C64 {
        self.elems[(m, n)]
    }

    pub fn trace(&self) -> C64 {
        self.elems.trace()
    }

    /// Check Hermiticity (1e-9 elementwise), unit trace (1e-9) and
    /// positivity (min eigenvalue ≥ -1e-8).
    pub fn validate(&self) -> Result<()> {
        let h_err = (&self.elems - self.elems.adjoint()).camax();
        if h_err > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "density matrix not Hermitian (max deviation {h_err:.3e})"
            )));
        }
        let t = self.trace();
        if (t.re - 1.0).abs() > 1e-9 || t.im.abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "density matrix trace {t} is not 1"
            )));
        }
        let min_eig = self
            .elems
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -1e-8 {
            return Err(Error::InvalidParameter(format!(
                "density matrix has negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(())
    }

    /// Renormalize the trace, returning the deficit `1 - tr` and refusing
    /// deficits above `limit`.
    pub fn renormalized(m: CMat, limit: f64) -> Result<(Self, f64)> {
        let t = m.trace().re;
        if t < 1e-300 {
            return Err(Error::ZeroProbability("density matrix trace underflow".into()));
        }
        let deficit = 1.0 - t;
        if deficit > limit {
            return Err(Error::TailWeight { deficit, limit });
        }
        // Symmetrize away numerical skew before rescaling.
        let sym = (&m + m.adjoint()).scale(0.5);
        Ok((DensityMatrix { elems: sym / C64::from(t) }, deficit))
    }

    pub fn purity(&self) -> f64 {
        self.elems
            .iter()
            .zip(self.elems.transpose().iter())
            .map(|(a, b)| (a * b).re)
            .sum()
    }

    /// `⟨ψ|ρ|ψ⟩`, clamped lightly into `[0, 1 + 1e-9]`.
    pub fn fidelity_pure(&self, psi: &Ket) -> Result<f64> {
        same_dim(self.dim(), psi.dim())?;
        let v = psi.amplitudes();
        let f = (v.adjoint() * &self.elems * v)[(0, 0)].re;
        Ok(f.max(0.0))
    }

    /// Uhlmann fidelity `(tr sqrt(sqrt(ρ) σ sqrt(ρ)))²` between mixed states.
    pub fn fidelity(&self, other: &DensityMatrix) -> Result<f64> {
        same_dim(self.dim(), other.dim())?;
        let sqrt_self = hermitian_sqrt(&self.elems);
        let inner = &sqrt_self * &other.elems * &sqrt_self;
        let inner = (&inner + inner.adjoint()).scale(0.5);
        let eigs = inner.symmetric_eigenvalues();
        let s: f64 = eigs.iter().map(|l| l.max(0.0).sqrt()).sum();
        Ok(s * s)
    }

    /// Trace distance `(1/2)‖ρ - σ‖₁`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        same_dim(self.dim(), other.dim())?;
        let diff = &self.elems - &other.elems;
        let eigs = diff.symmetric_eigenvalues();
        Ok(0.5 * eigs.iter().map(|l| l.abs()).sum::<f64>())
    }

    /// `tr(ρ O)`.
    pub fn expectation(&self, op: &ModeOperator) -> Result<C64> {
        same_dim(self.dim(), op.dim())?;
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.dim() {
            for k in 0..self.dim() {
                acc += self.elems[(i, k)] * op.mat[(k, i)];
            }
        }
        Ok(acc)
    }

    pub fn mean_photon_number(&self) -> f64 {
        (0..self.dim())
            .map(|n| n as f64 * self.elems[(n, n)].re)
            .sum()
    }

    /// Diagonal in the Fock basis (photon-number distribution).
    pub fn photon_distribution(&self) -> Vec<f64> {
        (0..self.dim()).map(|n| self.elems[(n, n)].re).collect()
    }

    /// Population in the top `levels` Fock levels.
    pub fn tail_weight(&self, levels: usize) -> f64 {
        let dim = self.dim();
        let start = dim.saturating_sub(levels);
        (start..dim).map(|n| self.elems[(n, n)].re).sum()
    }

    /// Mean vector `(⟨x⟩, ⟨p⟩)` and 2×2 covariance of the quadratures.
    pub fn quadrature_moments(&self) -> QuadratureMoments {
        let dim = self.dim();
        let a = annihilation(dim);
        // ⟨a⟩ and ⟨a²⟩, ⟨a†a⟩ from the matrix directly.
        let mut mean_a = C64::new(0.0, 0.0);
        let mut mean_a2 = C64::new(0.0, 0.0);
        let mut mean_n = 0.0;
        for n in 0..dim {
            if n + 1 < dim {
                mean_a += self.elems[(n + 1, n)] * a.mat[(n, n + 1)];
            }
            if n + 2 < dim {
                mean_a2 += self.elems[(n + 2, n)] * a.mat[(n, n + 1)] * a.mat[(n + 1, n + 2)];
            }
            mean_n += n as f64 * self.elems[(n, n)].re;
        }
        let sqrt2 = std::f64::consts::SQRT_2;
        let mean_x = sqrt2 * mean_a.re;
        let mean_p = sqrt2 * mean_a.im;
        // x² = (a² + a†² + 2n + 1)/2, p² = (-a² - a†² + 2n + 1)/2,
        // (xp + px)/2 = Im⟨a²⟩.
        let xx = mean_a2.re + mean_n + 0.5;
        let pp = -mean_a2.re + mean_n + 0.5;
        let xp = mean_a2.im;
        QuadratureMoments {
            mean: [mean_x, mean_p],
            cov: [
                [xx - mean_x * mean_x, xp - mean_x * mean_p],
                [xp - mean_x * mean_p, pp - mean_p * mean_p],
            ],
        }
    }

    /// Spectral decomposition with eigenvalues above `cut`, largest first.
    pub fn eigen_components(&self, cut: f64) -> Vec<(f64, Ket)> {
        let eig = self.elems.clone().symmetric_eigen();
        let mut parts: Vec<(f64, Ket)> = Vec::new();
        for i in 0..self.dim() {
            let lambda = eig.eigenvalues[i];
            if lambda > cut {
                let col = eig.eigenvectors.column(i).into_owned();
                parts.push((lambda, Ket { amps: col }));
            }
        }
        parts.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        parts
    }
}

/// First and second quadrature moments of a single-mode state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureMoments {
    pub mean: [f64; 2],
    pub cov: [[f64; 2]; 2],
}

fn hermitian_sqrt(m: &CMat) -> CMat {
    let eig = m.clone().symmetric_eigen();
    let d = CMat::from_diagonal(&eig.eigenvalues.map(|l| C64::new(l.max(0.0).sqrt(), 0.0)));
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

/* Mode operators *************************************************************/

/// What a [`ModeOperator`] represents; purely informational.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorKind {
    Annihilation,
    Creation,
    Number,
    Quadrature(f64),
    Parity,
    General,
}

/// Dense single-mode operator in the Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeOperator {
    pub(crate) mat: CMat,
    pub kind: OperatorKind,
}

impl ModeOperator {
    pub fn new(mat: CMat, kind: OperatorKind) -> Self {
        assert_eq!(mat.nrows(), mat.ncols(), "mode operators are square");
        ModeOperator { mat, kind }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn dagger(&self) -> ModeOperator {
        ModeOperator {
            mat: self.mat.adjoint(),
            kind: OperatorKind::General,
        }
    }

    /// Compose `self · other`.
    pub fn compose(&self, other: &ModeOperator) -> Result<ModeOperator> {
        same_dim(self.dim(), other.dim())?;
        Ok(ModeOperator {
            mat: &self.mat * &other.mat,
            kind: OperatorKind::General,
        })
    }

    /// Apply to a ket and renormalize, enforcing the truncation-deficit limit.
    ///
    /// Intended for (approximately) unitary operators; the deficit reported by
    /// the renormalization is the population pushed past the cutoff.
    pub fn apply(&self, ket: &Ket) -> Result<Ket> {
        same_dim(self.dim(), ket.dim())?;
        let v = &self.mat * ket.amplitudes();
        Ok(Ket::renormalized(v)?.0)
    }

    /// Conjugate a density matrix, `U ρ U†`, renormalizing the truncation
    /// deficit (refused above the crate-wide limit).
    pub fn conjugate(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        same_dim(self.dim(), rho.dim())?;
        let m = &self.mat * rho.matrix() * self.mat.adjoint();
        Ok(DensityMatrix::renormalized(m, RENORM_DEFICIT_LIMIT)?.0)
    }
}

/// Annihilation operator: `⟨n-1|a|n⟩ = √n`.
pub fn annihilation(dim: usize) -> ModeOperator {
    let mut m = CMat::zeros(dim, dim);
    for n in 1..dim {
        m[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    ModeOperator {
        mat: m,
        kind: OperatorKind::Annihilation,
    }
}

pub fn creation(dim: usize) -> ModeOperator {
    let mut m = CMat::zeros(dim, dim);
    for n in 1..dim {
        m[(n, n - 1)] = C64::new((n as f64).sqrt(), 0.0);
    }
    ModeOperator {
        mat: m,
        kind: OperatorKind::Creation,
    }
}

pub fn number(dim: usize) -> ModeOperator {
    let mut m = CMat::zeros(dim, dim);
    for n in 0..dim {
        m[(n, n)] = C64::new(n as f64, 0.0);
    }
    ModeOperator {
        mat: m,
        kind: OperatorKind::Number,
    }
}

/// Rotated quadrature `x(θ) = (a e^{-iθ} + a† e^{iθ})/√2`.
pub fn quadrature(theta: f64, dim: usize) -> ModeOperator {
    let mut m = CMat::zeros(dim, dim);
    let phase = C64::from_polar(1.0 / std::f64::consts::SQRT_2, -theta);
    for n in 1..dim {
        let s = (n as f64).sqrt();
        m[(n - 1, n)] = phase * s;
        m[(n, n - 1)] = phase.conj() * s;
    }
    ModeOperator {
        mat: m,
        kind: OperatorKind::Quadrature(theta),
    }
}

/// Photon-number parity `(-1)^n`.
pub fn parity(dim: usize) -> ModeOperator {
    let mut m = CMat::zeros(dim, dim);
    for n in 0..dim {
        m[(n, n)] = C64::new(if n % 2 == 0 { 1.0 } else { -1.0 }, 0.0);
    }
    ModeOperator {
        mat: m,
        kind: OperatorKind::Parity,
    }
}

pub fn identity(dim: usize) -> ModeOperator {
    ModeOperator {
        mat: CMat::identity(dim, dim),
        kind: OperatorKind::General,
    }
}

/* Two-mode states ************************************************************/

/// Which mode of a joint state an operation addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    A,
    B,
}

/// Pure two-mode state; amplitudes indexed `m * dim_b + n` for `|m⟩_A |n⟩_B`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointKet {
    pub dim_a: usize,
    pub dim_b: usize,
    amps: CVec,
}

impl JointKet {
    pub fn amp(&self, m: usize, n: usize) -> C64 {
        self.amps[m * self.dim_b + n]
    }

    pub fn amplitudes(&self) -> &CVec {
        &self.amps
    }

    pub fn from_amplitudes(dim_a: usize, dim_b: usize, amps: CVec) -> Result<Self> {
        if amps.len() != dim_a * dim_b {
            return Err(Error::DimensionMismatch {
                left: amps.len(),
                right: dim_a * dim_b,
            });
        }
        let n2 = amps.norm_squared();
        if (n2 - 1.0).abs() > RENORM_DEFICIT_LIMIT {
            return Err(Error::TailWeight {
                deficit: 1.0 - n2,
                limit: RENORM_DEFICIT_LIMIT,
            });
        }
        let mut amps = amps;
        amps /= C64::from(n2.sqrt());
        Ok(JointKet { dim_a, dim_b, amps })
    }

    pub fn to_density_matrix(&self) -> JointDensityMatrix {
        JointDensityMatrix {
            dim_a: self.dim_a,
            dim_b: self.dim_b,
            elems: &self.amps * self.amps.adjoint(),
        }
    }
}

/// Mixed two-mode state with the same index layout as [`JointKet`].
#[derive(Debug, Clone, PartialEq)]
pub struct JointDensityMatrix {
    pub dim_a: usize,
    pub dim_b: usize,
    elems: CMat,
}

impl JointDensityMatrix {
    pub fn matrix(&self) -> &CMat {
        &self.elems
    }

}

/// `|a⟩ ⊗ |b⟩`.
pub fn tensor(a: &Ket, b: &Ket) -> JointKet {
    let (da, db) = (a.dim(), b.dim());
    let mut amps = CVec::zeros(da * db);
    for m in 0..da {
        for n in 0..db {
            amps[m * db + n] = a.amp(m) * b.amp(n);
        }
    }
    JointKet {
        dim_a: da,
        dim_b: db,
        amps,
    }
}

/// `ρ_A ⊗ ρ_B`.
pub fn tensor_dm(a: &DensityMatrix, b: &DensityMatrix) -> JointDensityMatrix {
    let (da, db) = (a.dim(), b.dim());
    let mut elems = CMat::zeros(da * db, da * db);
    for m in 0..da {
        for mp in 0..da {
            let amp = a.element(m, mp);
            if amp.norm_sqr() == 0.0 {
                continue;
            }
            for n in 0..db {
                for np in 0..db {
                    elems[(m * db + n, mp * db + np)] = amp * b.element(n, np);
                }
            }
        }
    }
    JointDensityMatrix {
        dim_a: da,
        dim_b: db,
        elems,
    }
}

/// Trace out one mode of a joint state.
pub fn partial_trace(joint: &JointDensityMatrix, keep: Mode) -> DensityMatrix {
    let (da, db) = (joint.dim_a, joint.dim_b);
    match keep {
        Mode::A => {
            let mut out = CMat::zeros(da, da);
            for m in 0..da {
                for mp in 0..da {
                    let mut acc = C64::new(0.0, 0.0);
                    for n in 0..db {
                        acc += joint.elems[(m * db + n, mp * db + n)];
                    }
                    out[(m, mp)] = acc;
                }
            }
            DensityMatrix { elems: out }
        }
        Mode::B => {
            let mut out = CMat::zeros(db, db);
            for n in 0..db {
                for np in 0..db {
                    let mut acc = C64::new(0.0, 0.0);
                    for m in 0..da {
                        acc += joint.elems[(m * db + n, m * db + np)];
                    }
                    out[(n, np)] = acc;
                }
            }
            DensityMatrix { elems: out }
        }
    }
}

/// Dense two-mode operator (both modes share one cutoff).
#[derive(Debug, Clone)]
pub struct TwoModeOperator {
    pub dim_per_mode: usize,
    pub(crate) mat: CMat,
}

impl TwoModeOperator {
    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn apply(&self, ket: &JointKet) -> Result<JointKet> {
        let d = self.dim_per_mode;
        if ket.dim_a != d || ket.dim_b != d {
            return Err(Error::DimensionMismatch {
                left: ket.dim_a * ket.dim_b,
                right: d * d,
            });
        }
        let v = &self.mat * &ket.amps;
        let n2 = v.norm_squared();
        let deficit = 1.0 - n2;
        if deficit > RENORM_DEFICIT_LIMIT {
            return Err(Error::TailWeight {
                deficit,
                limit: RENORM_DEFICIT_LIMIT,
            });
        }
        Ok(JointKet {
            dim_a: d,
            dim_b: d,
            amps: v / C64::from(n2.sqrt()),
        })
    }

    pub fn conjugate(&self, rho: &JointDensityMatrix) -> Result<JointDensityMatrix> {
        let d = self.dim_per_mode;
        if rho.dim_a != d || rho.dim_b != d {
            return Err(Error::DimensionMismatch {
                left: rho.dim_a * rho.dim_b,
                right: d * d,
            });
        }
        let m = &self.mat * &rho.elems * self.mat.adjoint();
        let t = m.trace().re;
        let deficit = 1.0 - t;
        if deficit > RENORM_DEFICIT_LIMIT {
            return Err(Error::TailWeight {
                deficit,
                limit: RENORM_DEFICIT_LIMIT,
            });
        }
        Ok(JointDensityMatrix {
            dim_a: d,
            dim_b: d,
            elems: m / C64::from(t),
        })
    }
}

/* Serialization **************************************************************/

/// JSON form of a ket: `{dim, re[], im[]}`.
#[derive(Debug, Serialize, Deserialize)]
pub struct KetJson {
    pub dim: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl From<&Ket> for KetJson {
    fn from(k: &Ket) -> Self {
        KetJson {
            dim: k.dim(),
            re: k.amps.iter().map(|a| a.re).collect(),
            im: k.amps.iter().map(|a| a.im).collect(),
        }
    }
}

impl TryFrom<KetJson> for Ket {
    type Error = Error;
    fn try_from(j: KetJson) -> Result<Ket> {
        if j.re.len() != j.dim || j.im.len() != j.dim {
            return Err(Error::DimensionMismatch {
                left: j.re.len(),
                right: j.dim,
            });
        }
        let amps: Vec<C64> = j
            .re
            .iter()
            .zip(&j.im)
            .map(|(&r, &i)| C64::new(r, i))
            .collect();
        Ket::from_amplitudes(amps)
    }
}

/// JSON form of a density matrix: `{dim, re[][], im[][]}` (row major).
#[derive(Debug, Serialize, Deserialize)]
pub struct DensityMatrixJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl From<&DensityMatrix> for DensityMatrixJson {
    fn from(rho: &DensityMatrix) -> Self {
        let d = rho.dim();
        let mut re = vec![vec![0.0; d]; d];
        let mut im = vec![vec![0.0; d]; d];
        for r in 0..d {
            for c in 0..d {
                re[r][c] = rho.elems[(r, c)].re;
                im[r][c] = rho.elems[(r, c)].im;
            }
        }
        DensityMatrixJson { dim: d, re, im }
    }
}

impl TryFrom<DensityMatrixJson> for DensityMatrix {
    type Error = Error;
    fn try_from(j: DensityMatrixJson) -> Result<DensityMatrix> {
        let d = j.dim;
        if j.re.len() != d || j.im.len() != d {
            return Err(Error::DimensionMismatch {
                left: j.re.len(),
                right: d,
            });
        }
        let mut m = CMat::zeros(d, d);
        for r in 0..d {
            if j.re[r].len() != d || j.im[r].len() != d {
                return Err(Error::DimensionMismatch {
                    left: j.re[r].len(),
                    right: d,
                });
            }
            for c in 0..d {
                m[(r, c)] = C64::new(j.re[r][c], j.im[r][c]);
            }
        }
        DensityMatrix::new(m)
    }
}

/* Helpers ********************************************************************/

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(Error::InvalidParameter(format!(
            "cutoff dimension must be at least 2, got {dim}"
        )));
    }
    Ok(())
}

pub(crate) fn same_dim(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::DimensionMismatch { left, right });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::hermite_functions;
    use approx::assert_relative_eq;

    #[test]
    fn fock_basics() {
        let vac = Ket::fock(0, 10).unwrap();
        assert_relative_eq!(vac.mean_photon_number(), 0.0);
        let one = Ket::fock(1, 10).unwrap();
        assert_relative_eq!(one.mean_photon_number(), 1.0);
        assert!(matches!(
            Ket::fock(10, 10),
            Err(Error::CutoffViolation { .. })
        ));
    }

    #[test]
    fn single_photon_marginal_is_hermite_squared() {
        // pr(x) for |1⟩ must equal 2 x² e^{-x²}/√π.
        let one = Ket::fock(1, 10).unwrap();
        let rho = one.to_density_matrix();
        for &x in &[0.0, 0.3, 1.0, 2.0] {
            let psi = hermite_functions(x, 10);
            let pr: f64 = psi
                .iter()
                .enumerate()
                .map(|(m, &pm)| {
                    psi.iter()
                        .enumerate()
                        .map(|(n, &pn)| (rho.element(m, n) * pm * pn).re)
                        .sum::<f64>()
                })
                .sum();
            let analytic = 2.0 * x * x * (-x * x).exp() / std::f64::consts::PI.sqrt();
            assert_relative_eq!(pr, analytic, epsilon = 1e-12);
        }
    }

    #[test]
    fn coherent_moments() {
        let alpha = C64::new(1.0, 0.0);
        let k = Ket::coherent(alpha, 30).unwrap();
        let rho = k.to_density_matrix();
        let a = annihilation(30);
        let mean_a = rho.expectation(&a).unwrap();
        assert_relative_eq!(mean_a.re, 1.0, epsilon = 1e-8);
        assert_relative_eq!(mean_a.im, 0.0, epsilon = 1e-12);
        // Poisson vacuum weight at α = 0.97.
        let k = Ket::coherent(C64::new(0.97, 0.0), 30).unwrap();
        assert_relative_eq!(k.amp(0).norm_sqr(), (-0.9409f64).exp(), epsilon = 1e-10);
        // α = 0 is the vacuum.
        let k = Ket::coherent(C64::new(0.0, 0.0), 5).unwrap();
        assert_relative_eq!(k.amp(0).re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn coherent_cutoff_error() {
        assert!(matches!(
            Ket::coherent(C64::new(4.0, 0.0), 8),
            Err(Error::TailWeight { .. })
        ));
    }

    #[test]
    fn css_structure() {
        let cat = Ket::css(C64::new(0.97, 0.0), Parity::Odd, 30).unwrap();
        // c3/c1 = α²/√6.
        let ratio = (cat.amp(3) / cat.amp(1)).re;
        assert_relative_eq!(ratio, 0.9409 / 6.0f64.sqrt(), epsilon = 1e-8);
        for n in (0..30).step_by(2) {
            assert!(cat.amp(n).norm() < 1e-15);
        }
        let even = Ket::css(C64::new(1.0, 0.0), Parity::Even, 30).unwrap();
        assert!(even.amp(0).norm_sqr() > 0.0);
        for n in (1..30).step_by(2) {
            assert!(even.amp(n).norm() < 1e-15);
        }
        assert!(matches!(
            Ket::css(C64::new(0.0, 0.0), Parity::Odd, 10),
            Err(Error::DegenerateNorm)
        ));
        // Small-α odd superposition converges to |1⟩.
        let small = Ket::css(C64::new(0.1, 0.0), Parity::Odd, 20).unwrap();
        let one = Ket::fock(1, 20).unwrap();
        assert!(small.overlap(&one).unwrap().norm_sqr() > 0.999);
    }

    #[test]
    fn density_matrix_plumbing() {
        let one = Ket::fock(1, 8).unwrap();
        let vac = Ket::fock(0, 8).unwrap();
        let rho = DensityMatrix::mixture(&[
            (0.84, one.to_density_matrix()),
            (0.16, vac.to_density_matrix()),
        ])
        .unwrap();
        rho.validate().unwrap();
        assert_relative_eq!(rho.purity(), 0.84 * 0.84 + 0.16 * 0.16, epsilon = 1e-12);
        assert_relative_eq!(rho.fidelity_pure(&one).unwrap(), 0.84, epsilon = 1e-12);
        let p = partial_trace(&tensor(&one, &vac).to_density_matrix(), Mode::A);
        assert_relative_eq!(p.fidelity_pure(&one).unwrap(), 1.0, epsilon = 1e-12);
        let p = partial_trace(&tensor(&one, &vac).to_density_matrix(), Mode::B);
        assert_relative_eq!(p.fidelity_pure(&vac).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn commutator_on_truncated_space() {
        let dim = 12;
        let a = annihilation(dim);
        let ad = creation(dim);
        let comm = &a.mat * &ad.mat - &ad.mat * &a.mat;
        for r in 0..dim - 1 {
            for c in 0..dim - 1 {
                let expect = if r == c { 1.0 } else { 0.0 };
                assert_relative_eq!(comm[(r, c)].re, expect, epsilon = 1e-12);
                assert_relative_eq!(comm[(r, c)].im, 0.0, epsilon = 1e-12);
            }
        }
        // The corner element is the truncation artifact.
        assert_relative_eq!(comm[(dim - 1, dim - 1)].re, -(dim as f64 - 1.0), epsilon = 1e-9);
    }

    #[test]
    fn quadrature_families() {
        let dim = 10;
        let x = quadrature(0.0, dim);
        let p = quadrature(std::f64::consts::FRAC_PI_2, dim);
        for &theta in &[0.0, 0.4, 1.3, 2.9] {
            let q = quadrature(theta, dim);
            let combo = x.mat.map(|z| z * theta.cos()) + p.mat.map(|z| z * theta.sin());
            assert!((q.mat.clone() - combo).camax() < 1e-12);
            assert!((q.mat.clone() - q.mat.adjoint()).camax() < 1e-14);
        }
    }

    #[test]
    fn vacuum_variance_along_every_angle() {
        let vac = Ket::fock(0, 10).unwrap().to_density_matrix();
        for k in 0..8 {
            let theta = k as f64 * std::f64::consts::PI / 8.0;
            let q = quadrature(theta, 10);
            let q2 = q.compose(&q).unwrap();
            let mean = vac.expectation(&q).unwrap().re;
            let var = vac.expectation(&q2).unwrap().re - mean * mean;
            assert_relative_eq!(var, VACUUM_VARIANCE, epsilon = 1e-12);
        }
    }

    #[test]
    fn quadrature_moments_match_operators() {
        let cat = Ket::css(C64::new(0.97, 0.0), Parity::Odd, 40).unwrap();
        let rho = cat.to_density_matrix();
        let m = rho.quadrature_moments();
        let x = quadrature(0.0, 40);
        let x2 = x.compose(&x).unwrap();
        let vx = rho.expectation(&x2).unwrap().re;
        assert_relative_eq!(m.cov[0][0], vx, epsilon = 1e-10);
        assert!(m.mean[0].abs() < 1e-12);
    }

    #[test]
    fn json_round_trip_preserves_values() {
        let cat = Ket::css(C64::new(1.1, 0.3), Parity::Odd, 25).unwrap();
        let rho = cat.to_density_matrix();
        let j: DensityMatrixJson = (&rho).into();
        let text = serde_json::to_string(&j).unwrap();
        let back: DensityMatrixJson = serde_json::from_str(&text).unwrap();
        let rho2: DensityMatrix = back.try_into().unwrap();
        for r in 0..25 {
            for c in 0..25 {
                assert!((rho.element(r, c) - rho2.element(r, c)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn uhlmann_fidelity_cases() {
        let one = Ket::fock(1, 6).unwrap().to_density_matrix();
        let vac = Ket::fock(0, 6).unwrap().to_density_matrix();
        assert_relative_eq!(one.fidelity(&one).unwrap(), 1.0, epsilon = 1e-10);
        assert_relative_eq!(one.fidelity(&vac).unwrap(), 0.0, epsilon = 1e-10);
        let mix = DensityMatrix::mixture(&[(0.5, one.clone()), (0.5, vac.clone())]).unwrap();
        // F(ρ, |1⟩⟨1|) = ⟨1|ρ|1⟩ for a pure second argument.
        assert_relative_eq!(mix.fidelity(&one).unwrap(), 0.5, epsilon = 1e-10);
    }
}
