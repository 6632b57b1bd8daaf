//! Gaussian unitaries, loss channels, photon subtraction, and preparation of
//! the realistic input/ancilla states used by the gate pipelines.

use crate::error::{Error, Result};
use crate::fock::{
    annihilation, DensityMatrix, Ket, ModeOperator, OperatorKind, TwoModeOperator,
    RENORM_DEFICIT_LIMIT,
};
use crate::numeric::expm_antihermitian;
use crate::{C64, CMat};
use serde::{Deserialize, Serialize};

/// Which quadrature an ancilla (or a gate) squeezes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SqueezeOrientation {
    SqueezeX,
    SqueezeP,
}

/* Loss budget ****************************************************************/

/// Inefficiency model of the heralded single-photon source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBudget {
    /// Efficiency of the detection process (fraction transmitted).
    pub eta_detection: f64,
    /// Optical propagation efficiency.
    pub eta_propagation: f64,
    /// Probability weight of a false herald (vacuum admixture).
    pub dark_fraction: f64,
    /// Probability weight of a two-photon admixture.
    pub multiphoton_fraction: f64,
}

impl LossBudget {
    pub fn ideal() -> Self {
        LossBudget {
            eta_detection: 1.0,
            eta_propagation: 1.0,
            dark_fraction: 0.0,
            multiphoton_fraction: 0.0,
        }
    }

    /// Canonical budget of the realistic source model: 0.96 measured
    /// propagation efficiency, 1% false heralds, 2% two-photon weight, and a
    /// detection-process efficiency that folds the remaining unattributed
    /// loss so the heralded single-photon fraction comes out at 0.84.
    pub fn experimental() -> Self {
        LossBudget {
            eta_detection: 0.84 / (0.97 * 0.96),
            eta_propagation: 0.96,
            dark_fraction: 0.01,
            multiphoton_fraction: 0.02,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.eta_detection,
            self.eta_propagation,
            self.dark_fraction,
            self.multiphoton_fraction,
        ];
        if fields.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(Error::InvalidParameter(
                "loss budget fields must lie in [0, 1]".into(),
            ));
        }
        if self.dark_fraction + self.multiphoton_fraction >= 1.0 {
            return Err(Error::InvalidParameter(
                "dark and multiphoton fractions must sum below 1".into(),
            ));
        }
        Ok(())
    }
}

/* Ancilla model **************************************************************/

/// Squeezed (generally thermal) ancilla resource, described by its linear
/// quadrature variances in shot-noise units (vacuum = 1/2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AncillaModel {
    pub squeezed_variance: f64,
    pub antisqueezed_variance: f64,
    pub orientation: SqueezeOrientation,
}

impl AncillaModel {
    /// Pure minimum-uncertainty ancilla with squeezing parameter `r`.
    pub fn pure(r: f64, orientation: SqueezeOrientation) -> Self {
        AncillaModel {
            squeezed_variance: 0.5 * (-2.0 * r).exp(),
            antisqueezed_variance: 0.5 * (2.0 * r).exp(),
            orientation,
        }
    }

    /// Pure ancilla specified by its squeezed variance.
    pub fn pure_with_variance(squeezed_variance: f64, orientation: SqueezeOrientation) -> Self {
        AncillaModel {
            squeezed_variance,
            antisqueezed_variance: 0.25 / squeezed_variance,
            orientation,
        }
    }

    /// Variances from squeezing/antisqueezing levels in dB relative to shot
    /// noise: `v = (1/2)·10^{dB/10}`.
    pub fn from_db(squeezing_db: f64, antisqueezing_db: f64, orientation: SqueezeOrientation) -> Self {
        AncillaModel {
            squeezed_variance: 0.5 * 10f64.powf(squeezing_db / 10.0),
            antisqueezed_variance: 0.5 * 10f64.powf(antisqueezing_db / 10.0),
            orientation,
        }
    }

    /// The measured ancilla resource: -6.8 dB squeezing, +10.3 dB
    /// antisqueezing.
    pub fn experimental(orientation: SqueezeOrientation) -> Self {
        Self::from_db(-6.8, 10.3, orientation)
    }

    pub fn vacuum(orientation: SqueezeOrientation) -> Self {
        AncillaModel {
            squeezed_variance: 0.5,
            antisqueezed_variance: 0.5,
            orientation,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.squeezed_variance > 0.0)
            || self.squeezed_variance > 0.5 + 1e-12
            || self.antisqueezed_variance < 0.5 - 1e-12
        {
            return Err(Error::InvalidParameter(format!(
                "ancilla variances must satisfy v_sq <= 1/2 <= v_anti, got ({}, {})",
                self.squeezed_variance, self.antisqueezed_variance
            )));
        }
        if self.squeezed_variance * self.antisqueezed_variance < 0.25 - 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "ancilla variances violate the uncertainty relation: {} * {} < 1/4",
                self.squeezed_variance, self.antisqueezed_variance
            )));
        }
        Ok(())
    }

    /// Antisqueezed variance of the pure part, `1/(4 v_sq)`.
    pub fn pure_antisqueezed_variance(&self) -> f64 {
        0.25 / self.squeezed_variance
    }

    /// Classical excess noise variance in the antisqueezed quadrature,
    /// `v_anti - 1/(4 v_sq)` (zero for a pure ancilla).
    pub fn classical_noise_variance(&self) -> f64 {
        (self.antisqueezed_variance - self.pure_antisqueezed_variance()).max(0.0)
    }

    /// Thermal occupation reproducing the variance product.
    pub fn thermal_occupation(&self) -> f64 {
        ((4.0 * self.squeezed_variance * self.antisqueezed_variance).sqrt() - 1.0) / 2.0
    }
}

/* Unitaries ******************************************************************/

/// Squeezing unitary `S(γ) = exp(γ(a†² - a²)/2)`.
///
/// `Var(x) → e^{2γ} Var(x)`, `Var(p) → e^{-2γ} Var(p)`: positive `γ` squeezes
/// the `p` quadrature. Built by exponentiating the generator at cutoff `2N`
/// and projecting to `N`, which keeps the truncation edge clean; the returned
/// operator is therefore a slight contraction whose deficit is checked on
/// application.
pub fn squeeze_unitary(gamma: f64, dim: usize) -> ModeOperator {
    let big = 2 * dim;
    let mut gen = CMat::zeros(big, big);
    for n in 0..big - 2 {
        // a†² - a² couples n <-> n+2 with matrix element sqrt((n+1)(n+2)).
        let g = 0.5 * gamma * (((n + 1) * (n + 2)) as f64).sqrt();
        gen[(n + 2, n)] = C64::new(g, 0.0);
        gen[(n, n + 2)] = C64::new(-g, 0.0);
    }
    let full = expm_antihermitian(&gen);
    let mut proj = CMat::zeros(dim, dim);
    for r in 0..dim {
        for c in 0..dim {
            proj[(r, c)] = full[(r, c)];
        }
    }
    ModeOperator::new(proj, OperatorKind::General)
}

/// Displacement `D(α) = exp(α a† - α* a)`; `D(α)|0⟩ = |α⟩`.
pub fn displace(alpha: C64, dim: usize) -> ModeOperator {
    let mut gen = CMat::zeros(dim, dim);
    for n in 1..dim {
        let s = (n as f64).sqrt();
        gen[(n, n - 1)] = alpha * s;
        gen[(n - 1, n)] = -alpha.conj() * s;
    }
    ModeOperator::new(expm_antihermitian(&gen), OperatorKind::General)
}

/// Phase-space rotation `R(θ) = exp(-iθ n̂)`, diagonal `e^{-inθ}`.
///
/// Fixed so that `R(π/2)† x R(π/2) = p`.
pub fn rotate(theta: f64, dim: usize) -> ModeOperator {
    let mut m = CMat::zeros(dim, dim);
    for n in 0..dim {
        m[(n, n)] = C64::from_polar(1.0, -(n as f64) * theta);
    }
    ModeOperator::new(m, OperatorKind::General)
}

/// Two-mode beam splitter with transmittance `T`, Heisenberg action
///
/// ```text
/// x_a' =  √T x_a + √(1-T) x_b        x_b' = -√(1-T) x_a + √T x_b
/// ```
///
/// (same for p). Built block-by-block on the photon-number-preserving
/// subspaces, so the cost stays polynomial in the cutoff.
pub fn beam_splitter(transmittance: f64, dim_per_mode: usize) -> Result<TwoModeOperator> {
    if !(transmittance > 0.0 && transmittance < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "beam splitter transmittance must lie in (0, 1), got {transmittance}"
        )));
    }
    let n = dim_per_mode;
    let phi = transmittance.sqrt().acos();
    let mut mat = CMat::zeros(n * n, n * n);
    // The generator φ(a†b - ab†) preserves m + k; exponentiate each block.
    for total in 0..=(2 * n - 2) {
        let lo = total.saturating_sub(n - 1);
        let hi = total.min(n - 1);
        let size = hi - lo + 1;
        let mut block = CMat::zeros(size, size);
        for (row, m) in (lo..=hi).enumerate() {
            // a†b: |m, total-m⟩ -> sqrt((m+1)(total-m)) |m+1, total-m-1⟩.
            if m + 1 <= hi {
                let amp = phi * (((m + 1) * (total - m)) as f64).sqrt();
                block[(row + 1, row)] = C64::new(amp, 0.0);
                block[(row, row + 1)] = C64::new(-amp, 0.0);
            }
        }
        let u = expm_antihermitian(&block);
        for (row, m_out) in (lo..=hi).enumerate() {
            for (col, m_in) in (lo..=hi).enumerate() {
                mat[(m_out * n + (total - m_out), m_in * n + (total - m_in))] = u[(row, col)];
            }
        }
    }
    Ok(TwoModeOperator {
        dim_per_mode: n,
        mat,
    })
}

/* Channels and preparation ***************************************************/

/// Pure-loss channel with efficiency `η` (beam splitter against vacuum,
/// summed over the lost photons). Exactly trace preserving on the truncated
/// space.
pub fn loss_channel(rho: &DensityMatrix, eta: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidParameter(format!(
            "loss efficiency must lie in [0, 1], got {eta}"
        )));
    }
    let dim = rho.dim();
    if eta == 1.0 {
        return Ok(rho.clone());
    }
    let lf = crate::fock::log_factorials(dim);
    let mut out = CMat::zeros(dim, dim);
    let ln_eta = if eta > 0.0 { eta.ln() } else { f64::NEG_INFINITY };
    let ln_loss = (1.0 - eta).ln();
    for k in 0..dim {
        // Kraus element A_k drops k photons:
        // ⟨n-k|A_k|n⟩ = sqrt(C(n,k) η^{n-k} (1-η)^k).
        let mut coeff = vec![0.0; dim];
        for n in k..dim {
            let ln_c = lf[n] - lf[k] - lf[n - k];
            let ln_w = if eta == 0.0 {
                if n == k {
                    ln_c + k as f64 * ln_loss
                } else {
                    f64::NEG_INFINITY
                }
            } else {
                ln_c + (n - k) as f64 * ln_eta + k as f64 * ln_loss
            };
            coeff[n] = (0.5 * ln_w).exp();
        }
        for r in k..dim {
            for c in k..dim {
                out[(r - k, c - k)] += rho.element(r, c) * coeff[r] * coeff[c];
            }
        }
    }
    Ok(DensityMatrix::new_unchecked(out))
}

/// Photon subtraction `ρ → a ρ a† / tr`, with the success probability
/// `tr(a ρ a†) = ⟨n̂⟩` reported.
pub fn photon_subtract(rho: &DensityMatrix) -> Result<(DensityMatrix, f64)> {
    let dim = rho.dim();
    let a = annihilation(dim);
    let m = a.matrix() * rho.matrix() * a.matrix().adjoint();
    let p = m.trace().re;
    if p < 1e-12 {
        return Err(Error::ZeroProbability(
            "photon subtraction from a (near-)vacuum state".into(),
        ));
    }
    Ok((DensityMatrix::new_unchecked(m / C64::from(p)), p))
}

/// Realistic heralded single photon: loss on `|1⟩⟨1|` first, then incoherent
/// dark-count vacuum and two-photon admixtures.
pub fn prepare_experimental_photon(budget: &LossBudget, dim: usize) -> Result<DensityMatrix> {
    budget.validate()?;
    let one = Ket::fock(1, dim)?.to_density_matrix();
    let lossy = loss_channel(&one, budget.eta_detection * budget.eta_propagation)?;
    let vac = Ket::fock(0, dim)?.to_density_matrix();
    let two = Ket::fock(2, dim)?.to_density_matrix();
    DensityMatrix::mixture(&[
        (
            1.0 - budget.dark_fraction - budget.multiphoton_fraction,
            lossy,
        ),
        (budget.dark_fraction, vac),
        (budget.multiphoton_fraction, two),
    ])
}

/// Gaussian state with the ancilla's exact quadrature variances: a squeezed
/// thermal state, built as `S` applied to the thermal state whose occupation
/// matches the variance product.
pub fn prepare_squeezed_thermal(model: &AncillaModel, dim: usize) -> Result<DensityMatrix> {
    model.validate()?;
    let nbar = model.thermal_occupation();
    let mut th = CMat::zeros(dim, dim);
    let ratio = nbar / (1.0 + nbar);
    let mut w = 1.0 / (1.0 + nbar);
    let mut total = 0.0;
    for n in 0..dim {
        th[(n, n)] = C64::new(w, 0.0);
        total += w;
        w *= ratio;
    }
    if 1.0 - total > RENORM_DEFICIT_LIMIT {
        return Err(Error::TailWeight {
            deficit: 1.0 - total,
            limit: RENORM_DEFICIT_LIMIT,
        });
    }
    let thermal = DensityMatrix::renormalized(th, RENORM_DEFICIT_LIMIT)?.0;
    // v_sq = e^{-2r} (2n̄+1)/2 fixes r; the orientation fixes the sign of γ.
    let r = 0.5 * ((2.0 * nbar + 1.0) / (2.0 * model.squeezed_variance)).ln();
    let gamma = match model.orientation {
        SqueezeOrientation::SqueezeX => -r,
        SqueezeOrientation::SqueezeP => r,
    };
    let s = squeeze_unitary(gamma, dim);
    s.conjugate(&thermal)
}
