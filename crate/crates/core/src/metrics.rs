//! Figures of merit for the particle/wave conversion: coherent-state
//! distinguishability `D(β)` and interference `V(β)`, classical interference
//! benchmarks, the anti-correlation witness `A`, and fitting of the best
//! matching odd superposition amplitude.

use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, Ket, Parity};
use crate::numeric::nelder_mead;
use crate::{C64, CVec};
use serde::Serialize;
use std::io::Write;

/// `D(β) = (⟨β|ρ|β⟩ + ⟨-β|ρ|-β⟩)/2`: overlap with the two candidate
/// coherent peaks.
pub fn distinguishability(rho: &DensityMatrix, beta: C64) -> Result<f64> {
    let plus = Ket::coherent(beta, rho.dim())?;
    let minus = Ket::coherent(-beta, rho.dim())?;
    let d = 0.5 * (rho.fidelity_pure(&plus)? + rho.fidelity_pure(&minus)?);
    Ok(d)
}

/// `V(β) = (⟨β|ρ|-β⟩ + ⟨-β|ρ|β⟩)/2`: the off-diagonal interference factor.
///
/// The two matrix elements are conjugates for Hermitian `ρ` (asserted at
/// 1e-10), so the symmetrized value is real. Negative values witness
/// coherence beyond balanced coherent mixtures.
pub fn interference(rho: &DensityMatrix, beta: C64) -> Result<f64> {
    let plus = Ket::coherent(beta, rho.dim())?;
    let minus = Ket::coherent(-beta, rho.dim())?;
    let fwd = sandwich(rho, &plus, &minus);
    let bwd = sandwich(rho, &minus, &plus);
    debug_assert!((fwd - bwd.conj()).norm() < 1e-10);
    Ok(0.5 * (fwd + bwd).re)
}

/// `⟨bra|ρ|ket⟩`.
fn sandwich(rho: &DensityMatrix, bra: &Ket, ket: &Ket) -> C64 {
    let b: &CVec = bra.amplitudes();
    let k: &CVec = ket.amplitudes();
    (b.adjoint() * rho.matrix() * k)[(0, 0)]
}

/* Metric curves **************************************************************/

/// `D` and `V` sampled along an axis (β magnitude or probe phase).
#[derive(Debug, Clone, Serialize)]
pub struct MetricCurve {
    pub axis: Vec<f64>,
    pub d_values: Vec<f64>,
    pub v_values: Vec<f64>,
    pub state_label: String,
    /// Location and value of the maximum of `D` on the grid.
    pub d_extremum: (f64, f64),
    /// Location and value of the minimum of `V` on the grid.
    pub v_extremum: (f64, f64),
}

impl MetricCurve {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "axis,D,V")?;
        for ((a, d), v) in self.axis.iter().zip(&self.d_values).zip(&self.v_values) {
            writeln!(out, "{},{},{}", a, d, v)?;
        }
        Ok(())
    }
}

/// `D(β e^{iφ})`, `V(β e^{iφ})` sampled over β magnitudes at fixed phase.
pub fn metric_curve_beta(
    rho: &DensityMatrix,
    betas: &[f64],
    phase: f64,
    label: &str,
) -> Result<MetricCurve> {
    if betas.is_empty() {
        return Err(Error::EmptyInput("beta grid".into()));
    }
    let mut d_values = Vec::with_capacity(betas.len());
    let mut v_values = Vec::with_capacity(betas.len());
    for &b in betas {
        let probe = C64::from_polar(b, phase);
        d_values.push(distinguishability(rho, probe)?);
        v_values.push(interference(rho, probe)?);
    }
    let (d_extremum, v_extremum) = extrema(betas, &d_values, &v_values);
    Ok(MetricCurve {
        axis: betas.to_vec(),
        d_values,
        v_values,
        state_label: label.to_string(),
        d_extremum,
        v_extremum,
    })
}

/// `D(β₀ e^{iφ})`, `V(β₀ e^{iφ})` over probe phases at fixed magnitude.
pub fn metric_curve_phase(
    rho: &DensityMatrix,
    beta0: f64,
    phases: &[f64],
    label: &str,
) -> Result<MetricCurve> {
    if phases.is_empty() {
        return Err(Error::EmptyInput("phase grid".into()));
    }
    let mut d_values = Vec::with_capacity(phases.len());
    let mut v_values = Vec::with_capacity(phases.len());
    for &phi in phases {
        let probe = C64::from_polar(beta0, phi);
        d_values.push(distinguishability(rho, probe)?);
        v_values.push(interference(rho, probe)?);
    }
    let (d_extremum, v_extremum) = extrema(phases, &d_values, &v_values);
    Ok(MetricCurve {
        axis: phases.to_vec(),
        d_values,
        v_values,
        state_label: label.to_string(),
        d_extremum,
        v_extremum,
    })
}

fn extrema(axis: &[f64], d: &[f64], v: &[f64]) -> ((f64, f64), (f64, f64)) {
    let mut dmax = (axis[0], d[0]);
    let mut vmin = (axis[0], v[0]);
    for i in 1..axis.len() {
        if d[i] > dmax.1 {
            dmax = (axis[i], d[i]);
        }
        if v[i] < vmin.1 {
            vmin = (axis[i], v[i]);
        }
    }
    (dmax, vmin)
}

/* Classical benchmarks *******************************************************/

/// Smallest interference value achievable by mixtures of coherent states at
/// real probe `β`: by convexity the extremum is attained on a pure coherent
/// state `|γ_c⟩`, where `V = e^{-β²-|γ_c|²} cos(2β Im γ_c)`.
pub fn coherent_mixture_bound(beta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "probe amplitude must be positive, got {beta}"
        )));
    }
    let f = |y: f64| (-beta * beta - y * y).exp() * (2.0 * beta * y).cos();
    // The first negative lobe of the cosine sits near y = π/(2β); scan far
    // enough to contain it, then refine by golden section.
    let y_hi = (std::f64::consts::PI / beta + 4.0).max(6.0);
    let n = 4001;
    let mut best = (0.0, f(0.0));
    for i in 0..n {
        let y = y_hi * i as f64 / (n - 1) as f64;
        let v = f(y);
        if v < best.1 {
            best = (y, v);
        }
    }
    let step = y_hi / (n - 1) as f64;
    let (value, _y) = golden_min(&f, (best.0 - step).max(0.0), best.0 + step);
    Ok(value.min(best.1))
}

fn golden_min<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> (f64, f64) {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (fc, c)
    } else {
        (fd, d)
    }
}

/// Fock amplitudes of the pure Gaussian `D(δ) S(ζ)|0⟩` by the standard
/// recurrence; cheap enough for optimizer inner loops.
fn gaussian_pure_amplitudes(delta: C64, zeta: C64, dim: usize) -> CVec {
    let r = zeta.norm();
    let phase = if r > 0.0 { zeta / r } else { C64::new(1.0, 0.0) };
    let et = phase * r.tanh();
    // a|ψ⟩ = [δ - δ* e^{iφ} tanh r]|ψ⟩ + e^{iφ} tanh r a†|ψ⟩.
    let lin = delta - delta.conj() * et;
    let mut amps = CVec::zeros(dim);
    amps[0] = C64::new(1.0, 0.0);
    for n in 0..dim - 1 {
        let prev = if n == 0 { C64::new(0.0, 0.0) } else { amps[n - 1] };
        amps[n + 1] =
            (lin * amps[n] + et * (n as f64).sqrt() * prev) / C64::from(((n + 1) as f64).sqrt());
    }
    let norm = amps.norm();
    amps / C64::from(norm)
}

/// Interference of a pure Gaussian state at real probe `β`.
fn gaussian_interference(beta: f64, params: &[f64], dim: usize) -> f64 {
    let delta = C64::new(params[0], params[1]);
    let zeta = C64::new(params[2], params[3]);
    let psi = gaussian_pure_amplitudes(delta, zeta, dim);
    let plus = Ket::coherent(C64::new(beta, 0.0), dim).unwrap();
    let minus = Ket::coherent(C64::new(-beta, 0.0), dim).unwrap();
    let a = plus.amplitudes().dotc(&psi);
    let b = psi.dotc(minus.amplitudes());
    (a * b).re
}

/// Smallest interference value achievable by mixtures of Gaussian states:
/// multi-start simplex refinement over displacement and complex squeezing
/// from a coarse deterministic grid (convexity again reduces mixtures to
/// pure extremizers).
pub fn gaussian_mixture_bound(beta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "probe amplitude must be positive, got {beta}"
        )));
    }
    let dim = 48;
    let mut seeds: Vec<(f64, Vec<f64>)> = Vec::new();
    let phases = 16;
    for id in 0..7 {
        let dmag = 0.5 * id as f64;
        for ip in 0..phases {
            let dphi = 2.0 * std::f64::consts::PI * ip as f64 / phases as f64;
            for ir in 0..5 {
                let r = 0.3 * ir as f64;
                for is in 0..phases {
                    let sphi = 2.0 * std::f64::consts::PI * is as f64 / phases as f64;
                    let p = vec![
                        dmag * dphi.cos(),
                        dmag * dphi.sin(),
                        r * sphi.cos(),
                        r * sphi.sin(),
                    ];
                    let v = gaussian_interference(beta, &p, dim);
                    seeds.push((v, p));
                    if r == 0.0 {
                        break; // squeezing phase is irrelevant at r = 0
                    }
                }
            }
            if dmag == 0.0 {
                break;
            }
        }
    }
    // The coherent-only optimum is a Gaussian state too; add it as a seed.
    let coh = coherent_mixture_bound(beta)?;
    {
        let f = |y: f64| (-beta * beta - y * y).exp() * (2.0 * beta * y).cos();
        let y_hi = (std::f64::consts::PI / beta + 4.0).max(6.0);
        let mut best_y = 0.0;
        let mut best_v = f(0.0);
        for i in 0..4001 {
            let y = y_hi * i as f64 / 4000.0;
            if f(y) < best_v {
                best_v = f(y);
                best_y = y;
            }
        }
        seeds.push((best_v, vec![0.0, best_y, 0.0, 0.0]));
    }
    seeds.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut best = f64::INFINITY;
    let mut any_converged = false;
    for (_, seed) in seeds.iter().take(5) {
        let result = nelder_mead(
            |p| gaussian_interference(beta, p, dim),
            seed,
            0.15,
            1e-12,
            800,
        );
        any_converged |= result.converged;
        if result.value < best {
            best = result.value;
        }
    }
    if !any_converged {
        return Err(Error::OptimizerFailure(format!(
            "no simplex start converged at beta = {beta}; best value {best}"
        )));
    }
    Ok(best.min(coh))
}

/* Anti-correlation ***********************************************************/

/// Result of the split-detection measurement.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AnticorrelationResult {
    /// Probability that both detectors click.
    pub p_c: f64,
    /// Marginal probability that a given detector clicks.
    pub p_s: f64,
    /// `A = p_c / p_s²`.
    pub a_value: f64,
    pub detector_efficiency: f64,
}

/// Split the state against vacuum on a balanced beam splitter and read both
/// arms with on/off detectors of efficiency `η`.
///
/// The balanced splitter acting on a vacuum port has the closed binomial
/// action `U|m,0⟩ = Σ_k √C(m,k) (√T)^{m-k} (-√(1-T))^k |m-k, k⟩`, which this
/// routine uses directly; agreement with the dense two-mode operator is
/// covered by tests.
pub fn anticorrelation(rho: &DensityMatrix, eta: f64) -> Result<AnticorrelationResult> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "detector efficiency must lie in (0, 1], got {eta}"
        )));
    }
    let dim = rho.dim();
    let lf = crate::fock::log_factorials(dim);
    let components = rho.eigen_components(1e-14);
    let half = 0.5f64;
    let miss = 1.0 - eta;
    let mut p_no_1 = 0.0;
    let mut p_no_2 = 0.0;
    let mut p_no_both = 0.0;
    let mut total = 0.0;
    for (w, chi) in &components {
        for m in 0..dim {
            let am = chi.amp(m);
            if am.norm_sqr() < 1e-300 {
                continue;
            }
            // Joint distribution over (m-k, k) after the splitter.
            for k in 0..=m {
                let ln_c = lf[m] - lf[k] - lf[m - k];
                let prob = w * am.norm_sqr() * ln_c.exp() * half.powi(m as i32);
                let n1 = m - k;
                let n2 = k;
                total += prob;
                p_no_1 += prob * miss.powi(n1 as i32);
                p_no_2 += prob * miss.powi(n2 as i32);
                p_no_both += prob * miss.powi(m as i32);
            }
        }
    }
    // total is the trace (≈ 1); fold any residue for strict probabilities.
    p_no_1 /= total;
    p_no_2 /= total;
    p_no_both /= total;
    let p_s = 1.0 - p_no_1;
    let p_c = (1.0 - p_no_1 - p_no_2 + p_no_both).max(0.0);
    if p_s <= 1e-14 {
        return Err(Error::ZeroProbability(
            "no detector ever clicks (vacuum input); A is undefined".into(),
        ));
    }
    Ok(AnticorrelationResult {
        p_c,
        p_s,
        a_value: p_c / (p_s * p_s),
        detector_efficiency: eta,
    })
}

/// Closed-form `A` for the ideal odd superposition of amplitude `α` with
/// ideal detectors; the Fock-space computation must reproduce it.
pub fn odd_css_anticorrelation(alpha: f64) -> f64 {
    let u = 1.0 - 2.0 * (alpha * alpha / 2.0).cosh();
    1.0 - 1.0 / (u * u)
}

/* Amplitude fitting **********************************************************/

/// `argmax_α fidelity(ρ, |α⟩ - |-α⟩)`: coarse scan plus golden-section
/// refinement. Returns `(α*, fidelity*)`.
pub fn fit_css_amplitude(rho: &DensityMatrix) -> Result<(f64, f64)> {
    let dim = rho.dim();
    let objective = |alpha: f64| -> f64 {
        if alpha <= 0.0 {
            // α → 0 degenerates to |1⟩.
            let one = Ket::fock(1, dim).unwrap();
            return rho.fidelity_pure(&one).unwrap();
        }
        match Ket::css(C64::new(alpha, 0.0), Parity::Odd, dim) {
            Ok(cat) => rho.fidelity_pure(&cat).unwrap(),
            Err(_) => 0.0,
        }
    };
    let n = 61;
    let hi = 3.0;
    let mut best = (0.0, objective(0.0));
    let mut lo_f = f64::INFINITY;
    let mut hi_f = f64::NEG_INFINITY;
    for i in 0..=n {
        let alpha = hi * i as f64 / n as f64;
        let f = objective(alpha);
        lo_f = lo_f.min(f);
        hi_f = hi_f.max(f);
        if f > best.1 {
            best = (alpha, f);
        }
    }
    if hi_f - lo_f < 1e-12 {
        return Err(Error::OptimizerFailure(
            "amplitude objective is flat; no distinguished optimum".into(),
        ));
    }
    let step = hi / n as f64;
    let neg = |alpha: f64| -objective(alpha);
    let (nv, loc) = golden_min(&neg, (best.0 - step).max(0.0), best.0 + step);
    if -nv >= best.1 {
        Ok((loc, -nv))
    } else {
        Ok(best)
    }
}
