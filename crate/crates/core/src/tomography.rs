//! Simulated phase-scanned homodyne acquisition and maximum-likelihood
//! density-matrix reconstruction.
//!
//! Records are `(θ, x)` pairs. Reconstruction iterates the fixed point
//! `ρ ← N[R(ρ) ρ R(ρ)]` with `R(ρ) = Σ_k f_k Π_k / tr(ρ Π_k)`, where the
//! `Π_k` are (optionally efficiency-smeared) binned quadrature projectors;
//! the log-likelihood must not decrease along the way.

use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, ModeOperator, OperatorKind};
use crate::numeric::quadrature_eigenvector;
use crate::phase_space::marginal;
use crate::{C64, CMat, CVec};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

/// One homodyne outcome: local-oscillator phase and quadrature value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRecord {
    pub theta: f64,
    pub x: f64,
}

impl QuadratureRecord {
    /// Wraps the phase into `[0, 2π)`.
    pub fn new(theta: f64, x: f64) -> Self {
        let tau = 2.0 * std::f64::consts::PI;
        QuadratureRecord {
            theta: theta.rem_euclid(tau),
            x,
        }
    }
}

/// Write records as CSV with a `theta,x` header (radians, quadrature units).
pub fn write_records_csv<W: Write>(records: &[QuadratureRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "theta,x")?;
    for r in records {
        writeln!(out, "{},{}", r.theta, r.x)?;
    }
    Ok(())
}

/// Parse a records CSV produced by [`write_records_csv`].
pub fn read_records_csv<R: BufRead>(input: R) -> Result<Vec<QuadratureRecord>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if i == 0 && trimmed.starts_with("theta") {
            continue;
        }
        let mut parts = trimmed.split(',');
        let theta: f64 = parts
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::InvalidParameter(format!("bad record line {}", i + 1)))?;
        let x: f64 = parts
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::InvalidParameter(format!("bad record line {}", i + 1)))?;
        out.push(QuadratureRecord::new(theta, x));
    }
    Ok(out)
}

/* Sampling *******************************************************************/

/// Draw homodyne records from the exact marginals by inverse-CDF sampling on
/// a dense grid. Phase `j` uses RNG stream `j`, so the record set is
/// reproducible from the seed and independent of evaluation order.
pub fn sample_quadratures(
    rho: &DensityMatrix,
    phases: &[f64],
    n_per_phase: usize,
    seed: u64,
) -> Result<Vec<QuadratureRecord>> {
    if phases.is_empty() {
        return Err(Error::EmptyInput("phase list".into()));
    }
    if n_per_phase == 0 {
        return Err(Error::InvalidParameter("n_per_phase must be positive".into()));
    }
    let m = rho.quadrature_moments();
    let sigma = m.cov[0][0].max(m.cov[1][1]).sqrt();
    let center = m.mean[0].abs().max(m.mean[1].abs());
    let half = center + 7.0 * sigma + 1.0;
    let grid_n = 4096;
    let xs: Vec<f64> = (0..grid_n)
        .map(|i| -half + 2.0 * half * i as f64 / (grid_n - 1) as f64)
        .collect();
    let mut records = Vec::with_capacity(phases.len() * n_per_phase);
    for (j, &theta) in phases.iter().enumerate() {
        let pdf = marginal(rho, theta, &xs)?;
        let mut cdf = Vec::with_capacity(grid_n);
        let mut acc = 0.0;
        cdf.push(0.0);
        for i in 1..grid_n {
            acc += 0.5 * (xs[i] - xs[i - 1]) * (pdf.pdf[i - 1] + pdf.pdf[i]);
            cdf.push(acc);
        }
        let total = *cdf.last().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(j as u64 + 1);
        for _ in 0..n_per_phase {
            let u: f64 = rng.random::<f64>() * total;
            let idx = match cdf.binary_search_by(|c| c.partial_cmp(&u).unwrap()) {
                Ok(i) => i.max(1),
                Err(i) => i.clamp(1, grid_n - 1),
            };
            let (c0, c1) = (cdf[idx - 1], cdf[idx]);
            let frac = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
            let x = xs[idx - 1] + frac * (xs[idx] - xs[idx - 1]);
            records.push(QuadratureRecord::new(theta, x));
        }
    }
    Ok(records)
}

/* POVM elements **************************************************************/

/// Binned quadrature projector `Π = w |x,θ⟩⟨x,θ|`, optionally smeared by
/// detector efficiency `η` through the adjoint of the loss channel.
pub fn povm_element(
    theta: f64,
    x: f64,
    bin_width: f64,
    efficiency: f64,
    dim: usize,
) -> Result<ModeOperator> {
    if !(bin_width > 0.0) {
        return Err(Error::InvalidParameter("bin width must be positive".into()));
    }
    if !(efficiency > 0.0 && efficiency <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "efficiency must lie in (0, 1], got {efficiency}"
        )));
    }
    let xi = CVec::from_vec(quadrature_eigenvector(x, theta, dim));
    let proj = (&xi * xi.adjoint()).scale(bin_width);
    if efficiency == 1.0 {
        return Ok(ModeOperator::new(proj, OperatorKind::General));
    }
    Ok(ModeOperator::new(
        loss_adjoint(&proj, efficiency),
        OperatorKind::General,
    ))
}

/// Heisenberg-picture loss: `Λ†(Π) = Σ_k A_k† Π A_k`.
fn loss_adjoint(pi: &CMat, eta: f64) -> CMat {
    let dim = pi.nrows();
    let lf = crate::fock::log_factorials(dim);
    let mut out = CMat::zeros(dim, dim);
    let ln_eta = eta.ln();
    let ln_loss = (1.0 - eta).ln();
    for k in 0..dim {
        let mut coeff = vec![0.0; dim];
        for n in k..dim {
            let ln_c = lf[n] - lf[k] - lf[n - k];
            coeff[n] = (0.5 * (ln_c + (n - k) as f64 * ln_eta + k as f64 * ln_loss)).exp();
        }
        // (A_k† Π A_k)_{rc} = coeff_r coeff_c Π_{r-k, c-k}.
        for r in k..dim {
            for c in k..dim {
                out[(r, c)] += pi[(r - k, c - k)] * coeff[r] * coeff[c];
            }
        }
    }
    out
}

/* Reconstruction *************************************************************/

/// Outcome of a maximum-likelihood reconstruction.
#[derive(Debug, Clone)]
pub struct ReconstructionReport {
    pub rho: DensityMatrix,
    pub iterations: usize,
    pub log_likelihood_trace: Vec<f64>,
    pub converged: bool,
    pub efficiency_assumed: f64,
    /// Fewer records than dim² were supplied.
    pub underdetermined: bool,
}

/// Iterative `RρR` maximum-likelihood reconstruction from binned records.
///
/// Records are grouped by phase and binned in `x` (default width 0.1 unless
/// overridden) before iterating; `efficiency` below one smears the POVM by
/// the loss adjoint. Stops when the log-likelihood gain drops below `tol`.
pub fn maxlik_reconstruct(
    records: &[QuadratureRecord],
    dim: usize,
    efficiency: f64,
    bin_width: f64,
    max_iters: usize,
    tol: f64,
) -> Result<ReconstructionReport> {
    if records.is_empty() {
        return Err(Error::EmptyInput("no quadrature records".into()));
    }
    if !(bin_width > 0.0) {
        return Err(Error::InvalidParameter("bin width must be positive".into()));
    }
    let underdetermined = records.len() < dim * dim;

    // Group by phase bit-pattern (sampled sets repeat phases exactly), then
    // bin in x.
    let mut groups: Vec<(u64, f64, Vec<f64>)> = Vec::new();
    for r in records {
        let key = r.theta.to_bits();
        match groups.iter_mut().find(|g| g.0 == key) {
            Some(g) => g.2.push(r.x),
            None => groups.push((key, r.theta, vec![r.x])),
        }
    }

    struct BinnedElement {
        /// Quadrature eigenvectors across the bin (3-point Gauss-Legendre),
        /// each carrying its share of the bin width.
        xis: Vec<(f64, CVec)>,
        smeared: Option<CMat>,
        count: f64,
    }
    // Gauss-Legendre abscissas on [-1/2, 1/2] so each element integrates its
    // projector over the bin instead of sampling the center.
    let gl_nodes = [-0.5 * (0.6f64).sqrt(), 0.0, 0.5 * (0.6f64).sqrt()];
    let gl_weights = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];
    let mut elements: Vec<BinnedElement> = Vec::new();
    for (_, theta, xs) in &groups {
        use std::collections::BTreeMap;
        let mut bins: BTreeMap<i64, usize> = BTreeMap::new();
        for &x in xs {
            *bins.entry((x / bin_width).floor() as i64).or_insert(0) += 1;
        }
        for (bin, count) in bins {
            let x_center = (bin as f64 + 0.5) * bin_width;
            let xis: Vec<(f64, CVec)> = gl_nodes
                .iter()
                .zip(&gl_weights)
                .map(|(&node, &w)| {
                    let x = x_center + node * bin_width;
                    (
                        w * bin_width,
                        CVec::from_vec(quadrature_eigenvector(x, *theta, dim)),
                    )
                })
                .collect();
            let smeared = if efficiency < 1.0 {
                let mut proj = CMat::zeros(dim, dim);
                for (w, xi) in &xis {
                    proj += (xi * xi.adjoint()).scale(*w);
                }
                Some(loss_adjoint(&proj, efficiency))
            } else {
                None
            };
            elements.push(BinnedElement {
                xis,
                smeared,
                count: count as f64,
            });
        }
    }

    let n_total: f64 = elements.iter().map(|e| e.count).sum();
    let mut rho = CMat::identity(dim, dim) / C64::from(dim as f64);
    let mut ll_trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    // tr(ρ Π) for one element.
    let prob = |rho: &CMat, e: &BinnedElement| -> f64 {
        match &e.smeared {
            Some(m) => rho
                .iter()
                .zip(m.transpose().iter())
                .map(|(a, b)| (a * b).re)
                .sum(),
            None => e
                .xis
                .iter()
                .map(|(w, xi)| (xi.adjoint() * rho * xi)[(0, 0)].re * w)
                .sum(),
        }
    };

    let log_likelihood = |rho: &CMat| -> f64 {
        elements
            .iter()
            .map(|e| e.count * prob(rho, e).max(1e-300).ln())
            .sum()
    };

    let mut last_ll = log_likelihood(&rho);
    ll_trace.push(last_ll);
    while iterations < max_iters {
        iterations += 1;
        let mut r_op = CMat::zeros(dim, dim);
        for e in &elements {
            let p = prob(&rho, e).max(1e-300);
            let w = e.count / (n_total * p);
            match &e.smeared {
                Some(m) => r_op += m.scale(w),
                None => {
                    for (bw, xi) in &e.xis {
                        r_op += (xi * xi.adjoint()).scale(w * bw);
                    }
                }
            }
        }
        let next = &r_op * &rho * &r_op;
        let trace = next.trace().re;
        if trace <= 0.0 {
            return Err(Error::ZeroProbability("RρR trace collapsed".into()));
        }
        let next = (&next + next.adjoint()).scale(0.5) / C64::from(trace);
        let ll = log_likelihood(&next);
        if ll < last_ll - 1e-6 {
            // A real descent, not rounding noise: the iteration is broken.
            return Err(Error::LikelihoodDecrease(last_ll - ll));
        }
        if ll < last_ll {
            // Rounding floor reached; keep the better iterate and stop.
            converged = true;
            break;
        }
        rho = next;
        ll_trace.push(ll);
        let gain = ll - last_ll;
        last_ll = ll;
        if gain.abs() < tol {
            converged = true;
            break;
        }
    }

    Ok(ReconstructionReport {
        rho: DensityMatrix::renormalized(rho, 1e-9)?.0,
        iterations,
        log_likelihood_trace: ll_trace,
        converged,
        efficiency_assumed: efficiency,
        underdetermined,
    })
}

/// Default bin width (well under the vacuum width of ~0.707).
pub const DEFAULT_BIN_WIDTH: f64 = 0.1;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{identity, Ket, Parity};
    use crate::gates::loss_channel;
    use approx::assert_relative_eq;

    fn uniform_phases(n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| std::f64::consts::PI * i as f64 / n as f64)
            .collect()
    }

    #[test]
    fn sampling_statistics() {
        let dim = 12;
        let vac = Ket::fock(0, dim).unwrap().to_density_matrix();
        let recs = sample_quadratures(&vac, &[0.0], 100_000, 11).unwrap();
        let mean: f64 = recs.iter().map(|r| r.x).sum::<f64>() / recs.len() as f64;
        let var: f64 =
            recs.iter().map(|r| (r.x - mean) * (r.x - mean)).sum::<f64>() / recs.len() as f64;
        // 5σ window on the sample variance of a Gaussian.
        let se = 0.5 * (2.0 / 100_000.0f64).sqrt();
        assert!((var - 0.5).abs() < 5.0 * se, "variance {var}");

        let one = Ket::fock(1, dim).unwrap().to_density_matrix();
        let recs = sample_quadratures(&one, &[0.3], 100_000, 12).unwrap();
        let x2: f64 = recs.iter().map(|r| r.x * r.x).sum::<f64>() / recs.len() as f64;
        assert!((x2 - 1.5).abs() < 0.03, "⟨x²⟩ = {x2}");

        // Odd superposition: interference node at θ = π/2.
        let cat = Ket::css(C64::new(0.97, 0.0), Parity::Odd, 25)
            .unwrap()
            .to_density_matrix();
        let recs =
            sample_quadratures(&cat, &[std::f64::consts::FRAC_PI_2], 50_000, 13).unwrap();
        let near_zero = recs.iter().filter(|r| r.x.abs() < 0.05).count();
        assert!(near_zero < 60, "{near_zero} samples inside the node");

        // Determinism.
        let a = sample_quadratures(&cat, &uniform_phases(3), 50, 5).unwrap();
        let b = sample_quadratures(&cat, &uniform_phases(3), 50, 5).unwrap();
        assert_eq!(a.len(), b.len());
        for (ra, rb) in a.iter().zip(&b) {
            assert_eq!(ra.x, rb.x);
        }
    }

    #[test]
    fn povm_completeness_and_nodes() {
        let dim = 10;
        // A fine partition over a wide window sums to the identity on the
        // low-index block.
        let bin = 0.05;
        let mut sum = CMat::zeros(dim, dim);
        let mut x = -8.0;
        while x < 8.0 {
            let e = povm_element(0.7, x + 0.5 * bin, bin, 1.0, dim).unwrap();
            sum += e.matrix();
            x += bin;
        }
        let id = identity(dim);
        for r in 0..6 {
            for c in 0..6 {
                let err = (sum[(r, c)] - id.matrix()[(r, c)]).norm();
                assert!(err < 1e-3, "completeness error {err} at ({r},{c})");
            }
        }
        // Node of ψ_1 at the origin.
        let e = povm_element(0.0, 0.0, 0.01, 1.0, dim).unwrap();
        assert!(e.matrix()[(1, 1)].norm() < 1e-12);
        // Efficiency smearing feeds |1⟩ weight into the vacuum response.
        let e_eta = povm_element(0.0, 0.0, 0.01, 0.5, dim).unwrap();
        assert!(e_eta.matrix()[(1, 1)].re > e.matrix()[(1, 1)].re);
    }

    #[test]
    fn reconstructs_vacuum() {
        let dim = 10;
        let vac = Ket::fock(0, dim).unwrap().to_density_matrix();
        let recs = sample_quadratures(&vac, &uniform_phases(12), 4000, 21).unwrap();
        let rep = maxlik_reconstruct(&recs, dim, 1.0, DEFAULT_BIN_WIDTH, 300, 1e-10).unwrap();
        let fid = rep.rho.fidelity_pure(&Ket::fock(0, dim).unwrap()).unwrap();
        assert!(fid > 0.999, "fidelity {fid}");
        for w in rep.log_likelihood_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-10);
        }
    }

    #[test]
    fn reconstructs_lossy_photon_population() {
        let dim = 12;
        let truth = loss_channel(
            &Ket::fock(1, dim).unwrap().to_density_matrix(),
            0.84,
        )
        .unwrap();
        let recs = sample_quadratures(&truth, &uniform_phases(12), 9000, 33).unwrap();
        let rep = maxlik_reconstruct(&recs, dim, 1.0, DEFAULT_BIN_WIDTH, 400, 1e-10).unwrap();
        let p1 = rep.rho.element(1, 1).re;
        assert!((p1 - 0.84).abs() < 0.01, "P(1) = {p1}");
        assert!(rep.rho.validate().is_ok());
    }

    #[test]
    fn round_trip_recovers_wigner_minimum() {
        // Records from the squeezed photon reconstruct to a state whose
        // Wigner minimum matches the direct computation within ±0.01.
        let dim = 30;
        let truth = crate::gates::squeeze_unitary(0.26, dim)
            .apply(&Ket::fock(1, dim).unwrap())
            .unwrap()
            .to_density_matrix();
        let recs = sample_quadratures(&truth, &uniform_phases(12), 8334, 41).unwrap();
        let rep = maxlik_reconstruct(&recs, 15, 1.0, DEFAULT_BIN_WIDTH, 1500, 1e-10).unwrap();
        let (wm_truth, _) = crate::phase_space::wigner_min(&truth, 2.5, 61);
        let (wm_rec, _) = crate::phase_space::wigner_min(&rep.rho, 2.5, 61);
        assert!(
            (wm_truth - wm_rec).abs() < 0.01,
            "Wigner minima {wm_truth:.4} vs {wm_rec:.4}"
        );
    }

    #[test]
    fn reconstructed_photon_is_phase_insensitive() {
        let dim = 12;
        let truth = loss_channel(&Ket::fock(1, dim).unwrap().to_density_matrix(), 0.84).unwrap();
        let recs = sample_quadratures(&truth, &uniform_phases(12), 8334, 23).unwrap();
        let rep = maxlik_reconstruct(&recs, dim, 1.0, DEFAULT_BIN_WIDTH, 800, 1e-10).unwrap();
        let xs: Vec<f64> = (0..601).map(|i| -6.0 + 12.0 * i as f64 / 600.0).collect();
        let mut vars = Vec::new();
        for k in 0..12 {
            let theta = std::f64::consts::PI * k as f64 / 12.0;
            vars.push(
                crate::phase_space::marginal(&rep.rho, theta, &xs)
                    .unwrap()
                    .variance(),
            );
        }
        let vmax = vars.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let vmin = vars.iter().cloned().fold(f64::INFINITY, f64::min);
        let spread = (vmax - vmin) / (vars.iter().sum::<f64>() / vars.len() as f64);
        assert!(spread < 0.02, "variance spread {spread:.4}");
    }

    #[test]
    fn records_csv_round_trip() {
        let recs = vec![
            QuadratureRecord::new(0.0, 0.31),
            QuadratureRecord::new(-0.5, -1.2),
            QuadratureRecord::new(7.0, 2.0),
        ];
        // Phases come back wrapped into [0, 2π).
        let mut buf = Vec::new();
        write_records_csv(&recs, &mut buf).unwrap();
        let back = read_records_csv(&buf[..]).unwrap();
        assert_eq!(back.len(), 3);
        assert!(back.iter().all(|r| (0.0..2.0 * std::f64::consts::PI).contains(&r.theta)));
        assert_relative_eq!(back[1].x, -1.2);
    }
}
