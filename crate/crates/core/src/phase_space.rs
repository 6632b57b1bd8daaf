//! Wigner functions, quadrature marginals and negativity summaries.
//!
//! `W(x, p) = (1/π) tr[ρ D(α) Π D†(α)]` with `α = (x + ip)/√2` and `Π` the
//! photon-number parity, which integrates to one over `dx dp`; the vacuum
//! peaks at `1/π` and `|1⟩` dips to `-1/π` at the origin.

use crate::error::{Error, Result};
use crate::fock::DensityMatrix;
use crate::numeric::hermite_functions;
use crate::{C64, CMat};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Rectangular phase-space grid specification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub np: usize,
}

impl GridSpec {
    /// Symmetric square grid `[-half, half]²`.
    pub fn square(half: f64, points: usize) -> Self {
        GridSpec {
            x_min: -half,
            x_max: half,
            nx: points,
            p_min: -half,
            p_max: half,
            np: points,
        }
    }

    pub fn xs(&self) -> Vec<f64> {
        linspace(self.x_min, self.x_max, self.nx)
    }

    pub fn ps(&self) -> Vec<f64> {
        linspace(self.p_min, self.p_max, self.np)
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::square(5.0, 201)
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| lo + step * i as f64).collect()
}

/// Sampled Wigner function, `values[ix * np + ip] = W(x_ix, p_ip)`.
#[derive(Debug, Clone)]
pub struct WignerGrid {
    pub spec: GridSpec,
    pub values: Vec<f64>,
}

impl WignerGrid {
    pub fn value(&self, ix: usize, ip: usize) -> f64 {
        self.values[ix * self.spec.np + ip]
    }

    /// Riemann sum of `W dx dp` over the grid.
    pub fn integral(&self) -> f64 {
        let dx = (self.spec.x_max - self.spec.x_min) / (self.spec.nx - 1).max(1) as f64;
        let dp = (self.spec.p_max - self.spec.p_min) / (self.spec.np - 1).max(1) as f64;
        self.values.iter().sum::<f64>() * dx * dp
    }

    /// Riemann sum of `|W| dx dp`.
    pub fn abs_integral(&self) -> f64 {
        let dx = (self.spec.x_max - self.spec.x_min) / (self.spec.nx - 1).max(1) as f64;
        let dp = (self.spec.p_max - self.spec.p_min) / (self.spec.np - 1).max(1) as f64;
        self.values.iter().map(|v| v.abs()).sum::<f64>() * dx * dp
    }

    pub fn min(&self) -> (f64, (f64, f64)) {
        let xs = self.spec.xs();
        let ps = self.spec.ps();
        let mut best = (f64::INFINITY, (0.0, 0.0));
        for (ix, &x) in xs.iter().enumerate() {
            for (ip, &p) in ps.iter().enumerate() {
                let v = self.value(ix, ip);
                if v < best.0 {
                    best = (v, (x, p));
                }
            }
        }
        best
    }

    /// CSV with a `#` grid-spec header and `x,p,w` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "# x_min={} x_max={} nx={} p_min={} p_max={} np={}",
            self.spec.x_min, self.spec.x_max, self.spec.nx, self.spec.p_min, self.spec.p_max, self.spec.np
        )?;
        writeln!(out, "x,p,w")?;
        let xs = self.spec.xs();
        let ps = self.spec.ps();
        for (ix, &x) in xs.iter().enumerate() {
            for (ip, &p) in ps.iter().enumerate() {
                writeln!(out, "{},{},{}", x, p, self.value(ix, ip))?;
            }
        }
        Ok(())
    }
}

/// Quadrature distribution `pr(x; θ)` on a grid.
#[derive(Debug, Clone)]
pub struct MarginalDistribution {
    pub theta: f64,
    pub xs: Vec<f64>,
    pub pdf: Vec<f64>,
}

impl MarginalDistribution {
    /// Trapezoidal integral of the pdf.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.xs, &self.pdf)
    }

    pub fn mean(&self) -> f64 {
        let weighted: Vec<f64> = self.xs.iter().zip(&self.pdf).map(|(x, p)| x * p).collect();
        trapezoid(&self.xs, &weighted)
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        let weighted: Vec<f64> = self
            .xs
            .iter()
            .zip(&self.pdf)
            .map(|(x, p)| (x - mean) * (x - mean) * p)
            .collect();
        trapezoid(&self.xs, &weighted)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# theta={}", self.theta)?;
        writeln!(out, "x,pdf")?;
        for (x, p) in self.xs.iter().zip(&self.pdf) {
            writeln!(out, "{},{}", x, p)?;
        }
        Ok(())
    }
}

fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/* Wigner evaluation **********************************************************/

/// Reusable displaced-parity evaluator for one state.
///
/// `tr[ρ D(α) Π D†(α)] = tr[ρ D(2α) Π]`, and `D(β)` factors exactly into
/// `e^{-|β|²/2} e^{β a†} e^{-β* a}` whose triangular factors have closed-form
/// entries, so each point costs one banded triple product instead of a matrix
/// exponential.
pub struct WignerEvaluator {
    dim: usize,
    /// `B[m][n] = (-1)^m ρ_{mn}` flattened row-major.
    signed_rho: Vec<C64>,
}

impl WignerEvaluator {
    pub fn new(rho: &DensityMatrix) -> Self {
        let dim = rho.dim();
        let mut signed_rho = vec![C64::new(0.0, 0.0); dim * dim];
        for m in 0..dim {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            for n in 0..dim {
                signed_rho[m * dim + n] = rho.element(m, n) * sign;
            }
        }
        WignerEvaluator { dim, signed_rho }
    }

    /// `W(x, p)`; scratch must hold `2 dim²` complex values.
    fn value_with_scratch(&self, x: f64, p: f64, scratch: &mut [C64]) -> f64 {
        let dim = self.dim;
        let beta = C64::new(x, p) * std::f64::consts::SQRT_2;
        let (lower, upper) = scratch.split_at_mut(dim * dim);
        // lower[n][k] = β^{n-k} sqrt(n!/k!)/(n-k)!   (n ≥ k)
        // upper[k][m] = (-β*)^{m-k} sqrt(m!/k!)/(m-k)!   (m ≥ k)
        let nb = -beta.conj();
        for k in 0..dim {
            lower[k * dim + k] = C64::new(1.0, 0.0);
            upper[k * dim + k] = C64::new(1.0, 0.0);
            for n in k + 1..dim {
                let step = (n as f64).sqrt() / (n - k) as f64;
                lower[n * dim + k] = lower[(n - 1) * dim + k] * beta * step;
                upper[k * dim + n] = upper[k * dim + n - 1] * nb * step;
            }
        }
        // tr[B · e^{βa†} e^{-β*a}] with B = Πρ.
        let mut acc = C64::new(0.0, 0.0);
        for n in 0..dim {
            for m in 0..dim {
                let kmax = n.min(m);
                let mut kernel = C64::new(0.0, 0.0);
                for k in 0..=kmax {
                    kernel += lower[n * dim + k] * upper[k * dim + m];
                }
                // B_{mn} multiplies D_{nm}.
                acc += kernel * self.signed_rho[m * dim + n];
            }
        }
        let envelope = (-0.5 * beta.norm_sqr()).exp();
        envelope * acc.re / std::f64::consts::PI
    }

    pub fn value(&self, x: f64, p: f64) -> f64 {
        let mut scratch = vec![C64::new(0.0, 0.0); 2 * self.dim * self.dim];
        self.value_with_scratch(x, p, &mut scratch)
    }
}

/// Sample the Wigner function on a grid.
///
/// Errors when the grid clearly fails to cover the state (half-width below
/// 2.5 standard deviations of the widest quadrature), since the unit-integral
/// normalization is meaningless on such a window.
pub fn wigner(rho: &DensityMatrix, spec: &GridSpec) -> Result<WignerGrid> {
    let moments = rho.quadrature_moments();
    let sigma = moments.cov[0][0].max(moments.cov[1][1]).sqrt();
    let half = (spec.x_max - spec.x_min).min(spec.p_max - spec.p_min) / 2.0;
    if half < 2.5 * sigma {
        return Err(Error::InvalidParameter(format!(
            "grid half-width {half:.2} does not cover the state (needs >= {:.2})",
            2.5 * sigma
        )));
    }
    let eval = WignerEvaluator::new(rho);
    let xs = spec.xs();
    let ps = spec.ps();
    let dim = rho.dim();
    let values: Vec<f64> = xs
        .par_iter()
        .map_init(
            || vec![C64::new(0.0, 0.0); 2 * dim * dim],
            |scratch, &x| {
                ps.iter()
                    .map(|&p| eval.value_with_scratch(x, p, scratch))
                    .collect::<Vec<f64>>()
            },
        )
        .flatten()
        .collect();
    Ok(WignerGrid { spec: *spec, values })
}

/// Global Wigner minimum: coarse scan plus quadratic refinement.
pub fn wigner_min(rho: &DensityMatrix, half_range: f64, coarse: usize) -> (f64, (f64, f64)) {
    let eval = WignerEvaluator::new(rho);
    let xs = linspace(-half_range, half_range, coarse);
    let dim = rho.dim();
    let rows: Vec<(f64, (f64, f64))> = xs
        .par_iter()
        .map_init(
            || vec![C64::new(0.0, 0.0); 2 * dim * dim],
            |scratch, &x| {
                let mut best = (f64::INFINITY, (x, 0.0));
                for &p in &xs {
                    let v = eval.value_with_scratch(x, p, scratch);
                    if v < best.0 {
                        best = (v, (x, p));
                    }
                }
                best
            },
        )
        .collect();
    let mut best = (f64::INFINITY, (0.0, 0.0));
    for r in rows {
        if r.0 < best.0 {
            best = r;
        }
    }

    // Local quadratic refinement with a shrinking stencil.
    let mut scratch = vec![C64::new(0.0, 0.0); 2 * dim * dim];
    let mut h = 2.0 * half_range / (coarse - 1).max(1) as f64;
    let (mut x0, mut p0) = best.1;
    let mut v0 = best.0;
    for _ in 0..6 {
        let f = |x: f64, p: f64, s: &mut Vec<C64>| eval.value_with_scratch(x, p, s);
        let fxm = f(x0 - h, p0, &mut scratch);
        let fxp = f(x0 + h, p0, &mut scratch);
        let fpm = f(x0, p0 - h, &mut scratch);
        let fpp = f(x0, p0 + h, &mut scratch);
        let dxx = fxp - 2.0 * v0 + fxm;
        let dpp = fpp - 2.0 * v0 + fpm;
        let mut x1 = x0;
        let mut p1 = p0;
        if dxx > 1e-14 {
            x1 = x0 - 0.5 * h * (fxp - fxm) / dxx;
        }
        if dpp > 1e-14 {
            p1 = p0 - 0.5 * h * (fpp - fpm) / dpp;
        }
        // Keep the refinement inside the stencil.
        x1 = x1.clamp(x0 - h, x0 + h);
        p1 = p1.clamp(p0 - h, p0 + h);
        let v1 = f(x1, p1, &mut scratch);
        for (v, x, p) in [
            (fxm, x0 - h, p0),
            (fxp, x0 + h, p0),
            (fpm, x0, p0 - h),
            (fpp, x0, p0 + h),
            (v1, x1, p1),
        ] {
            if v < v0 {
                v0 = v;
                x0 = x;
                p0 = p;
            }
        }
        h *= 0.5;
    }
    (v0, (x0, p0))
}

/// Quadrature distribution `pr(x; θ) = ⟨x,θ|ρ|x,θ⟩` via Hermite functions.
pub fn marginal(rho: &DensityMatrix, theta: f64, xs: &[f64]) -> Result<MarginalDistribution> {
    if xs.is_empty() {
        return Err(Error::EmptyInput("marginal grid".into()));
    }
    let dim = rho.dim();
    let pdf: Vec<f64> = xs
        .par_iter()
        .map(|&x| {
            let psi = hermite_functions(x, dim);
            marginal_value(rho.matrix(), &psi, theta)
        })
        .collect();
    Ok(MarginalDistribution {
        theta,
        xs: xs.to_vec(),
        pdf,
    })
}

pub(crate) fn marginal_value(rho: &CMat, psi: &[f64], theta: f64) -> f64 {
    let dim = psi.len();
    // v_n = e^{inθ} ψ_n; pr = v† ρ v. Split into phase-difference terms so
    // only cos/sin of (n-m)θ appear.
    let mut acc = 0.0;
    for m in 0..dim {
        acc += rho[(m, m)].re * psi[m] * psi[m];
        for n in m + 1..dim {
            let z = rho[(m, n)];
            let ang = (n as f64 - m as f64) * theta;
            acc += 2.0 * psi[m] * psi[n] * (z.re * ang.cos() - z.im * ang.sin());
        }
    }
    acc.max(0.0)
}

/// Volume of Wigner negativity, `∫|W| dx dp − 1`.
///
/// The window is chosen from the state's second moments; for `|1⟩` the value
/// is `4/√e − 2 ≈ 0.42612`.
pub fn negativity_volume(rho: &DensityMatrix) -> Result<f64> {
    let m = rho.quadrature_moments();
    let sigma = m.cov[0][0].max(m.cov[1][1]).sqrt();
    let center = (m.mean[0].abs()).max(m.mean[1].abs());
    let half = center + 5.0 * sigma + 1.0;
    let points = ((2.0 * half / 0.04).ceil() as usize).clamp(201, 601);
    let grid = wigner(rho, &GridSpec::square(half, points))?;
    Ok(grid.abs_integral() - 1.0)
}
