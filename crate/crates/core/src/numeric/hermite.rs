//! Harmonic-oscillator eigenfunctions in the `[x, p] = i` convention.
//!
//! `ψ_n(x) = H_n(x) e^{-x²/2} / sqrt(2^n n! sqrt(π))`, so the vacuum marginal
//! is `|ψ_0|² = e^{-x²}/sqrt(π)` with variance 1/2.

use crate::C64;

/// Values `ψ_0(x) .. ψ_{n_max-1}(x)` by the stable three-term recurrence.
pub fn hermite_functions(x: f64, n_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max);
    if n_max == 0 {
        return out;
    }
    let psi0 = std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp();
    out.push(psi0);
    if n_max == 1 {
        return out;
    }
    out.push(std::f64::consts::SQRT_2 * x * psi0);
    for n in 2..n_max {
        let nf = n as f64;
        let next = (2.0 / nf).sqrt() * x * out[n - 1] - ((nf - 1.0) / nf).sqrt() * out[n - 2];
        out.push(next);
    }
    out
}

/// Normalized Hermite polynomial values `h_n(x) = ψ_n(x) e^{+x²/2}`.
///
/// Used when the Gaussian part of an integrand is folded into a quadrature
/// weight instead of the function values.
pub fn hermite_polys_normalized(x: f64, n_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max);
    if n_max == 0 {
        return out;
    }
    out.push(std::f64::consts::PI.powf(-0.25));
    if n_max == 1 {
        return out;
    }
    out.push(std::f64::consts::SQRT_2 * x * out[0]);
    for n in 2..n_max {
        let nf = n as f64;
        let next = (2.0 / nf).sqrt() * x * out[n - 1] - ((nf - 1.0) / nf).sqrt() * out[n - 2];
        out.push(next);
    }
    out
}

/// Fock-basis components of the quadrature eigenvector `|x, θ⟩`:
/// `⟨n|x,θ⟩ = e^{i n θ} ψ_n(x)`.
pub fn quadrature_eigenvector(x: f64, theta: f64, dim: usize) -> Vec<C64> {
    let psi = hermite_functions(x, dim);
    let phase = C64::from_polar(1.0, theta);
    let mut rot = C64::new(1.0, 0.0);
    psi.into_iter()
        .map(|p| {
            let v = rot * p;
            rot *= phase;
            v
        })
        .collect()
}
