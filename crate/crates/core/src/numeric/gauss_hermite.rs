//! Gauss-Hermite nodes and weights via the Golub-Welsch eigenproblem.

use nalgebra::DMatrix;

/// Nodes and weights for `∫ e^{-t²} f(t) dt ≈ Σ w_i f(t_i)`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Integrate a Gaussian-weighted function: `∫ N(x; mean, var) f(x) dx`.
    ///
    /// The nodes are placed at `mean + sqrt(2 var) t_i` and the weights sum
    /// to one, so a constant integrates exactly.
    pub fn integrate_normal<F: FnMut(f64) -> f64>(&self, mean: f64, var: f64, mut f: F) -> f64 {
        let s = (2.0 * var).sqrt();
        let inv_sqrt_pi = 1.0 / std::f64::consts::PI.sqrt();
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * inv_sqrt_pi * f(mean + s * t))
            .sum()
    }
}

/// Gauss-Hermite rule with `n` nodes (weight function `e^{-t²}`).
///
/// Built from the symmetric tridiagonal Jacobi matrix; nodes are sorted
/// ascending and symmetrized about zero so that the rule is exactly even.
pub fn gauss_hermite(n: usize) -> GaussHermite {
    assert!(n >= 1, "quadrature order must be positive");
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = (k as f64 / 2.0).sqrt();
        jacobi[(k - 1, k)] = b;
        jacobi[(k, k - 1)] = b;
    }
    let eig = jacobi.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let node = eig.eigenvalues[i];
            let q0 = eig.eigenvectors[(0, i)];
            (node, std::f64::consts::PI.sqrt() * q0 * q0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    // Enforce exact ± symmetry of the rule.
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let x = 0.5 * (pairs[j].0 - pairs[i].0);
        let w = 0.5 * (pairs[i].1 + pairs[j].1);
        nodes[i] = -x;
        nodes[j] = x;
        weights[i] = w;
        weights[j] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
        weights[n / 2] = pairs[n / 2].1;
    }
    GaussHermite { nodes, weights }
}
