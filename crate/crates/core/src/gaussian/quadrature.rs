use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gauss-Hermite quadrature against the standard normal weight: nodes and
/// positive weights summing to one, exact for polynomials of degree
/// `2 * node_count - 1`.
///
/// Nodes and weights come from the Golub-Welsch eigendecomposition of the
/// Jacobi matrix of the probabilists' Hermite recurrence (zero diagonal,
/// off-diagonal `sqrt(i)`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn gauss_hermite(node_count: usize) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::invalid("node_count", "must be at least 1"));
        }
        let n = node_count;
        let mut jacobi = DMatrix::<f64>::zeros(n, n);
        for i in 1..n {
            let b = (i as f64).sqrt();
            jacobi[(i - 1, i)] = b;
            jacobi[(i, i - 1)] = b;
        }
        let eig = jacobi.symmetric_eigen();
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|j| {
                let node = eig.eigenvalues[j];
                let w = eig.eigenvectors[(0, j)];
                (node, w * w)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

        // The weights already sum to one up to eigensolver round-off;
        // renormalize, then symmetrize node pairs to kill tiny asymmetries.
        let wsum: f64 = pairs.iter().map(|p| p.1).sum();
        for p in pairs.iter_mut() {
            p.1 /= wsum;
        }
        let mut nodes: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let mut weights: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        for i in 0..n / 2 {
            let j = n - 1 - i;
            let mag = 0.5 * (nodes[j] - nodes[i]);
            nodes[i] = -mag;
            nodes[j] = mag;
            let w = 0.5 * (weights[i] + weights[j]);
            weights[i] = w;
            weights[j] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Ok(QuadratureRule { nodes, weights })
    }

    /// Composite Gauss-Legendre rule against the Gaussian weight on
    /// [-10, 10], with a panel boundary at zero. Gauss-Hermite converges
    /// slowly for integrands with a kink at the origin (ReLU, |z|, sign);
    /// panel-aligned Gauss-Legendre keeps every panel analytic and reaches
    /// near machine precision for the piecewise-smooth oracles used in tests.
    pub fn gaussian_composite(panels: usize, points_per_panel: usize) -> Result<Self> {
        if panels == 0 || points_per_panel == 0 {
            return Err(Error::invalid("panels", "panels and points must be at least 1"));
        }
        let panels = if panels % 2 == 1 { panels + 1 } else { panels };
        const HALF_WIDTH: f64 = 12.0;
        let (gl_nodes, gl_weights) = gauss_legendre(points_per_panel)?;
        let panel_width = 2.0 * HALF_WIDTH / panels as f64;
        let mut nodes = Vec::with_capacity(panels * points_per_panel);
        let mut weights = Vec::with_capacity(panels * points_per_panel);
        let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        for p in 0..panels {
            let a = -HALF_WIDTH + p as f64 * panel_width;
            let mid = a + 0.5 * panel_width;
            for (&t, &w) in gl_nodes.iter().zip(&gl_weights) {
                let z = mid + 0.5 * panel_width * t;
                let density = norm * (-0.5 * z * z).exp();
                nodes.push(z);
                weights.push(w * 0.5 * panel_width * density);
            }
        }
        let total: f64 = weights.iter().sum();
        for w in weights.iter_mut() {
            *w /= total;
        }
        Ok(QuadratureRule { nodes, weights })
    }

    /// The default high-accuracy expectation oracle for piecewise-smooth
    /// one-dimensional integrands.
    pub fn oracle_rule() -> Self {
        Self::gaussian_composite(20, 24).expect("static parameters are valid")
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `E_{z ~ N(0,1)}[f(z)]` by the rule.
    pub fn expectation<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        let mut acc = 0.0;
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            let v = f(x);
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("integrand at node {x}")));
            }
            acc += w * v;
        }
        Ok(acc)
    }

    /// `E_{(z1, z2) ~ N(0, I_2)}[f(z1, z2)]` by the tensor-product rule.
    pub fn expectation_2d<F: Fn(f64, f64) -> f64>(&self, f: F) -> Result<f64> {
        let mut acc = 0.0;
        for (&x, &wx) in self.nodes.iter().zip(&self.weights) {
            let mut inner = 0.0;
            for (&y, &wy) in self.nodes.iter().zip(&self.weights) {
                let v = f(x, y);
                if !v.is_finite() {
                    return Err(Error::NonFinite(format!("integrand at node ({x}, {y})")));
                }
                inner += wy * v;
            }
            acc += wx * inner;
        }
        Ok(acc)
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Golub-Welsch.
fn gauss_legendre(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        let b = i as f64 / ((4 * i * i - 1) as f64).sqrt();
        jacobi[(i - 1, i)] = b;
        jacobi[(i, i - 1)] = b;
    }
    let eig = jacobi.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|j| {
            let w = eig.eigenvectors[(0, j)];
            (eig.eigenvalues[j], 2.0 * w * w)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(pairs.into_iter().unzip())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn constant_and_second_moment() {
        let rule = QuadratureRule::gauss_hermite(20).unwrap();
        assert_abs_diff_eq!(rule.expectation(|_| 1.0).unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(rule.expectation(|z| z * z).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn relu_expectation_matches_half_gaussian() {
        // E[ReLU(z)] = 1/sqrt(2*pi)
        let rule = QuadratureRule::oracle_rule();
        let got = rule.expectation(|z| z.max(0.0)).unwrap();
        let want = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        assert_abs_diff_eq!(got, want, epsilon = 1e-10);
    }

    #[test]
    fn exact_on_polynomials_up_to_degree_bound() {
        // E[z^(2m)] = (2m-1)!!, odd moments vanish at the even-moment scale.
        for n in 3..=10usize {
            let rule = QuadratureRule::gauss_hermite(n).unwrap();
            let mut moment = 1.0; // (2m-1)!! running product
            for m in 1..=(2 * n - 1) / 2 {
                moment *= (2 * m - 1) as f64;
                let even = rule.expectation(|z| z.powi(2 * m as i32)).unwrap();
                assert_abs_diff_eq!(even / moment, 1.0, epsilon = 1e-12);
                let odd = rule.expectation(|z| z.powi(2 * m as i32 - 1)).unwrap();
                assert!(odd.abs() <= 1e-12 * moment.max(1.0), "odd moment {odd}");
            }
        }
    }

    #[test]
    fn composite_rule_matches_moments() {
        let rule = QuadratureRule::oracle_rule();
        let mut moment = 1.0;
        for m in 1..=15usize {
            moment *= (2 * m - 1) as f64;
            let even = rule.expectation(|z| z.powi(2 * m as i32)).unwrap();
            assert_abs_diff_eq!(even / moment, 1.0, epsilon = 1e-12);
        }
        // Kinked integrands: E[|z|] = sqrt(2/pi), E[sign(z) z^3] = 2 E[z^3 1{z>0}]
        let e_abs = rule.expectation(|z| z.abs()).unwrap();
        assert_abs_diff_eq!(e_abs, (2.0 / std::f64::consts::PI).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn non_finite_integrand_is_reported() {
        let rule = QuadratureRule::gauss_hermite(5).unwrap();
        assert!(matches!(
            rule.expectation(|z| 1.0 / (z - rule.nodes()[0])),
            Err(Error::NonFinite(_))
        ));
    }
}
