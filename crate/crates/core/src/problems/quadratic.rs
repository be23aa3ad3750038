//! Quadratic losses `f(theta) = 0.5 ||A theta - b||^2`.

use ndarray::{Array1, Array2};

use super::LipschitzInfo;

/// Ball radius over which gradient-norm bounds for quadratics are quoted;
/// a quadratic is not globally value-Lipschitz.
pub const K_BALL_RADIUS: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadItem {
    pub a: Array2<f64>,
    pub b: Array1<f64>,
    sigma_max: f64,
}

impl QuadItem {
    pub fn new(a: Array2<f64>, b: Array1<f64>) -> Self {
        assert_eq!(a.nrows(), b.len(), "A rows must match b length");
        let sigma_max = largest_eigenvalue_ata(&a);
        Self { a, b, sigma_max }
    }

    pub fn value(&self, theta: &Array1<f64>) -> f64 {
        let r = self.a.dot(theta) - &self.b;
        0.5 * r.dot(&r)
    }

    /// `out += scale * A^T (A theta - b)`.
    pub fn grad_into(&self, theta: &Array1<f64>, scale: f64, out: &mut Array1<f64>) {
        let r = self.a.dot(theta) - &self.b;
        out.scaled_add(scale, &self.a.t().dot(&r));
    }

    /// `sigma_max(A^T A)`, the exact smoothness constant.
    pub fn smoothness(&self) -> f64 {
        self.sigma_max
    }

    /// Gradient-norm bound over `||theta|| <= radius`:
    /// `sigma_max(A^T A) radius + ||A^T b||`.
    pub fn grad_bound(&self, radius: f64) -> f64 {
        let atb = self.a.t().dot(&self.b);
        self.sigma_max * radius + atb.dot(&atb).sqrt()
    }
}

/// Largest eigenvalue of `A^T A` by power iteration. The Rayleigh quotient
/// of a symmetric PSD matrix converges from below, so the estimate never
/// overstates the constant.
fn largest_eigenvalue_ata(a: &Array2<f64>) -> f64 {
    let d = a.ncols();
    if d == 0 {
        return 0.0;
    }
    let mut v = Array1::from_elem(d, 1.0 / (d as f64).sqrt());
    let mut rayleigh = 0.0;
    for _ in 0..1000 {
        let mv = a.t().dot(&a.dot(&v));
        let norm = mv.dot(&mv).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let next = v.dot(&mv);
        v = mv / norm;
        if (next - rayleigh).abs() <= 1e-15 * next.abs().max(1.0) {
            return next;
        }
        rayleigh = next;
    }
    rayleigh
}

pub(super) fn lipschitz(groups: &[Vec<QuadItem>]) -> LipschitzInfo {
    let mut item_l = Vec::new();
    let mut item_k = Vec::new();
    for group in groups {
        for item in group {
            item_l.push(item.smoothness());
            item_k.push(item.grad_bound(K_BALL_RADIUS));
        }
    }
    LipschitzInfo {
        item_l,
        item_k,
        radius: K_BALL_RADIUS,
        empirical: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{arr1, arr2};

    #[test]
    fn power_iteration_recovers_known_spectra() {
        let a = arr2(&[[3.0, 0.0], [0.0, 1.0]]);
        assert_abs_diff_eq!(largest_eigenvalue_ata(&a), 9.0, epsilon = 1e-10);
        let rot = arr2(&[[0.6, -0.8], [0.8, 0.6]]);
        // Orthogonal A: A^T A = I.
        assert_abs_diff_eq!(largest_eigenvalue_ata(&rot), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn grad_bound_dominates_sampled_gradients() {
        let item = QuadItem::new(arr2(&[[1.5, 0.2], [-0.3, 0.9]]), arr1(&[0.4, -1.1]));
        for i in 0..50 {
            let t = i as f64 / 50.0 * std::f64::consts::TAU;
            let theta = arr1(&[K_BALL_RADIUS * t.cos(), K_BALL_RADIUS * t.sin()]);
            let mut g = Array1::zeros(2);
            item.grad_into(&theta, 1.0, &mut g);
            assert!(g.dot(&g).sqrt() <= item.grad_bound(K_BALL_RADIUS) + 1e-9);
        }
    }
}
