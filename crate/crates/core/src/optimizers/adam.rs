//! Adam direction state.
//!
//! Two interchangeable variants:
//!
//! * [`AdamVariant::CoordinateWise`]: the familiar estimator with
//!   bias-corrected first and second moments and a per-coordinate
//!   denominator `sqrt(v_hat) + eps`.
//! * [`AdamVariant::ScalarNorm`]: the form used by the convergence
//!   analysis. The second moment is a single scalar driven by the squared
//!   norm of the incoming direction, `b^2 <- beta2 b^2 + (1 - beta2)
//!   ||g||^2`, and the step is `m / b` with no bias correction. `b` is
//!   seeded at `eps` so it stays strictly positive.
//!
//! The state only produces directions; the caller owns the stepsize and
//! the parameter update.

use ndarray::Array1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdamVariant {
    CoordinateWise,
    ScalarNorm,
}

#[derive(Debug, Clone, Copy)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub variant: AdamVariant,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            variant: AdamVariant::CoordinateWise,
        }
    }
}

impl AdamParams {
    pub fn scalar_norm() -> Self {
        Self {
            variant: AdamVariant::ScalarNorm,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdamState {
    m: Array1<f64>,
    v: Array1<f64>,
    b_sq: f64,
    t: i32,
}

impl AdamState {
    pub fn new(dim: usize, params: &AdamParams) -> Self {
        Self {
            m: Array1::zeros(dim),
            v: Array1::zeros(dim),
            // Scalar variant: b_0 = eps > 0 so m / b is always defined.
            b_sq: params.eps * params.eps,
            t: 0,
        }
    }

    /// Consumes one (possibly optimistic) gradient and returns the update
    /// direction. The caller subtracts `gamma * direction` from the
    /// parameters.
    pub fn direction(&mut self, g: &Array1<f64>, params: &AdamParams) -> Array1<f64> {
        self.t += 1;
        self.m.zip_mut_with(g, |m, &gi| {
            *m = params.beta1 * *m + (1.0 - params.beta1) * gi;
        });
        match params.variant {
            AdamVariant::CoordinateWise => {
                self.v.zip_mut_with(g, |v, &gi| {
                    *v = params.beta2 * *v + (1.0 - params.beta2) * gi * gi;
                });
                let m_corr = 1.0 - params.beta1.powi(self.t);
                let v_corr = 1.0 - params.beta2.powi(self.t);
                let mut dir = Array1::zeros(g.len());
                for i in 0..g.len() {
                    let m_hat = self.m[i] / m_corr;
                    let v_hat = self.v[i] / v_corr;
                    dir[i] = m_hat / (v_hat.sqrt() + params.eps);
                }
                dir
            }
            AdamVariant::ScalarNorm => {
                let norm_sq = g.dot(g);
                self.b_sq = params.beta2 * self.b_sq + (1.0 - params.beta2) * norm_sq;
                &self.m / self.b_sq.sqrt()
            }
        }
    }
}
