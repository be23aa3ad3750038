//! Cross-checks the crate's Adam state against an independently written
//! reference implementation living entirely in this file. The reference
//! uses plain vectors and textbook update formulas; no code is shared
//! with the crate beyond the parameter values.

use drokit_core::optimizers::{AdamParams, AdamState};
use ndarray::Array1;

/// Textbook Adam with bias correction, written against plain slices.
struct ReferenceCoordinateAdam {
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u32,
}

impl ReferenceCoordinateAdam {
    fn new(dim: usize, beta1: f64, beta2: f64, eps: f64) -> Self {
        Self {
            beta1,
            beta2,
            eps,
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
        }
    }

    fn direction(&mut self, g: &[f64]) -> Vec<f64> {
        self.t += 1;
        let mut out = Vec::with_capacity(g.len());
        for (i, &gi) in g.iter().enumerate() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * gi;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * gi * gi;
            let m_hat = self.m[i] / (1.0 - self.beta1.powi(self.t as i32));
            let v_hat = self.v[i] / (1.0 - self.beta2.powi(self.t as i32));
            out.push(m_hat / (v_hat.sqrt() + self.eps));
        }
        out
    }
}

/// The norm-tracked variant: scalar second moment `b^2` seeded at
/// `eps^2`, step `m / b`, no bias correction.
struct ReferenceScalarAdam {
    beta1: f64,
    beta2: f64,
    m: Vec<f64>,
    b_sq: f64,
}

impl ReferenceScalarAdam {
    fn new(dim: usize, beta1: f64, beta2: f64, eps: f64) -> Self {
        Self {
            beta1,
            beta2,
            m: vec![0.0; dim],
            b_sq: eps * eps,
        }
    }

    fn direction(&mut self, g: &[f64]) -> Vec<f64> {
        let mut norm_sq = 0.0;
        for &gi in g {
            norm_sq += gi * gi;
        }
        self.b_sq = self.beta2 * self.b_sq + (1.0 - self.beta2) * norm_sq;
        let b = self.b_sq.sqrt();
        let mut out = Vec::with_capacity(g.len());
        for (i, &gi) in g.iter().enumerate() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * gi;
            out.push(self.m[i] / b);
        }
        out
    }
}

/// Deterministic, wide-dynamic-range gradient sequence independent of
/// the crate's generators.
fn gradient_at(t: usize, dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|i| {
            let x = (t as f64 * 0.71 + i as f64 * 1.3).sin();
            let scale = 10f64.powi((t % 7) as i32 - 3);
            x * scale
        })
        .collect()
}

#[test]
fn coordinate_variant_tracks_the_reference_for_100_steps() {
    let dim = 5;
    let params = AdamParams::default();
    let mut ours = AdamState::new(dim, &params);
    let mut reference = ReferenceCoordinateAdam::new(dim, 0.9, 0.999, 1e-8);
    for t in 0..100 {
        let g = gradient_at(t, dim);
        let got = ours.direction(&Array1::from_vec(g.clone()), &params);
        let want = reference.direction(&g);
        for i in 0..dim {
            assert!(
                (got[i] - want[i]).abs() <= 1e-12,
                "step {t}, coordinate {i}: {} vs reference {}",
                got[i],
                want[i]
            );
        }
    }
}

#[test]
fn scalar_variant_tracks_the_reference_for_100_steps() {
    let dim = 4;
    let params = AdamParams::scalar_norm();
    let mut ours = AdamState::new(dim, &params);
    let mut reference = ReferenceScalarAdam::new(dim, 0.9, 0.999, 1e-8);
    for t in 0..100 {
        let g = gradient_at(t, dim);
        let got = ours.direction(&Array1::from_vec(g.clone()), &params);
        let want = reference.direction(&g);
        for i in 0..dim {
            let tol = 1e-12 * want[i].abs().max(1.0);
            assert!(
                (got[i] - want[i]).abs() <= tol,
                "step {t}, coordinate {i}: {} vs reference {}",
                got[i],
                want[i]
            );
        }
    }
}
