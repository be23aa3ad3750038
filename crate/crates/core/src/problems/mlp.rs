//! One-hidden-layer tanh network with logistic loss and manual
//! backpropagation. The parameter vector packs, in order: `W1` row-major
//! (`hidden x input`), `b1`, `w2`, `b2`.

use ndarray::Array1;
use rand::Rng as _;
use rand_distr::StandardNormal;

use super::{DroProblem, LipschitzInfo, LossFamily};
use crate::rng::{stream, StreamId};

/// Fixed stream for the Lipschitz probe so reported constants are a
/// property of the instance, not of the caller's seed.
const PROBE_SEED: u64 = 0x4d4c50;
const PROBE_PAIRS: usize = 200;
/// Probe ball radius and the safety factor applied to probed maxima.
const PROBE_RADIUS: f64 = 5.0;
const PROBE_SAFETY: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MlpArch {
    pub input: usize,
    pub hidden: usize,
}

impl MlpArch {
    pub fn dim(&self) -> usize {
        self.hidden * (self.input + 2) + 1
    }

    /// Small random initialization: `W1 ~ N(0, 1/input)`,
    /// `w2 ~ N(0, 1/hidden)`, biases zero. The all-zero point is
    /// stationary for the hidden layer, so solvers should not start there.
    pub fn init(&self, rng: &mut crate::rng::Rng) -> Array1<f64> {
        let mut theta = Array1::zeros(self.dim());
        let w1_scale = 1.0 / (self.input as f64).sqrt();
        for t in 0..self.hidden * self.input {
            theta[t] = w1_scale * rng.sample::<f64, _>(StandardNormal);
        }
        let w2_off = self.hidden * (self.input + 1);
        let w2_scale = 1.0 / (self.hidden as f64).sqrt();
        for u in 0..self.hidden {
            theta[w2_off + u] = w2_scale * rng.sample::<f64, _>(StandardNormal);
        }
        theta
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpItem {
    pub x: Array1<f64>,
    pub y: f64,
}

fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl MlpItem {
    fn logit(&self, arch: &MlpArch, theta: &Array1<f64>) -> (f64, Vec<f64>) {
        let (h, din) = (arch.hidden, arch.input);
        let b1_off = h * din;
        let w2_off = b1_off + h;
        let mut act = Vec::with_capacity(h);
        let mut logit = theta[w2_off + h];
        for u in 0..h {
            let mut z = theta[b1_off + u];
            let row = u * din;
            for k in 0..din {
                z += theta[row + k] * self.x[k];
            }
            let a = z.tanh();
            act.push(a);
            logit += theta[w2_off + u] * a;
        }
        (logit, act)
    }

    pub fn value(&self, arch: &MlpArch, theta: &Array1<f64>) -> f64 {
        let (logit, _) = self.logit(arch, theta);
        softplus(-self.y * logit)
    }

    /// Accumulates `scale * grad f(theta)` by backpropagation.
    pub fn grad_into(
        &self,
        arch: &MlpArch,
        theta: &Array1<f64>,
        scale: f64,
        out: &mut Array1<f64>,
    ) {
        let (h, din) = (arch.hidden, arch.input);
        let b1_off = h * din;
        let w2_off = b1_off + h;
        let (logit, act) = self.logit(arch, theta);
        let dlogit = scale * -self.y * sigmoid(-self.y * logit);
        out[w2_off + h] += dlogit;
        for u in 0..h {
            let a = act[u];
            out[w2_off + u] += dlogit * a;
            let dz = dlogit * theta[w2_off + u] * (1.0 - a * a);
            out[b1_off + u] += dz;
            let row = u * din;
            for k in 0..din {
                out[row + k] += dz * self.x[k];
            }
        }
    }
}

/// Probed constants: maxima of gradient norms and gradient-difference
/// ratios over random parameter pairs in a ball, inflated by a safety
/// factor. Marked empirical; they are estimates, not certificates.
pub(super) fn lipschitz(arch: &MlpArch, groups: &[Vec<MlpItem>], dim: usize) -> LipschitzInfo {
    let mut rng = stream(PROBE_SEED, StreamId::Probe);
    let scale = PROBE_RADIUS / (dim as f64).sqrt();
    let pairs: Vec<(Array1<f64>, Array1<f64>)> = (0..PROBE_PAIRS)
        .map(|_| {
            let a = Array1::from_shape_fn(dim, |_| scale * rng.sample::<f64, _>(StandardNormal));
            let b = Array1::from_shape_fn(dim, |_| scale * rng.sample::<f64, _>(StandardNormal));
            (a, b)
        })
        .collect();
    let mut item_l = Vec::new();
    let mut item_k = Vec::new();
    for group in groups {
        for item in group {
            let mut l: f64 = 0.0;
            let mut k: f64 = 0.0;
            for (t1, t2) in &pairs {
                let mut g1 = Array1::zeros(dim);
                let mut g2 = Array1::zeros(dim);
                item.grad_into(arch, t1, 1.0, &mut g1);
                item.grad_into(arch, t2, 1.0, &mut g2);
                k = k.max(g1.dot(&g1).sqrt()).max(g2.dot(&g2).sqrt());
                let diff = &g1 - &g2;
                let dist2 = {
                    let d = t1 - t2;
                    d.dot(&d)
                };
                if dist2 > 0.0 {
                    l = l.max((diff.dot(&diff) / dist2).sqrt());
                }
            }
            item_l.push(PROBE_SAFETY * l);
            item_k.push(PROBE_SAFETY * k);
        }
    }
    LipschitzInfo {
        item_l,
        item_k,
        radius: PROBE_RADIUS,
        empirical: true,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlpDataSpec {
    pub n_per_class: usize,
    /// Distance between the two blob centers.
    pub separation: f64,
}

impl Default for MlpDataSpec {
    fn default() -> Self {
        Self {
            n_per_class: 20,
            separation: 2.0,
        }
    }
}

/// Balanced two-blob classification data for the network, grouped by
/// class (`c = 2`). Defaults to `tau_theta = 0` (the envelope-stationarity
/// regime) and `tau_pi = 1`.
pub fn make_tiny_mlp(seed: u64, input: usize, hidden: usize, spec: MlpDataSpec) -> DroProblem {
    let arch = MlpArch { input, hidden };
    let mut rng = stream(seed, StreamId::DataGen);
    let shift = 0.5 * spec.separation / (input as f64).sqrt();
    let mut blob = |label: f64| -> Vec<MlpItem> {
        (0..spec.n_per_class)
            .map(|_| MlpItem {
                x: Array1::from_shape_fn(input, |_| {
                    label * shift + rng.sample::<f64, _>(StandardNormal)
                }),
                y: label,
            })
            .collect()
    };
    let groups = vec![blob(1.0), blob(-1.0)];
    let dim = arch.dim();
    DroProblem::new(LossFamily::TinyMlp { arch, groups }, dim, 0.0, 1.0)
        .expect("generated network instance is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_weights_give_log_two_loss_and_silent_output_layer() {
        let p = make_tiny_mlp(3, 2, 4, MlpDataSpec::default());
        let theta = Array1::zeros(p.dim());
        let pi = p.initial_weights();
        let h = p.objective_h(&theta, &pi).unwrap();
        // Uninformative network: every sample costs ln 2; balanced classes
        // keep the weighted average at ln 2 as well.
        assert_abs_diff_eq!(h, (2.0f64).ln(), epsilon = 1e-12);
        // tanh(0) = 0 silences the gradient of w2, and the symmetric
        // labels cancel the b2 component when summed over the data.
        let g = p.grad_theta_full(&theta, &pi).unwrap();
        let arch = MlpArch { input: 2, hidden: 4 };
        let w2_off = arch.hidden * (arch.input + 1);
        for u in 0..arch.hidden {
            assert_abs_diff_eq!(g[w2_off + u], 0.0, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(g[w2_off + arch.hidden], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn backprop_matches_central_differences() {
        let p = make_tiny_mlp(7, 2, 3, MlpDataSpec::default());
        let mut rng = stream(11, StreamId::Init);
        let theta = p.initial_theta(&mut rng);
        let step = 1e-5;
        let g = p.item_grad(0, 1, &theta);
        for t in 0..p.dim() {
            let mut up = theta.clone();
            up[t] += step;
            let mut dn = theta.clone();
            dn[t] -= step;
            let fd = (p.item_value(0, 1, &up) - p.item_value(0, 1, &dn)) / (2.0 * step);
            assert_abs_diff_eq!(g[t], fd, epsilon = 1e-7);
        }
    }

    #[test]
    fn probed_constants_dominate_fresh_samples() {
        let p = make_tiny_mlp(5, 2, 3, MlpDataSpec::default());
        let l = p.max_item_l();
        let k = p.max_item_k();
        let mut rng = stream(99, StreamId::Probe);
        let scale = PROBE_RADIUS / (p.dim() as f64).sqrt();
        for _ in 0..100 {
            let t1 = Array1::from_shape_fn(p.dim(), |_| {
                scale * rng.sample::<f64, _>(StandardNormal)
            });
            let g1 = p.item_grad(0, 0, &t1);
            assert!(g1.dot(&g1).sqrt() <= k, "probed K with safety factor must dominate");
            let t2 = Array1::from_shape_fn(p.dim(), |_| {
                scale * rng.sample::<f64, _>(StandardNormal)
            });
            let diff = &g1 - &p.item_grad(0, 0, &t2);
            let dd = &t1 - &t2;
            assert!(
                diff.dot(&diff).sqrt() <= l * dd.dot(&dd).sqrt(),
                "probed L with safety factor must dominate"
            );
        }
    }
}
