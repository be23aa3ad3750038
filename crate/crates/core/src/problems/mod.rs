//! Grouped loss families and the robust objective.
//!
//! A problem instance is a collection of smooth per-object losses
//! `f_{i,j}` arranged into `c` groups of sizes `n_i`, `sum n_i = n`. The
//! scaled group loss is
//!
//! ```text
//! g_i(theta) = (c / n) sum_j f_{i,j}(theta),
//! ```
//!
//! so uniform weights reproduce the empirical mean `1/n sum f`. The
//! saddle objective combines the weighted group losses with Tikhonov
//! regularization in `theta` and KL regularization of the weights toward
//! a prior:
//!
//! ```text
//! h(theta, pi) = sum_i pi_i g_i(theta)
//!              + (tau_theta / 2) ||theta||^2 - tau_pi KL[pi || prior].
//! ```
//!
//! Three loss families are provided: quadratic (`0.5 ||A theta - b||^2`),
//! binary logistic, and a one-hidden-layer tanh network with manual
//! backpropagation. Quadratic and logistic instances carry analytic
//! smoothness (`L`) and value-Lipschitz (`K`) constants per item; the
//! network carries empirically probed constants with a safety factor.

mod logistic;
mod mlp;
mod quadratic;
pub mod snapshot;

pub use logistic::{minority_f1, ImbalancedLogistic, LogisticItem};
pub use mlp::{MlpArch, MlpDataSpec, MlpItem};
pub use quadratic::QuadItem;

use ndarray::Array1;
use rand::Rng as _;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::simplex::{self, SimplexError, SimplexWeights};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("theta has dimension {got}, problem expects {want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error("group index {0} out of range ({1} groups)")]
    GroupOutOfRange(usize, usize),
    #[error("item index {item} out of range in group {group}")]
    ItemOutOfRange { group: usize, item: usize },
    #[error("closed-form inner maximum undefined for tau_pi = 0; use a hard max over groups")]
    ClosedFormUndefined,
    #[error("exponential reformulation requires per-object grouping (every group of size 1)")]
    NotPerObject,
    #[error("empty problem: every group needs at least one item")]
    EmptyGroup,
    #[error(transparent)]
    Simplex(#[from] SimplexError),
}

/// Per-item data of one loss family.
#[derive(Debug, Clone)]
pub enum LossFamily {
    Quadratic { groups: Vec<Vec<QuadItem>> },
    Logistic { groups: Vec<Vec<LogisticItem>> },
    TinyMlp { arch: MlpArch, groups: Vec<Vec<MlpItem>> },
}

impl LossFamily {
    pub fn name(&self) -> &'static str {
        match self {
            LossFamily::Quadratic { .. } => "quadratic",
            LossFamily::Logistic { .. } => "logistic",
            LossFamily::TinyMlp { .. } => "tiny_mlp",
        }
    }

    fn group_sizes(&self) -> Vec<usize> {
        match self {
            LossFamily::Quadratic { groups } => groups.iter().map(Vec::len).collect(),
            LossFamily::Logistic { groups } => groups.iter().map(Vec::len).collect(),
            LossFamily::TinyMlp { groups, .. } => groups.iter().map(Vec::len).collect(),
        }
    }
}

/// Smoothness and value-Lipschitz constants of the per-item losses.
///
/// `item_l[t]` bounds the gradient Lipschitz constant of item `t` (flat
/// order, group-major), `item_k[t]` bounds its gradient norm over the ball
/// `||theta|| <= radius`. For globally Lipschitz families the radius is
/// infinite. Empirically probed constants (`empirical = true`) carry a 2x
/// safety factor and are not certificates.
#[derive(Debug, Clone)]
pub struct LipschitzInfo {
    pub item_l: Vec<f64>,
    pub item_k: Vec<f64>,
    pub radius: f64,
    pub empirical: bool,
}

/// A grouped robust optimization instance.
#[derive(Debug, Clone)]
pub struct DroProblem {
    family: LossFamily,
    dim: usize,
    tau_theta: f64,
    tau_pi: f64,
    prior: Vec<f64>,
    floor: f64,
    group_sizes: Vec<usize>,
    flat_offset: Vec<usize>,
    lipschitz: LipschitzInfo,
}

impl DroProblem {
    /// Assembles an instance with a uniform prior and the default floor.
    pub fn new(
        family: LossFamily,
        dim: usize,
        tau_theta: f64,
        tau_pi: f64,
    ) -> Result<Self, ProblemError> {
        let group_sizes = family.group_sizes();
        if group_sizes.is_empty() || group_sizes.contains(&0) {
            return Err(ProblemError::EmptyGroup);
        }
        let c = group_sizes.len();
        let mut flat_offset = Vec::with_capacity(c + 1);
        let mut acc = 0;
        for &s in &group_sizes {
            flat_offset.push(acc);
            acc += s;
        }
        flat_offset.push(acc);
        let lipschitz = match &family {
            LossFamily::Quadratic { groups } => quadratic::lipschitz(groups),
            LossFamily::Logistic { groups } => logistic::lipschitz(groups),
            LossFamily::TinyMlp { arch, groups } => mlp::lipschitz(arch, groups, dim),
        };
        Ok(Self {
            family,
            dim,
            tau_theta,
            tau_pi,
            prior: vec![1.0 / c as f64; c],
            floor: simplex::DEFAULT_FLOOR,
            group_sizes,
            flat_offset,
            lipschitz,
        })
    }

    /// Replaces the regularization strengths.
    pub fn with_taus(mut self, tau_theta: f64, tau_pi: f64) -> Self {
        self.tau_theta = tau_theta;
        self.tau_pi = tau_pi;
        self
    }

    /// Replaces the weight prior (must live on the simplex above the floor).
    pub fn with_prior(mut self, prior: Vec<f64>) -> Result<Self, ProblemError> {
        SimplexWeights::at_prior(prior.clone(), self.floor)?;
        self.prior = prior;
        Ok(self)
    }

    /// Replaces the truncation floor (must stay below the prior entries).
    pub fn with_floor(mut self, floor: f64) -> Result<Self, ProblemError> {
        SimplexWeights::at_prior(self.prior.clone(), floor)?;
        self.floor = floor;
        Ok(self)
    }

    pub fn family(&self) -> &LossFamily {
        &self.family
    }

    /// True when every group loss is convex in `theta` (quadratic and
    /// logistic families). Diagnostics use this to decide whether an
    /// unmet certificate is an error or an accepted local answer.
    pub fn is_convex(&self) -> bool {
        !matches!(self.family, LossFamily::TinyMlp { .. })
    }

    /// Number of groups `c`.
    pub fn c(&self) -> usize {
        self.group_sizes.len()
    }

    /// Total number of items `n`.
    pub fn n(&self) -> usize {
        *self.flat_offset.last().unwrap()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tau_theta(&self) -> f64 {
        self.tau_theta
    }

    pub fn tau_pi(&self) -> f64 {
        self.tau_pi
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn group_sizes(&self) -> &[usize] {
        &self.group_sizes
    }

    pub fn lipschitz(&self) -> &LipschitzInfo {
        &self.lipschitz
    }

    /// Maps a flat item index (group-major) to `(group, item)`.
    pub fn unflatten(&self, t: usize) -> (usize, usize) {
        debug_assert!(t < self.n());
        let g = match self.flat_offset.binary_search(&t) {
            Ok(g) => g,
            Err(g) => g - 1,
        };
        (g, t - self.flat_offset[g])
    }

    /// Weights initialized at the prior.
    pub fn initial_weights(&self) -> SimplexWeights {
        SimplexWeights::at_prior(self.prior.clone(), self.floor)
            .expect("problem prior is validated on construction")
    }

    /// Default starting point. Zero except for the network family, which
    /// draws a small random initialization (zero is a stationary point of
    /// the hidden layer there).
    pub fn initial_theta(&self, rng: &mut crate::rng::Rng) -> Array1<f64> {
        match &self.family {
            LossFamily::TinyMlp { arch, .. } => arch.init(rng),
            _ => Array1::zeros(self.dim),
        }
    }

    fn check_theta(&self, theta: &Array1<f64>) -> Result<(), ProblemError> {
        if theta.len() != self.dim {
            return Err(ProblemError::DimensionMismatch {
                got: theta.len(),
                want: self.dim,
            });
        }
        Ok(())
    }

    /// Loss of a single item.
    pub fn item_value(&self, group: usize, item: usize, theta: &Array1<f64>) -> f64 {
        match &self.family {
            LossFamily::Quadratic { groups } => groups[group][item].value(theta),
            LossFamily::Logistic { groups } => groups[group][item].value(theta),
            LossFamily::TinyMlp { arch, groups } => groups[group][item].value(arch, theta),
        }
    }

    /// Accumulates `scale * grad f_{group,item}(theta)` into `out`.
    pub fn item_grad_into(
        &self,
        group: usize,
        item: usize,
        theta: &Array1<f64>,
        scale: f64,
        out: &mut Array1<f64>,
    ) {
        match &self.family {
            LossFamily::Quadratic { groups } => groups[group][item].grad_into(theta, scale, out),
            LossFamily::Logistic { groups } => groups[group][item].grad_into(theta, scale, out),
            LossFamily::TinyMlp { arch, groups } => {
                groups[group][item].grad_into(arch, theta, scale, out)
            }
        }
    }

    /// Gradient of a single item, allocated.
    pub fn item_grad(&self, group: usize, item: usize, theta: &Array1<f64>) -> Array1<f64> {
        let mut out = Array1::zeros(self.dim);
        self.item_grad_into(group, item, theta, 1.0, &mut out);
        out
    }

    /// Scaled group loss `g_i(theta) = (c/n) sum_j f_{i,j}(theta)`.
    pub fn group_loss(&self, theta: &Array1<f64>, group: usize) -> Result<f64, ProblemError> {
        self.check_theta(theta)?;
        if group >= self.c() {
            return Err(ProblemError::GroupOutOfRange(group, self.c()));
        }
        let scale = self.c() as f64 / self.n() as f64;
        let mut sum = 0.0;
        for j in 0..self.group_sizes[group] {
            sum += self.item_value(group, j, theta);
        }
        Ok(scale * sum)
    }

    /// All scaled group losses.
    pub fn group_losses(&self, theta: &Array1<f64>) -> Result<Vec<f64>, ProblemError> {
        self.check_theta(theta)?;
        (0..self.c()).map(|i| self.group_loss(theta, i)).collect()
    }

    /// The saddle objective `h(theta, pi)`. The KL term is taken against
    /// the problem prior regardless of the prior stored in `pi`.
    pub fn objective_h(
        &self,
        theta: &Array1<f64>,
        pi: &SimplexWeights,
    ) -> Result<f64, ProblemError> {
        self.check_theta(theta)?;
        if pi.len() != self.c() {
            return Err(SimplexError::LengthMismatch(pi.len(), self.c()).into());
        }
        let losses = self.group_losses(theta)?;
        let weighted: f64 = pi.weights().iter().zip(&losses).map(|(&w, &g)| w * g).sum();
        let kl = simplex::kl_divergence(pi.weights(), &self.prior)?;
        Ok(weighted + 0.5 * self.tau_theta * theta.dot(theta) - self.tau_pi * kl)
    }

    /// Gradient of the weighted loss part in `theta`:
    /// `sum_i pi_i grad g_i(theta)`. The Tikhonov term `tau_theta theta`
    /// is intentionally not included; the solvers add it.
    pub fn grad_theta_full(
        &self,
        theta: &Array1<f64>,
        pi: &SimplexWeights,
    ) -> Result<Array1<f64>, ProblemError> {
        self.check_theta(theta)?;
        if pi.len() != self.c() {
            return Err(SimplexError::LengthMismatch(pi.len(), self.c()).into());
        }
        let base = self.c() as f64 / self.n() as f64;
        let mut out = Array1::zeros(self.dim);
        for (i, &w) in pi.weights().iter().enumerate() {
            let scale = base * w;
            for j in 0..self.group_sizes[i] {
                self.item_grad_into(i, j, theta, scale, &mut out);
            }
        }
        Ok(out)
    }

    /// Exact inner maximum over the truncated simplex and its value
    ///
    /// ```text
    /// Phi(theta) = max_{pi in U} h(theta, pi).
    /// ```
    ///
    /// Unconstrained maximizer: `pi_i* proportional to prior_i
    /// exp(g_i / tau_pi)`, giving
    /// `Phi = tau_pi ln sum_i prior_i exp(g_i / tau_pi)
    ///        + (tau_theta/2) ||theta||^2`.
    /// When the floor binds, the maximizer is refitted by water-filling
    /// and the value evaluated directly.
    pub fn inner_max_closed_form(
        &self,
        theta: &Array1<f64>,
    ) -> Result<(SimplexWeights, f64), ProblemError> {
        if self.tau_pi <= 0.0 {
            return Err(ProblemError::ClosedFormUndefined);
        }
        let losses = self.group_losses(theta)?;
        let log_w: Vec<f64> = self
            .prior
            .iter()
            .zip(&losses)
            .map(|(&p, &g)| p.ln() + g / self.tau_pi)
            .collect();
        let fitted = simplex::floored_fit(&log_w, self.floor)?;
        let pi_star = SimplexWeights::new(fitted, self.prior.clone(), self.floor)
            .or_else(|_| {
                // Water-filling can land exactly on the floor minus one ulp;
                // route through the clamping constructor in that case.
                self.initial_weights()
                    .with_weights(simplex::floored_fit(&log_w, self.floor)?)
            })?;
        let clamped = pi_star
            .weights()
            .iter()
            .any(|&w| w <= self.floor * (1.0 + 1e-9));
        let value = if clamped {
            self.objective_h(theta, &pi_star)?
        } else {
            let m = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + log_w.iter().map(|&x| (x - m).exp()).sum::<f64>().ln();
            self.tau_pi * lse + 0.5 * self.tau_theta * theta.dot(theta)
        };
        Ok((pi_star, value))
    }

    /// The exponential-reformulation objective for per-object grouping
    /// (`c = n`):
    ///
    /// ```text
    /// (1/n) sum_i exp(f_i(theta) / tau_pi) + (tau_theta/2) ||theta||^2.
    /// ```
    ///
    /// Computed in log space; `log_mean_exp` stays finite even when the
    /// raw value overflows.
    pub fn exp_reformulation_value(
        &self,
        theta: &Array1<f64>,
    ) -> Result<ExpReformulation, ProblemError> {
        if self.tau_pi <= 0.0 {
            return Err(ProblemError::ClosedFormUndefined);
        }
        if self.group_sizes.iter().any(|&s| s != 1) {
            return Err(ProblemError::NotPerObject);
        }
        self.check_theta(theta)?;
        let scaled: Vec<f64> = (0..self.c())
            .map(|i| self.item_value(i, 0, theta) / self.tau_pi)
            .collect();
        let m = scaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + scaled.iter().map(|&x| (x - m).exp()).sum::<f64>().ln();
        let log_mean_exp = lse - (self.n() as f64).ln();
        Ok(ExpReformulation {
            value: log_mean_exp.exp() + 0.5 * self.tau_theta * theta.dot(theta),
            log_mean_exp,
        })
    }

    /// Largest per-item smoothness constant.
    pub fn max_item_l(&self) -> f64 {
        self.lipschitz.item_l.iter().cloned().fold(0.0, f64::max)
    }

    /// Largest per-item gradient-norm bound.
    pub fn max_item_k(&self) -> f64 {
        self.lipschitz.item_k.iter().cloned().fold(0.0, f64::max)
    }

    /// Group-level constants: `L_i = (c/n) sum_j L_{i,j}` and likewise for
    /// `K_i`; the group loss inherits these from its items.
    pub fn group_constants(&self) -> (Vec<f64>, Vec<f64>) {
        let scale = self.c() as f64 / self.n() as f64;
        let mut ls = Vec::with_capacity(self.c());
        let mut ks = Vec::with_capacity(self.c());
        for (i, &size) in self.group_sizes.iter().enumerate() {
            let off = self.flat_offset[i];
            let l: f64 = self.lipschitz.item_l[off..off + size].iter().sum();
            let k: f64 = self.lipschitz.item_k[off..off + size].iter().sum();
            ls.push(scale * l);
            ks.push(scale * k);
        }
        (ls, ks)
    }

    /// Lipschitz constant of the saddle operator,
    /// `L_F = 2 sqrt(max_i L_i^2 + max_i K_i^2)` over group constants.
    pub fn operator_lipschitz(&self) -> f64 {
        let (ls, ks) = self.group_constants();
        let l = ls.iter().cloned().fold(0.0, f64::max);
        let k = ks.iter().cloned().fold(0.0, f64::max);
        2.0 * (l * l + k * k).sqrt()
    }

    /// Envelope smoothness parameter `L = sqrt((1/n) sum_t L_t^2)` over
    /// per-item constants.
    pub fn envelope_l(&self) -> f64 {
        let n = self.n() as f64;
        (self.lipschitz.item_l.iter().map(|&l| l * l).sum::<f64>() / n).sqrt()
    }
}

/// Exponential-reformulation value with its overflow-safe companion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpReformulation {
    /// `(1/n) sum exp(f_i / tau_pi) + (tau_theta/2)||theta||^2`; may be
    /// infinite when the exponents overflow.
    pub value: f64,
    /// `ln[(1/n) sum exp(f_i / tau_pi)]`, always finite.
    pub log_mean_exp: f64,
}

/// Generates a random convex quadratic instance: `c` groups of
/// `items_per_group` losses `0.5 ||A theta - b||^2` with Gaussian `A`
/// (entries scaled by `1/sqrt(d)`) and small Gaussian targets `b`.
/// Regularization defaults to `tau_theta = tau_pi = 1`.
pub fn make_quadratic_problem(
    seed: u64,
    d: usize,
    c: usize,
    items_per_group: usize,
) -> DroProblem {
    let mut rng = crate::rng::stream(seed, crate::rng::StreamId::DataGen);
    let scale = 1.0 / (d as f64).sqrt();
    let groups: Vec<Vec<QuadItem>> = (0..c)
        .map(|_| {
            (0..items_per_group)
                .map(|_| {
                    let a = ndarray::Array2::from_shape_fn((d, d), |_| {
                        scale * rng.sample::<f64, _>(StandardNormal)
                    });
                    let b = Array1::from_shape_fn(d, |_| {
                        0.3 * rng.sample::<f64, _>(StandardNormal)
                    });
                    QuadItem::new(a, b)
                })
                .collect()
        })
        .collect();
    DroProblem::new(LossFamily::Quadratic { groups }, d, 1.0, 1.0)
        .expect("generated quadratic instance is well formed")
}

/// Generates a class-imbalanced two-cloud logistic instance with
/// per-object grouping (`c = n`). See [`logistic::make_imbalanced_logistic`].
pub fn make_imbalanced_logistic(
    seed: u64,
    d: usize,
    n_per_class: usize,
    uc: usize,
) -> ImbalancedLogistic {
    logistic::make_imbalanced_logistic(seed, d, n_per_class, uc)
}

/// Generates a balanced two-blob classification problem for a
/// one-hidden-layer tanh network, grouped by class (`c = 2`).
pub fn make_tiny_mlp(seed: u64, input: usize, hidden: usize, spec: MlpDataSpec) -> DroProblem {
    mlp::make_tiny_mlp(seed, input, hidden, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, StreamId};
    use approx::assert_abs_diff_eq;
    use ndarray::{arr1, arr2};

    fn two_group_quadratic() -> DroProblem {
        // f_1 = 0.5 (theta - 1)^2, f_2 = 0.5 (theta + 1)^2 in d = 1.
        let groups = vec![
            vec![QuadItem::new(arr2(&[[1.0]]), arr1(&[1.0]))],
            vec![QuadItem::new(arr2(&[[1.0]]), arr1(&[-1.0]))],
        ];
        DroProblem::new(LossFamily::Quadratic { groups }, 1, 1.0, 1.0).unwrap()
    }

    #[test]
    fn quadratic_value_and_gradient_match_hand_computation() {
        // d = 1, A = (2), b = 0: f(3) = 0.5 (2*3)^2 = 18, f'(3) = 12,
        // L = sigma_max(A^T A) = 4.
        let groups = vec![vec![QuadItem::new(arr2(&[[2.0]]), arr1(&[0.0]))]];
        let p = DroProblem::new(LossFamily::Quadratic { groups }, 1, 0.0, 1.0).unwrap();
        let theta = arr1(&[3.0]);
        assert_abs_diff_eq!(p.item_value(0, 0, &theta), 18.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.item_grad(0, 0, &theta)[0], 12.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.lipschitz().item_l[0], 4.0, epsilon = 1e-9);
    }

    #[test]
    fn identity_quadratic_has_unit_smoothness() {
        let groups = vec![vec![QuadItem::new(
            arr2(&[[1.0, 0.0], [0.0, 1.0]]),
            arr1(&[0.0, 0.0]),
        )]];
        let p = DroProblem::new(LossFamily::Quadratic { groups }, 2, 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(p.lipschitz().item_l[0], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn uniform_weights_reproduce_erm() {
        let p = make_quadratic_problem(3, 3, 4, 2);
        let theta = arr1(&[0.4, -0.2, 0.9]);
        let pi = p.initial_weights();
        let h = p.objective_h(&theta, &pi).unwrap();
        let mut erm = 0.0;
        for i in 0..p.c() {
            for j in 0..p.group_sizes()[i] {
                erm += p.item_value(i, j, &theta);
            }
        }
        erm /= p.n() as f64;
        erm += 0.5 * p.tau_theta() * theta.dot(&theta);
        assert_abs_diff_eq!(h, erm, epsilon = 1e-12);
    }

    #[test]
    fn loss_part_is_linear_in_pi() {
        let p = make_quadratic_problem(11, 2, 3, 2);
        let theta = arr1(&[0.3, 0.7]);
        let losses = p.group_losses(&theta).unwrap();
        let part = |w: &[f64]| -> f64 { w.iter().zip(&losses).map(|(&a, &b)| a * b).sum() };
        let pa = [0.5, 0.2, 0.3];
        let pb = [0.1, 0.6, 0.3];
        let lambda = 0.35;
        let mix: Vec<f64> = pa
            .iter()
            .zip(&pb)
            .map(|(&a, &b)| lambda * a + (1.0 - lambda) * b)
            .collect();
        assert_abs_diff_eq!(
            part(&mix),
            lambda * part(&pa) + (1.0 - lambda) * part(&pb),
            epsilon = 1e-12
        );
    }

    #[test]
    fn inner_max_is_softmax_of_scaled_losses() {
        let p = two_group_quadratic();
        let theta = arr1(&[0.5]);
        let (pi_star, value) = p.inner_max_closed_form(&theta).unwrap();
        let losses = p.group_losses(&theta).unwrap();
        // pi* proportional to prior exp(g / tau_pi).
        let ratio = (pi_star.weights()[0] / pi_star.weights()[1]).ln();
        assert_abs_diff_eq!(ratio, (losses[0] - losses[1]) / p.tau_pi(), epsilon = 1e-10);
        // Value route agrees with direct evaluation at the maximizer.
        let direct = p.objective_h(&theta, &pi_star).unwrap();
        assert_abs_diff_eq!(value, direct, epsilon = 1e-12);
        // And dominates arbitrary feasible weights.
        let other = p.initial_weights().with_weights(vec![0.25, 0.75]).unwrap();
        assert!(value >= p.objective_h(&theta, &other).unwrap() - 1e-12);
    }

    #[test]
    fn inner_max_requires_positive_tau_pi() {
        let p = two_group_quadratic().with_taus(1.0, 0.0);
        assert_eq!(
            p.inner_max_closed_form(&arr1(&[0.0])).unwrap_err(),
            ProblemError::ClosedFormUndefined
        );
    }

    #[test]
    fn exp_reformulation_matches_hand_value() {
        // n = 2 per-object items with f = (tau_pi ln 2, 0) at theta = 0:
        // (1/2)(2 + 1) = 3/2.
        let tau_pi = 0.7;
        let b = (2.0 * tau_pi * (2.0f64).ln()).sqrt();
        let groups = vec![
            vec![QuadItem::new(arr2(&[[0.0]]), arr1(&[b]))],
            vec![QuadItem::new(arr2(&[[0.0]]), arr1(&[0.0]))],
        ];
        let p = DroProblem::new(LossFamily::Quadratic { groups }, 1, 0.0, tau_pi).unwrap();
        let out = p.exp_reformulation_value(&arr1(&[0.0])).unwrap();
        assert_abs_diff_eq!(out.value, 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(out.log_mean_exp, (1.5f64).ln(), epsilon = 1e-12);
    }

    #[test]
    fn exp_reformulation_is_monotone_in_the_inner_max() {
        // With tau_theta = 0 and per-object grouping,
        // Phi(theta) = tau_pi ln(exp-reformulation value).
        let p = make_quadratic_problem(5, 2, 4, 1).with_taus(0.0, 1.3);
        for t in [-1.0, 0.2, 0.8] {
            let theta = arr1(&[t, -t]);
            let (_, phi) = p.inner_max_closed_form(&theta).unwrap();
            let exp = p.exp_reformulation_value(&theta).unwrap();
            assert_abs_diff_eq!(phi, p.tau_pi() * exp.log_mean_exp, epsilon = 1e-10);
        }
    }

    #[test]
    fn exp_reformulation_rejects_grouped_instances() {
        let p = make_quadratic_problem(5, 2, 3, 2);
        assert_eq!(
            p.exp_reformulation_value(&arr1(&[0.0, 0.0])).unwrap_err(),
            ProblemError::NotPerObject
        );
    }

    #[test]
    fn reported_constants_bound_empirical_differences() {
        let prob = make_imbalanced_logistic(9, 3, 30, 3).problem;
        let mut rng = stream(77, StreamId::Probe);
        let l = prob.max_item_l();
        let k = prob.max_item_k();
        for _ in 0..1000 {
            let t1 = Array1::from_shape_fn(3, |_| 3.0 * rng.sample::<f64, _>(StandardNormal));
            let t2 = Array1::from_shape_fn(3, |_| 3.0 * rng.sample::<f64, _>(StandardNormal));
            let (g, j) = {
                let t = rng.random_range(0..prob.n());
                prob.unflatten(t)
            };
            let diff = &t1 - &t2;
            let dist = diff.dot(&diff).sqrt();
            let grad_diff = prob.item_grad(g, j, &t1) - prob.item_grad(g, j, &t2);
            let gd = grad_diff.dot(&grad_diff).sqrt();
            assert!(gd <= l * dist * (1.0 + 1e-9), "smoothness constant violated");
            let vd = (prob.item_value(g, j, &t1) - prob.item_value(g, j, &t2)).abs();
            assert!(vd <= k * dist * (1.0 + 1e-9), "value Lipschitz constant violated");
        }
    }

    #[test]
    fn unflatten_walks_groups_in_order() {
        let p = make_quadratic_problem(1, 2, 3, 2);
        let pairs: Vec<(usize, usize)> = (0..p.n()).map(|t| p.unflatten(t)).collect();
        assert_eq!(pairs, vec![(0, 0), (0, 1), (1, 0), (1, 1), (2, 0), (2, 1)]);
    }
}
