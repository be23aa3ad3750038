//! Unbiased stochastic estimators of the saddle operator.
//!
//! A single draw picks a (group, item) pair and rescales that item's
//! gradient and loss so that the expectation recovers the full quantities
//!
//! ```text
//! E[g] = sum_i pi_i grad g_i(theta),      E[p] = -(g_1, ..., g_c),
//! ```
//!
//! with `p` in the variational-inequality sign convention (negated group
//! losses, so the weight player ascends). Three draw distributions are
//! supported; per-pair scales:
//!
//! * `UniformAll`: pair `(i,j)` with probability `1/n`, scale `c`.
//! * `TwoStage`: group uniformly, then an item inside it, scale
//!   `c^2 n_i / n`.
//! * `ProbabilityWeighted`: group from `Cat(pi)`, then an item, scale
//!   `c n_i / (n pi_i)`. In the `theta` estimate the drawn group's weight
//!   cancels against the scale, so `g` carries no `pi` factor at all.
//!
//! A `B`-batch averages `B` independent single draws. Exhaustive modes
//! (exact enumeration and outcome-space expectation) make unbiasedness
//! checkable without sampling noise.

use ndarray::Array1;
use rand::Rng as _;
use thiserror::Error;

use crate::problems::{DroProblem, ProblemError};
use crate::rng::Rng;
use crate::simplex::SimplexWeights;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplingError {
    #[error("batch size must be positive")]
    EmptyBatch,
    #[error("weight {value:e} of group {index} is below the floor {floor:e}")]
    WeightBelowFloor {
        index: usize,
        value: f64,
        floor: f64,
    },
    #[error("variance estimation needs at least 2 trials, got {0}")]
    TooFewTrials(usize),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingStrategy {
    UniformAll,
    TwoStage,
    ProbabilityWeighted,
}

impl SamplingStrategy {
    pub const ALL: [SamplingStrategy; 3] = [
        SamplingStrategy::UniformAll,
        SamplingStrategy::TwoStage,
        SamplingStrategy::ProbabilityWeighted,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SamplingStrategy::UniformAll => "uniform_all",
            SamplingStrategy::TwoStage => "two_stage",
            SamplingStrategy::ProbabilityWeighted => "probability_weighted",
        }
    }
}

/// Indices drawn for one batch together with their loss-side scales.
/// Scales are fixed at draw time: for the probability-weighted strategy
/// they embed the inverse weight of the drawn group.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub strategy: SamplingStrategy,
    pub pairs: Vec<(usize, usize)>,
    pub scales: Vec<f64>,
}

/// One stochastic evaluation of the saddle operator.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticEstimate {
    /// Estimate of `sum_i pi_i grad g_i(theta)`.
    pub g: Array1<f64>,
    /// Estimate of the negated group losses.
    pub p: Vec<f64>,
}

fn categorical(pi: &[f64], rng: &mut Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &w) in pi.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    pi.len() - 1
}

/// Draws the indices and scales of one `batch`-sized batch.
pub fn draw_batch(
    problem: &DroProblem,
    pi: &SimplexWeights,
    strategy: SamplingStrategy,
    batch: usize,
    rng: &mut Rng,
) -> Result<SampleBatch, SamplingError> {
    if batch == 0 {
        return Err(SamplingError::EmptyBatch);
    }
    let c = problem.c() as f64;
    let n = problem.n() as f64;
    if strategy == SamplingStrategy::ProbabilityWeighted {
        for (i, &w) in pi.weights().iter().enumerate() {
            if w < pi.floor() || w <= 0.0 {
                return Err(SamplingError::WeightBelowFloor {
                    index: i,
                    value: w,
                    floor: pi.floor(),
                });
            }
        }
    }
    let mut pairs = Vec::with_capacity(batch);
    let mut scales = Vec::with_capacity(batch);
    for _ in 0..batch {
        let (pair, scale) = match strategy {
            SamplingStrategy::UniformAll => {
                let t = rng.random_range(0..problem.n());
                (problem.unflatten(t), c)
            }
            SamplingStrategy::TwoStage => {
                let i = rng.random_range(0..problem.c());
                let ni = problem.group_sizes()[i];
                let j = rng.random_range(0..ni);
                ((i, j), c * c * ni as f64 / n)
            }
            SamplingStrategy::ProbabilityWeighted => {
                let i = categorical(pi.weights(), rng);
                let ni = problem.group_sizes()[i];
                let j = rng.random_range(0..ni);
                ((i, j), c * ni as f64 / (n * pi.weights()[i]))
            }
        };
        pairs.push(pair);
        scales.push(scale);
    }
    Ok(SampleBatch {
        strategy,
        pairs,
        scales,
    })
}

/// Evaluates the estimate of a drawn batch at `(theta, pi)`.
///
/// For the probability-weighted strategy the `theta` estimate is built
/// from the pi-free scale `c n_i / n`, so changing `pi` between draw and
/// evaluation alters `g` only through the frozen indices.
pub fn estimate_from_batch(
    problem: &DroProblem,
    theta: &Array1<f64>,
    pi: &SimplexWeights,
    batch: &SampleBatch,
) -> Result<StochasticEstimate, SamplingError> {
    if batch.pairs.is_empty() {
        return Err(SamplingError::EmptyBatch);
    }
    let inv_b = 1.0 / batch.pairs.len() as f64;
    let c = problem.c() as f64;
    let n = problem.n() as f64;
    let mut g = Array1::zeros(problem.dim());
    let mut p = vec![0.0; problem.c()];
    for (&(i, j), &scale) in batch.pairs.iter().zip(&batch.scales) {
        let g_scale = match batch.strategy {
            SamplingStrategy::ProbabilityWeighted => {
                c * problem.group_sizes()[i] as f64 / n
            }
            _ => scale * pi.weights()[i],
        };
        problem.item_grad_into(i, j, theta, inv_b * g_scale, &mut g);
        p[i] -= inv_b * scale * problem.item_value(i, j, theta);
    }
    Ok(StochasticEstimate { g, p })
}

/// Draw-and-evaluate with the uniform-over-items strategy.
pub fn sample_uniform_all(
    problem: &DroProblem,
    theta: &Array1<f64>,
    pi: &SimplexWeights,
    batch: usize,
    rng: &mut Rng,
) -> Result<StochasticEstimate, SamplingError> {
    let b = draw_batch(problem, pi, SamplingStrategy::UniformAll, batch, rng)?;
    estimate_from_batch(problem, theta, pi, &b)
}

/// Draw-and-evaluate with the group-then-item strategy.
pub fn sample_two_stage(
    problem: &DroProblem,
    theta: &Array1<f64>,
    pi: &SimplexWeights,
    batch: usize,
    rng: &mut Rng,
) -> Result<StochasticEstimate, SamplingError> {
    let b = draw_batch(problem, pi, SamplingStrategy::TwoStage, batch, rng)?;
    estimate_from_batch(problem, theta, pi, &b)
}

/// Draw-and-evaluate with groups drawn from the current weights.
pub fn sample_probability_weighted(
    problem: &DroProblem,
    theta: &Array1<f64>,
    pi: &SimplexWeights,
    batch: usize,
    rng: &mut Rng,
) -> Result<StochasticEstimate, SamplingError> {
    let b = draw_batch(problem, pi, SamplingStrategy::ProbabilityWeighted, batch, rng)?;
    estimate_from_batch(problem, theta, pi, &b)
}

/// Exact (enumeration) evaluation: the zero-variance limit every strategy
/// is unbiased for.
pub fn exact_estimate(
    problem: &DroProblem,
    theta: &Array1<f64>,
    pi: &SimplexWeights,
) -> Result<StochasticEstimate, SamplingError> {
    let g = problem.grad_theta_full(theta, pi)?;
    let p = problem.group_losses(theta)?.iter().map(|&v| -v).collect();
    Ok(StochasticEstimate { g, p })
}

/// Probability-weighted sum of single-draw estimates over the complete
/// outcome space: the expectation of a `B = 1` batch, computed without
/// sampling. Equals [`exact_estimate`] for every strategy (unbiasedness).
pub fn expectation_over_outcomes(
    problem: &DroProblem,
    theta: &Array1<f64>,
    pi: &SimplexWeights,
    strategy: SamplingStrategy,
) -> Result<StochasticEstimate, SamplingError> {
    let c = problem.c() as f64;
    let n = problem.n() as f64;
    let mut g = Array1::zeros(problem.dim());
    let mut p = vec![0.0; problem.c()];
    #[allow(clippy::needless_range_loop)] // indexes three parallel structures
    for i in 0..problem.c() {
        let ni = problem.group_sizes()[i] as f64;
        let w = pi.weights()[i];
        let (prob, scale) = match strategy {
            SamplingStrategy::UniformAll => (1.0 / n, c),
            SamplingStrategy::TwoStage => (1.0 / (c * ni), c * c * ni / n),
            SamplingStrategy::ProbabilityWeighted => (w / ni, c * ni / (n * w)),
        };
        let g_scale = match strategy {
            SamplingStrategy::ProbabilityWeighted => c * ni / n,
            _ => scale * w,
        };
        for j in 0..problem.group_sizes()[i] {
            problem.item_grad_into(i, j, theta, prob * g_scale, &mut g);
            p[i] -= prob * scale * problem.item_value(i, j, theta);
        }
    }
    Ok(StochasticEstimate { g, p })
}

/// Empirical mean-squared deviation of `trials` batch estimates from the
/// exact operator: `(E||g_hat - g||^2, E||p_hat - p||^2)`.
pub fn estimate_variance(
    problem: &DroProblem,
    theta: &Array1<f64>,
    pi: &SimplexWeights,
    strategy: SamplingStrategy,
    batch: usize,
    trials: usize,
    rng: &mut Rng,
) -> Result<(f64, f64), SamplingError> {
    if trials < 2 {
        return Err(SamplingError::TooFewTrials(trials));
    }
    let exact = exact_estimate(problem, theta, pi)?;
    let mut mse_g = 0.0;
    let mut mse_p = 0.0;
    for _ in 0..trials {
        let b = draw_batch(problem, pi, strategy, batch, rng)?;
        let est = estimate_from_batch(problem, theta, pi, &b)?;
        let dg = &est.g - &exact.g;
        mse_g += dg.dot(&dg);
        mse_p += est
            .p
            .iter()
            .zip(&exact.p)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<f64>();
    }
    Ok((mse_g / trials as f64, mse_p / trials as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_quadratic_problem, LossFamily, QuadItem};
    use crate::rng::{stream, StreamId};
    use approx::assert_abs_diff_eq;
    use ndarray::{arr1, arr2};

    fn uneven_problem() -> DroProblem {
        // Group sizes (1, 2, 3) exercise all the n_i-dependent scales.
        let mk = |a: f64, b: f64| QuadItem::new(arr2(&[[a]]), arr1(&[b]));
        let groups = vec![
            vec![mk(1.0, 0.5)],
            vec![mk(0.5, -1.0), mk(2.0, 0.2)],
            vec![mk(1.5, 0.0), mk(0.3, 1.0), mk(1.0, -0.4)],
        ];
        DroProblem::new(LossFamily::Quadratic { groups }, 1, 1.0, 1.0).unwrap()
    }

    fn skewed_weights(p: &DroProblem) -> SimplexWeights {
        let raw: Vec<f64> = (0..p.c()).map(|i| 1.0 + i as f64).collect();
        let sum: f64 = raw.iter().sum();
        p.initial_weights()
            .with_weights(raw.into_iter().map(|x| x / sum).collect())
            .unwrap()
    }

    #[test]
    fn expectation_over_outcomes_matches_exact_operator() {
        let p = uneven_problem();
        let pi = skewed_weights(&p);
        let theta = arr1(&[0.7]);
        let exact = exact_estimate(&p, &theta, &pi).unwrap();
        for strategy in SamplingStrategy::ALL {
            let expect = expectation_over_outcomes(&p, &theta, &pi, strategy).unwrap();
            for (a, b) in expect.g.iter().zip(exact.g.iter()) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
            for (a, b) in expect.p.iter().zip(&exact.p) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn scales_match_hand_computed_values() {
        let p = uneven_problem();
        let pi = p.initial_weights();
        let mut rng = stream(5, StreamId::Sampler);
        // c = 3, n = 6. UniformAll always scales by c.
        let b = draw_batch(&p, &pi, SamplingStrategy::UniformAll, 16, &mut rng).unwrap();
        assert!(b.scales.iter().all(|&s| s == 3.0));
        // TwoStage: c^2 n_i / n = 9 n_i / 6.
        let b = draw_batch(&p, &pi, SamplingStrategy::TwoStage, 64, &mut rng).unwrap();
        for (&(i, _), &s) in b.pairs.iter().zip(&b.scales) {
            assert_abs_diff_eq!(s, 9.0 * p.group_sizes()[i] as f64 / 6.0, epsilon = 1e-15);
        }
        // ProbabilityWeighted: c n_i / (n pi_i) with pi uniform = 1/3.
        let b = draw_batch(&p, &pi, SamplingStrategy::ProbabilityWeighted, 64, &mut rng).unwrap();
        for (&(i, _), &s) in b.pairs.iter().zip(&b.scales) {
            let ni = p.group_sizes()[i] as f64;
            assert_abs_diff_eq!(s, 3.0 * ni / (6.0 / 3.0), epsilon = 1e-12);
        }
    }

    #[test]
    fn batch_estimate_is_mean_of_single_draws() {
        let p = uneven_problem();
        let pi = skewed_weights(&p);
        let theta = arr1(&[-0.3]);
        let mut rng_a = stream(21, StreamId::Sampler);
        let mut rng_b = stream(21, StreamId::Sampler);
        let batch = draw_batch(&p, &pi, SamplingStrategy::TwoStage, 4, &mut rng_a).unwrap();
        let combined = estimate_from_batch(&p, &theta, &pi, &batch).unwrap();
        let mut mean_g = Array1::zeros(1);
        let mut mean_p = vec![0.0; p.c()];
        for _ in 0..4 {
            let single = draw_batch(&p, &pi, SamplingStrategy::TwoStage, 1, &mut rng_b).unwrap();
            let est = estimate_from_batch(&p, &theta, &pi, &single).unwrap();
            mean_g.scaled_add(0.25, &est.g);
            for (acc, v) in mean_p.iter_mut().zip(&est.p) {
                *acc += 0.25 * v;
            }
        }
        assert_abs_diff_eq!(combined.g[0], mean_g[0], epsilon = 1e-15);
        for (a, b) in combined.p.iter().zip(&mean_p) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn probability_weighted_g_ignores_the_weight_argument() {
        let p = uneven_problem();
        let pi_draw = skewed_weights(&p);
        let theta = arr1(&[0.4]);
        let mut rng = stream(9, StreamId::Sampler);
        let batch =
            draw_batch(&p, &pi_draw, SamplingStrategy::ProbabilityWeighted, 8, &mut rng).unwrap();
        let at_draw = estimate_from_batch(&p, &theta, &pi_draw, &batch).unwrap();
        let perturbed = p.initial_weights();
        let at_other = estimate_from_batch(&p, &theta, &perturbed, &batch).unwrap();
        // Frozen draws: the theta estimate carries no weight factor.
        assert_eq!(at_draw.g, at_other.g);
    }

    #[test]
    fn probability_weighted_rejects_weights_below_floor() {
        let p = uneven_problem();
        // Floor 0 admits a zero weight for the simplex type, but the
        // importance sampler cannot divide by it.
        let bad = SimplexWeights::new(vec![0.0, 0.5, 0.5], vec![1.0 / 3.0; 3], 0.0).unwrap();
        let mut rng = stream(1, StreamId::Sampler);
        assert!(matches!(
            draw_batch(&p, &bad, SamplingStrategy::ProbabilityWeighted, 1, &mut rng),
            Err(SamplingError::WeightBelowFloor { index: 0, .. })
        ));
        let good = SimplexWeights::new(vec![0.5, 0.25, 0.25], vec![1.0 / 3.0; 3], 1e-12).unwrap();
        assert!(
            draw_batch(&p, &good, SamplingStrategy::ProbabilityWeighted, 1, &mut rng).is_ok()
        );
    }

    #[test]
    fn empirical_variance_matches_hand_derivation() {
        // c = n = 2, one item per group, uniform-all draws with B = 1.
        let mk = |a: f64, b: f64| QuadItem::new(arr2(&[[a]]), arr1(&[b]));
        let groups = vec![vec![mk(1.0, 1.0)], vec![mk(2.0, -0.5)]];
        let p = DroProblem::new(LossFamily::Quadratic { groups }, 1, 1.0, 1.0).unwrap();
        let pi = p
            .initial_weights()
            .with_weights(vec![0.3, 0.7])
            .unwrap();
        let theta = arr1(&[0.6]);
        let f1 = p.item_value(0, 0, &theta);
        let f2 = p.item_value(1, 0, &theta);
        let d1 = p.item_grad(0, 0, &theta)[0];
        let d2 = p.item_grad(1, 0, &theta)[0];
        // Single uniform draw: g in {2 pi_1 d1, 2 pi_2 d2} equiprobably,
        // p in {(-2 f1, 0), (0, -2 f2)}.
        let analytic_g = (0.3 * d1 - 0.7 * d2) * (0.3 * d1 - 0.7 * d2);
        let analytic_p = f1 * f1 + f2 * f2;
        let mut rng = stream(33, StreamId::Sampler);
        let (mse_g, mse_p) = estimate_variance(
            &p,
            &theta,
            &pi,
            SamplingStrategy::UniformAll,
            1,
            20_000,
            &mut rng,
        )
        .unwrap();
        assert!((mse_g - analytic_g).abs() <= 0.05 * analytic_g);
        assert!((mse_p - analytic_p).abs() <= 0.05 * analytic_p);
    }

    #[test]
    fn exact_mode_has_zero_variance() {
        let p = make_quadratic_problem(2, 2, 3, 2);
        let pi = p.initial_weights();
        let theta = arr1(&[0.2, -0.4]);
        let a = exact_estimate(&p, &theta, &pi).unwrap();
        let b = exact_estimate(&p, &theta, &pi).unwrap();
        assert_eq!(a, b, "enumeration is deterministic");
        let full = p.grad_theta_full(&theta, &pi).unwrap();
        assert_eq!(a.g, full);
    }

    #[test]
    fn variance_estimation_rejects_degenerate_trials() {
        let p = uneven_problem();
        let pi = p.initial_weights();
        let mut rng = stream(2, StreamId::Sampler);
        let err = estimate_variance(
            &p,
            &arr1(&[0.0]),
            &pi,
            SamplingStrategy::UniformAll,
            1,
            1,
            &mut rng,
        );
        assert_eq!(err.unwrap_err(), SamplingError::TooFewTrials(1));
    }
}
