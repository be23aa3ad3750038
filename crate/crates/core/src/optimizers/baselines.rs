//! Comparison loops: non-robust Adam with frozen weights, and plain
//! stochastic gradient descent-ascent without optimism.
//!
//! The frozen-weight loops deliberately run the exact arithmetic of
//! [`super::also_step`] with `alpha = 0` and an immovable `pi`, so the
//! reduction "adaptive solver with optimism and weight steps disabled
//! equals Adam" holds bit for bit, not just approximately.

use std::time::Instant;

use ndarray::Array1;

use crate::problems::DroProblem;
use crate::rng::Rng;
use crate::simplex::{self, SimplexWeights};
use crate::trajectory::{RunMeta, TrajectoryRecord};

use super::also::{optimistic_theta_direction, AlsoConfig};
use super::{ensure_finite, oracle_estimate, record_row, AdamState, RecordSpec, SolverError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineVariant {
    /// Adam on the uniformly weighted objective; `pi` frozen uniform.
    /// The regularizer enters the gradient fed to Adam, matching the
    /// adaptive solver's placement.
    AdamUniform,
    /// Adam with decoupled weight decay: the regularizer bypasses the
    /// moment estimates and shrinks `theta` directly. Kept as a labeled
    /// alternative because the two placements genuinely differ.
    AdamwUniform,
    /// Adam with `pi` frozen proportional to inverse group sizes.
    StaticWeights,
    /// Descent-ascent without optimism or adaptivity: a plain gradient
    /// step in `theta` and a mirror step in `pi`.
    Sgda,
}

impl BaselineVariant {
    pub fn name(&self) -> &'static str {
        match self {
            BaselineVariant::AdamUniform => "adam_uniform",
            BaselineVariant::AdamwUniform => "adamw_uniform",
            BaselineVariant::StaticWeights => "static_weights",
            BaselineVariant::Sgda => "sgda",
        }
    }
}

/// Weights proportional to `1 / n_i`: each group contributes equally to
/// the frozen mixture regardless of its size.
fn inverse_size_weights(problem: &DroProblem) -> Result<SimplexWeights, SolverError> {
    let inv: Vec<f64> = problem
        .group_sizes()
        .iter()
        .map(|&n| 1.0 / n as f64)
        .collect();
    let sum: f64 = inv.iter().sum();
    let weights: Vec<f64> = inv.iter().map(|&v| v / sum).collect();
    Ok(problem.initial_weights().with_weights(weights)?)
}

/// Runs the selected baseline. `config` supplies stepsizes, the Adam
/// parameters, the oracle, and the iteration budget; `alpha` and
/// `pi_update` are ignored.
pub fn run_baseline(
    problem: &DroProblem,
    variant: BaselineVariant,
    config: &AlsoConfig,
    theta0: &Array1<f64>,
    rng: &mut Rng,
    spec: &RecordSpec,
    meta: RunMeta,
) -> Result<(TrajectoryRecord, Array1<f64>), SolverError> {
    match variant {
        BaselineVariant::AdamUniform => {
            let pi = SimplexWeights::uniform(problem.c());
            run_frozen_adam(problem, config, theta0, &pi, false, rng, spec, meta)
        }
        BaselineVariant::AdamwUniform => {
            let pi = SimplexWeights::uniform(problem.c());
            run_frozen_adam(problem, config, theta0, &pi, true, rng, spec, meta)
        }
        BaselineVariant::StaticWeights => {
            let pi = inverse_size_weights(problem)?;
            run_frozen_adam(problem, config, theta0, &pi, false, rng, spec, meta)
        }
        BaselineVariant::Sgda => run_sgda(problem, config, theta0, rng, spec, meta),
    }
}

#[allow(clippy::too_many_arguments)]
fn run_frozen_adam(
    problem: &DroProblem,
    config: &AlsoConfig,
    theta0: &Array1<f64>,
    pi: &SimplexWeights,
    decoupled_decay: bool,
    rng: &mut Rng,
    spec: &RecordSpec,
    meta: RunMeta,
) -> Result<(TrajectoryRecord, Array1<f64>), SolverError> {
    let started = Instant::now();
    let mut record = TrajectoryRecord::with_meta(meta);
    let mut theta = theta0.clone();
    let mut adam = AdamState::new(problem.dim(), &config.adam);
    record_row(problem, &theta, pi, 0, spec, started, &mut record)?;
    for k in 1..=config.iterations {
        let est = oracle_estimate(problem, &theta, pi, config.oracle, rng)?;
        ensure_finite(est.g.as_slice().unwrap(), "theta estimate", k)?;
        let tau_in_grad = if decoupled_decay {
            0.0
        } else {
            problem.tau_theta()
        };
        let g_hat = optimistic_theta_direction(&est.g, None, 0.0, tau_in_grad, &theta);
        let direction = adam.direction(&g_hat, &config.adam);
        if decoupled_decay {
            theta *= 1.0 - config.gamma_theta * problem.tau_theta();
        }
        theta.scaled_add(-config.gamma_theta, &direction);
        ensure_finite(theta.as_slice().unwrap(), "theta iterate", k)?;
        if !spec.due(k, config.iterations) {
            continue;
        }
        record_row(problem, &theta, pi, k, spec, started, &mut record)?;
        if let Some(tol) = config.stop_grad_norm {
            if record.last().expect("row was just pushed").grad_norm <= tol {
                break;
            }
        }
    }
    Ok((record, theta))
}

fn run_sgda(
    problem: &DroProblem,
    config: &AlsoConfig,
    theta0: &Array1<f64>,
    rng: &mut Rng,
    spec: &RecordSpec,
    meta: RunMeta,
) -> Result<(TrajectoryRecord, Array1<f64>), SolverError> {
    let started = Instant::now();
    let mut record = TrajectoryRecord::with_meta(meta);
    let mut theta = theta0.clone();
    let mut pi = problem.initial_weights();
    record_row(problem, &theta, &pi, 0, spec, started, &mut record)?;
    for k in 1..=config.iterations {
        let est = oracle_estimate(problem, &theta, &pi, config.oracle, rng)?;
        ensure_finite(est.g.as_slice().unwrap(), "theta estimate", k)?;
        ensure_finite(&est.p, "pi estimate", k)?;
        let g_hat =
            optimistic_theta_direction(&est.g, None, 0.0, problem.tau_theta(), &theta);
        theta.scaled_add(-config.gamma_theta, &g_hat);
        ensure_finite(theta.as_slice().unwrap(), "theta iterate", k)?;
        pi = simplex::entropic_prox_step(&pi, &est.p, config.gamma_pi, problem.tau_pi())?;
        if spec.due(k, config.iterations) {
            record_row(problem, &theta, &pi, k, spec, started, &mut record)?;
        }
    }
    Ok((record, theta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizers::GradientOracle;
    use crate::problems::{make_quadratic_problem, DroProblem, LossFamily, QuadItem};
    use crate::rng::{stream, StreamId};
    use crate::sampling::SamplingStrategy;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn static_weights_are_inverse_group_sizes() {
        // Sizes (1, 3): weights proportional to (1, 1/3) -> (3/4, 1/4).
        let groups = vec![
            vec![QuadItem::new(array![[1.0]], array![0.0])],
            vec![
                QuadItem::new(array![[1.0]], array![1.0]),
                QuadItem::new(array![[1.0]], array![2.0]),
                QuadItem::new(array![[1.0]], array![3.0]),
            ],
        ];
        let problem = DroProblem::new(LossFamily::Quadratic { groups }, 1, 1.0, 1.0).unwrap();
        let pi = inverse_size_weights(&problem).unwrap();
        assert_abs_diff_eq!(pi.weights()[0], 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(pi.weights()[1], 0.25, epsilon = 1e-15);
    }

    #[test]
    fn balanced_groups_make_static_weights_equal_adam_uniform() {
        // Group sizes are powers of two, so the inverse-size weights are
        // bitwise identical to the uniform ones and the two baselines
        // must produce byte-identical runs under the same seed.
        let problem = make_quadratic_problem(9, 3, 4, 2);
        let config = AlsoConfig::new(0.05, 0.0, 60).with_oracle(GradientOracle::Sampled {
            strategy: SamplingStrategy::TwoStage,
            batch: 3,
        });
        let run = |variant| {
            let mut rng = stream(1, StreamId::Sampler);
            run_baseline(
                &problem,
                variant,
                &config,
                &Array1::zeros(3),
                &mut rng,
                &RecordSpec::every(10),
                RunMeta::new(BaselineVariant::name(&variant), 1),
            )
            .unwrap()
        };
        let (rec_u, theta_u) = run(BaselineVariant::AdamUniform);
        let (rec_s, theta_s) = run(BaselineVariant::StaticWeights);
        assert_eq!(theta_u, theta_s, "balanced groups must give identical runs");
        let h_u: Vec<f64> = rec_u.rows.iter().map(|r| r.h).collect();
        let h_s: Vec<f64> = rec_s.rows.iter().map(|r| r.h).collect();
        assert_eq!(h_u, h_s);
    }

    #[test]
    fn decoupled_decay_differs_from_coupled_on_regularized_problems() {
        let problem = make_quadratic_problem(10, 2, 2, 2);
        assert!(problem.tau_theta() > 0.0);
        let config = AlsoConfig::new(0.05, 0.0, 30);
        let run = |variant| {
            let mut rng = stream(4, StreamId::Sampler);
            run_baseline(
                &problem,
                variant,
                &config,
                &ndarray::array![1.0, -1.0],
                &mut rng,
                &RecordSpec::every(0),
                RunMeta::new(BaselineVariant::name(&variant), 4),
            )
            .unwrap()
            .1
        };
        let coupled = run(BaselineVariant::AdamUniform);
        let decoupled = run(BaselineVariant::AdamwUniform);
        assert_ne!(
            coupled, decoupled,
            "weight-decay placement must change the trajectory"
        );
    }

    #[test]
    fn sgda_step_matches_hand_computation() {
        let groups = vec![
            vec![QuadItem::new(array![[1.0]], array![1.0])],
            vec![QuadItem::new(array![[1.0]], array![-1.0])],
        ];
        let problem = DroProblem::new(LossFamily::Quadratic { groups }, 1, 1.0, 1.0).unwrap();
        let config = AlsoConfig::new(0.1, 0.0, 1);
        let theta0 = array![0.5];
        let mut rng = stream(0, StreamId::Sampler);
        let (_, theta) = run_baseline(
            &problem,
            BaselineVariant::Sgda,
            &config,
            &theta0,
            &mut rng,
            &RecordSpec::every(1),
            RunMeta::new("sgda", 0),
        )
        .unwrap();
        // Exact oracle: grad = 0.5 (theta - 1) + 0.5 (theta + 1) = theta,
        // plus tau_theta theta = 2 theta at theta = 0.5; step 0.1.
        assert_abs_diff_eq!(theta[0], 0.5 - 0.1 * 1.0, epsilon = 1e-15);
    }
}
