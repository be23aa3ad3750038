//! Adaptive lookahead stochastic optimizer.
//!
//! The loop mirrors [`super::omp`] but targets large problems where only
//! mini-batch estimates of the operator are affordable:
//!
//! 1. draw an unbiased estimate `(g, p)` of the operator via one of the
//!    [`crate::sampling`] strategies (or evaluate exactly),
//! 2. form optimistic combinations `g_hat = (1 + alpha) g_k - alpha
//!    g_{k-1} + tau_theta theta` and `p_hat = (1 + alpha) p_k - alpha
//!    p_{k-1}`, with the fictitious estimates at `k = 0` set to zero,
//! 3. feed `g_hat` through an Adam direction and take a `gamma_theta`
//!    step in `theta`,
//! 4. update the weights by one of two prox rules.
//!
//! The weight rules are [`PiUpdate::EntropicMirror`], the same damped
//! mirror step the deterministic solver uses, and
//! [`PiUpdate::ConstrainedProx`], the stepsize-free update
//! `SM[(ln prior + ln pi - p_hat) / 2]` projected onto the floored
//! simplex. The second form bakes the prior-divergence weight into the
//! average inside the softmax, so `gamma_pi` is ignored there.
//!
//! With `alpha = 0`, `gamma_pi = 0`, a uniform prior, and the mirror
//! update, the weights never move and the `theta` recursion reduces to
//! plain Adam on the uniformly weighted objective, arithmetic included;
//! the baselines in [`super::baselines`] share this code path so the
//! reduction is reproducible bit for bit.

use std::time::Instant;

use ndarray::Array1;

use crate::problems::DroProblem;
use crate::rng::Rng;
use crate::sampling::{
    draw_batch, estimate_from_batch, exact_estimate, SamplingStrategy, StochasticEstimate,
};
use crate::simplex::{self, SimplexWeights};
use crate::trajectory::{RunMeta, TrajectoryRecord};

use super::{ensure_finite, record_row, AdamParams, AdamState, RecordSpec, SolverError};

/// Weight-block update rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PiUpdate {
    /// Damped entropic mirror step with stepsize `gamma_pi` (option one).
    EntropicMirror,
    /// Stepsize-free floored prox `SM[(ln prior + ln pi - p_hat) / 2]`
    /// (option two); `gamma_pi` is unused.
    ConstrainedProx,
}

/// Where the operator estimates come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientOracle {
    /// Full enumeration; deterministic and variance-free.
    Exact,
    /// Mini-batch of `batch` independent draws, averaged.
    Sampled {
        strategy: SamplingStrategy,
        batch: usize,
    },
}

#[derive(Debug, Clone)]
pub struct AlsoConfig {
    pub gamma_theta: f64,
    pub gamma_pi: f64,
    pub adam: AdamParams,
    /// Optimism coefficient; the reference configuration is `1`.
    pub alpha: f64,
    pub oracle: GradientOracle,
    pub iterations: usize,
    pub pi_update: PiUpdate,
    /// Stop at a checkpoint once the full regularized gradient norm in
    /// `theta` falls below this.
    pub stop_grad_norm: Option<f64>,
    /// Deliberately flips the sign of the weight-block direction; exists
    /// so diagnostics can demonstrate they catch a miswired ascent step.
    pub pi_sign_fault: bool,
}

impl AlsoConfig {
    pub fn new(gamma_theta: f64, gamma_pi: f64, iterations: usize) -> Self {
        Self {
            gamma_theta,
            gamma_pi,
            adam: AdamParams::default(),
            alpha: 1.0,
            oracle: GradientOracle::Exact,
            iterations,
            pi_update: PiUpdate::EntropicMirror,
            stop_grad_norm: None,
            pi_sign_fault: false,
        }
    }

    /// The configuration covered by the stationarity analysis: no
    /// optimism, scalar-norm Adam, mirror weight update.
    pub fn envelope_preset(gamma_theta: f64, gamma_pi: f64, iterations: usize) -> Self {
        Self {
            adam: AdamParams::scalar_norm(),
            alpha: 0.0,
            ..Self::new(gamma_theta, gamma_pi, iterations)
        }
    }

    pub fn with_oracle(mut self, oracle: GradientOracle) -> Self {
        self.oracle = oracle;
        self
    }

    fn validate(&self) -> Result<(), SolverError> {
        let ok = self.gamma_theta > 0.0
            && self.gamma_theta.is_finite()
            && self.gamma_pi >= 0.0
            && self.gamma_pi.is_finite()
            && self.alpha >= 0.0
            && self.alpha.is_finite();
        if !ok {
            return Err(SolverError::BadConfig(format!(
                "also stepsizes must be finite and positive, got gamma_theta={} gamma_pi={} alpha={}",
                self.gamma_theta, self.gamma_pi, self.alpha
            )));
        }
        if let GradientOracle::Sampled { batch, .. } = self.oracle {
            if batch == 0 {
                return Err(SolverError::BadConfig(
                    "sampled oracle needs a batch size of at least one".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct AlsoState {
    pub theta: Array1<f64>,
    pub pi: SimplexWeights,
    pub adam: AdamState,
    prev_g: Array1<f64>,
    prev_p: Vec<f64>,
    pub k: usize,
}

impl AlsoState {
    /// Starts at `(theta0, prior)` with zeroed moments and zeroed
    /// previous estimates.
    pub fn init(problem: &DroProblem, theta0: &Array1<f64>, params: &AdamParams) -> Self {
        Self {
            theta: theta0.clone(),
            pi: problem.initial_weights(),
            adam: AdamState::new(problem.dim(), params),
            prev_g: Array1::zeros(problem.dim()),
            prev_p: vec![0.0; problem.c()],
            k: 0,
        }
    }
}

/// Optimistic theta direction `(1 + alpha) g - alpha g_prev + tau_theta
/// theta`. The baselines reuse this with `alpha = 0` so their arithmetic
/// is identical to the reduced solver, operation for operation; the
/// lookback term is skipped entirely at `alpha = 0` to keep that
/// reduction exact even around signed zeros.
pub(crate) fn optimistic_theta_direction(
    est_g: &Array1<f64>,
    prev_g: Option<&Array1<f64>>,
    alpha: f64,
    tau_theta: f64,
    theta: &Array1<f64>,
) -> Array1<f64> {
    let mut g_hat = est_g * (1.0 + alpha);
    if alpha != 0.0 {
        if let Some(prev) = prev_g {
            g_hat.scaled_add(-alpha, prev);
        }
    }
    g_hat.scaled_add(tau_theta, theta);
    g_hat
}

pub(crate) fn oracle_estimate(
    problem: &DroProblem,
    theta: &Array1<f64>,
    pi: &SimplexWeights,
    oracle: GradientOracle,
    rng: &mut Rng,
) -> Result<StochasticEstimate, SolverError> {
    let est = match oracle {
        GradientOracle::Exact => exact_estimate(problem, theta, pi)?,
        GradientOracle::Sampled { strategy, batch } => {
            let drawn = draw_batch(problem, pi, strategy, batch, rng)?;
            estimate_from_batch(problem, theta, pi, &drawn)?
        }
    };
    Ok(est)
}

/// Advances the state by one adaptive step.
pub fn also_step(
    state: &mut AlsoState,
    problem: &DroProblem,
    config: &AlsoConfig,
    rng: &mut Rng,
) -> Result<(), SolverError> {
    let est = oracle_estimate(problem, &state.theta, &state.pi, config.oracle, rng)?;
    ensure_finite(est.g.as_slice().unwrap(), "theta estimate", state.k)?;
    ensure_finite(&est.p, "pi estimate", state.k)?;

    let a = config.alpha;
    let g_hat = optimistic_theta_direction(
        &est.g,
        Some(&state.prev_g),
        a,
        problem.tau_theta(),
        &state.theta,
    );
    let mut p_hat: Vec<f64> = est
        .p
        .iter()
        .zip(state.prev_p.iter())
        .map(|(&cur, &prev)| (1.0 + a) * cur - a * prev)
        .collect();
    if config.pi_sign_fault {
        for v in &mut p_hat {
            *v = -*v;
        }
    }

    let direction = state.adam.direction(&g_hat, &config.adam);
    state.theta.scaled_add(-config.gamma_theta, &direction);
    ensure_finite(state.theta.as_slice().unwrap(), "theta iterate", state.k)?;

    state.pi = match config.pi_update {
        PiUpdate::EntropicMirror => {
            simplex::entropic_prox_step(&state.pi, &p_hat, config.gamma_pi, problem.tau_pi())?
        }
        PiUpdate::ConstrainedProx => {
            simplex::constrained_prox_step(&state.pi, &p_hat, state.pi.floor())?
        }
    };

    state.prev_g = est.g;
    state.prev_p = est.p;
    state.k += 1;
    Ok(())
}

/// Runs the full loop and returns the recorded trajectory.
pub fn run_also(
    problem: &DroProblem,
    config: &AlsoConfig,
    theta0: &Array1<f64>,
    rng: &mut Rng,
    spec: &RecordSpec,
    meta: RunMeta,
) -> Result<(TrajectoryRecord, AlsoState), SolverError> {
    config.validate()?;
    let started = Instant::now();
    let mut record = TrajectoryRecord::with_meta(meta);
    let mut state = AlsoState::init(problem, theta0, &config.adam);
    record_row(
        problem,
        &state.theta,
        &state.pi,
        0,
        spec,
        started,
        &mut record,
    )?;
    for k in 1..=config.iterations {
        also_step(&mut state, problem, config, rng)?;
        if !spec.due(k, config.iterations) {
            continue;
        }
        record_row(
            problem,
            &state.theta,
            &state.pi,
            k,
            spec,
            started,
            &mut record,
        )?;
        if let Some(tol) = config.stop_grad_norm {
            let last = record.last().expect("row was just pushed");
            if last.grad_norm <= tol {
                break;
            }
        }
    }
    Ok((record, state))
}
