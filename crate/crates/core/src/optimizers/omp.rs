//! Optimistic mirror-prox with exact prox steps.
//!
//! The iteration tracks the saddle operator
//!
//! ```text
//! F(theta, pi) = [ sum_i pi_i grad g_i(theta) ; -g_1(theta), ..., -g_c(theta) ]
//! ```
//!
//! (losses enter the weight block negated: a group with higher loss must
//! receive more mass). Each step forms the optimistic extrapolation
//! `F_hat = (1 + alpha) F(z_k) - alpha F(z_{k-1})` and applies the exact
//! prox of the regularizers:
//!
//! * `theta`: closed-form damped gradient step with effective stepsize
//!   `gamma_theta / (1 + gamma_theta tau_theta)`,
//! * `pi`: entropic mirror step against the prior with effective stepsize
//!   `gamma_pi / (1 + gamma_pi tau_pi)`, followed by the floor projection.
//!
//! With `gamma <= 1 / (2 L_F)` and `alpha = 1 / (1 + gamma tau)` the
//! distance-plus-divergence Lyapunov function contracts by at least
//! `1 - gamma tau / 2` per step; [`OmpConfig::theorem_mode`] installs
//! exactly that pairing.

use std::time::Instant;

use ndarray::Array1;

use crate::problems::DroProblem;
use crate::simplex::{self, SimplexWeights};
use crate::trajectory::{RunMeta, TrajectoryRecord};

use super::{ensure_finite, record_row, RecordSpec, SolverError};

#[derive(Debug, Clone)]
pub struct OmpConfig {
    pub gamma_theta: f64,
    pub gamma_pi: f64,
    /// Optimism coefficient on the previous operator evaluation.
    pub alpha: f64,
    /// Strong-convexity modulus used only to derive `alpha` defaults;
    /// the prox steps read their regularizers from the problem.
    pub tau: f64,
    pub iterations: usize,
    /// Stop early once one full step moves the iterate less than this.
    pub stop_displacement: Option<f64>,
    /// Deliberately flips the sign of the weight-block direction; exists
    /// so diagnostics can demonstrate they catch a miswired ascent step.
    pub pi_sign_fault: bool,
}

impl OmpConfig {
    /// Equal stepsizes with the rate-optimal optimism `1 / (1 + gamma tau)`.
    pub fn new(gamma: f64, tau: f64, iterations: usize) -> Self {
        Self {
            gamma_theta: gamma,
            gamma_pi: gamma,
            alpha: 1.0 / (1.0 + gamma * tau),
            tau,
            iterations,
            stop_displacement: None,
            pi_sign_fault: false,
        }
    }

    /// The certified-rate configuration: `gamma = 1 / (2 L_F)` from the
    /// problem's operator Lipschitz bound and `tau = min(tau_theta,
    /// tau_pi)`.
    pub fn theorem_mode(problem: &DroProblem, iterations: usize) -> Self {
        let tau = problem.tau_theta().min(problem.tau_pi());
        let gamma = 1.0 / (2.0 * problem.operator_lipschitz());
        Self::new(gamma, tau, iterations)
    }

    /// Guaranteed per-step contraction factor `1 - gamma tau / 2` (only
    /// meaningful when the stepsize rule holds).
    pub fn certified_rate(&self) -> f64 {
        1.0 - self.gamma_theta.min(self.gamma_pi) * self.tau / 2.0
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
                "omp stepsizes must be finite and positive, got gamma_theta={} gamma_pi={} alpha={}",
                self.gamma_theta, self.gamma_pi, self.alpha
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct OmpState {
    pub theta: Array1<f64>,
    pub pi: SimplexWeights,
    /// Operator evaluation at the previous iterate (theta block).
    prev_g: Array1<f64>,
    /// Operator evaluation at the previous iterate (pi block).
    prev_p: Vec<f64>,
    pub k: usize,
}

impl OmpState {
    /// Starts at `(theta0, prior)`; the fictitious iterate `z_{-1}` is the
    /// start itself, so the first extrapolation is a plain evaluation.
    pub fn init(problem: &DroProblem, theta0: &Array1<f64>) -> Result<Self, SolverError> {
        let pi = problem.initial_weights();
        let (g, p) = operator(problem, theta0, &pi, 0)?;
        Ok(Self {
            theta: theta0.clone(),
            pi,
            prev_g: g,
            prev_p: p,
            k: 0,
        })
    }

    /// Starts from an explicit weight vector instead of the prior.
    pub fn init_at(
        problem: &DroProblem,
        theta0: &Array1<f64>,
        pi0: SimplexWeights,
    ) -> Result<Self, SolverError> {
        let (g, p) = operator(problem, theta0, &pi0, 0)?;
        Ok(Self {
            theta: theta0.clone(),
            pi: pi0,
            prev_g: g,
            prev_p: p,
            k: 0,
        })
    }
}

/// Evaluates the saddle operator `F` at `(theta, pi)`.
fn operator(
    problem: &DroProblem,
    theta: &Array1<f64>,
    pi: &SimplexWeights,
    iteration: usize,
) -> Result<(Array1<f64>, Vec<f64>), SolverError> {
    let g = problem.grad_theta_full(theta, pi)?;
    ensure_finite(g.as_slice().unwrap(), "theta operator", iteration)?;
    let p: Vec<f64> = problem
        .group_losses(theta)?
        .into_iter()
        .map(|v| -v)
        .collect();
    ensure_finite(&p, "pi operator", iteration)?;
    Ok((g, p))
}

/// Euclidean displacement between two states over both blocks. A zero
/// displacement certifies an exact fixed point, which for this iteration
/// is exactly the saddle point.
pub fn displacement(a: &OmpState, b: &OmpState) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.theta.iter().zip(b.theta.iter()) {
        s += (x - y) * (x - y);
    }
    for (x, y) in a.pi.weights().iter().zip(b.pi.weights().iter()) {
        s += (x - y) * (x - y);
    }
    s.sqrt()
}

/// Advances the state by one optimistic prox step.
pub fn omp_step(
    state: &mut OmpState,
    problem: &DroProblem,
    config: &OmpConfig,
) -> Result<(), SolverError> {
    let (g_cur, p_cur) = operator(problem, &state.theta, &state.pi, state.k)?;

    let a = config.alpha;
    let mut g_hat = &g_cur * (1.0 + a);
    g_hat.scaled_add(-a, &state.prev_g);
    let mut p_hat: Vec<f64> = p_cur
        .iter()
        .zip(state.prev_p.iter())
        .map(|(&cur, &prev)| (1.0 + a) * cur - a * prev)
        .collect();
    if config.pi_sign_fault {
        for v in &mut p_hat {
            *v = -*v;
        }
    }

    let tau_theta = problem.tau_theta();
    let step = config.gamma_theta / (1.0 + config.gamma_theta * tau_theta);
    let mut direction = g_hat;
    direction.scaled_add(tau_theta, &state.theta);
    state.theta.scaled_add(-step, &direction);
    ensure_finite(state.theta.as_slice().unwrap(), "theta iterate", state.k)?;

    state.pi = simplex::entropic_prox_step(&state.pi, &p_hat, config.gamma_pi, problem.tau_pi())?;

    state.prev_g = g_cur;
    state.prev_p = p_cur;
    state.k += 1;
    Ok(())
}

/// Runs the full loop and returns the recorded trajectory.
pub fn run_omp(
    problem: &DroProblem,
    config: &OmpConfig,
    theta0: &Array1<f64>,
    spec: &RecordSpec,
    meta: RunMeta,
) -> Result<(TrajectoryRecord, OmpState), SolverError> {
    config.validate()?;
    let started = Instant::now();
    let mut record = TrajectoryRecord::with_meta(meta);
    let mut state = OmpState::init(problem, theta0)?;
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
        let before = state.clone();
        omp_step(&mut state, problem, config)?;
        let stopped = match config.stop_displacement {
            Some(tol) => displacement(&before, &state) <= tol,
            None => false,
        };
        if spec.due(k, config.iterations) || stopped {
            record_row(
                problem,
                &state.theta,
                &state.pi,
                k,
                spec,
                started,
                &mut record,
            )?;
        }
        if stopped {
            break;
        }
    }
    Ok((record, state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_quadratic_problem, DroProblem, LossFamily, QuadItem};
    use crate::trajectory::RunMeta;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    /// Two mirrored quadratic groups. The saddle is exactly
    /// `theta = 0`, `pi = (1/2, 1/2)` by symmetry.
    fn mirrored_pair() -> DroProblem {
        let groups = vec![
            vec![QuadItem::new(array![[1.0]], array![1.0])],
            vec![QuadItem::new(array![[1.0]], array![-1.0])],
        ];
        DroProblem::new(LossFamily::Quadratic { groups }, 1, 1.0, 1.0).unwrap()
    }

    #[test]
    fn saddle_point_is_an_exact_fixed_point() {
        let problem = mirrored_pair();
        let config = OmpConfig::new(0.2, 1.0, 10);
        let mut state = OmpState::init(&problem, &array![0.0]).unwrap();
        let before = state.clone();
        omp_step(&mut state, &problem, &config).unwrap();
        assert_eq!(
            displacement(&before, &state),
            0.0,
            "the exact saddle must be bitwise stationary under the prox step"
        );
    }

    #[test]
    fn single_group_saddle_matches_analytic_solution() {
        // One quadratic item 0.5 (2 theta - 3)^2 with tau_theta = 1:
        // stationarity 4 theta - 6 + theta = 0, theta* = 1.2.
        let groups = vec![vec![QuadItem::new(array![[2.0]], array![3.0])]];
        let problem = DroProblem::new(LossFamily::Quadratic { groups }, 1, 1.0, 1.0).unwrap();
        let config = OmpConfig::theorem_mode(&problem, 4000);
        let (_, state) = run_omp(
            &problem,
            &config,
            &array![0.0],
            &RecordSpec::every(0),
            RunMeta::new("fixture", 0),
        )
        .unwrap();
        assert_abs_diff_eq!(state.theta[0], 1.2, epsilon = 1e-10);
        assert_eq!(state.pi.weights()[0], 1.0);
    }

    #[test]
    fn theorem_mode_contracts_to_machine_precision() {
        let problem = make_quadratic_problem(7, 3, 4, 2);
        let mut config = OmpConfig::theorem_mode(&problem, 20_000);
        config.stop_displacement = Some(1e-14);
        let (record, state) = run_omp(
            &problem,
            &config,
            &Array1::zeros(3),
            &RecordSpec::every(0),
            RunMeta::new("fixture", 0),
        )
        .unwrap();
        assert!(
            state.k < config.iterations,
            "expected early stop, ran all {} iterations",
            state.k
        );
        // The iterate must be a near-fixed point: one more step barely moves.
        let mut next = state.clone();
        omp_step(&mut next, &problem, &config).unwrap();
        assert!(
            displacement(&state, &next) <= 1e-12,
            "displacement after convergence was {}",
            displacement(&state, &next)
        );
        assert!(record.last().unwrap().h.is_finite());
    }

    #[test]
    fn sign_fault_sends_weights_toward_low_loss_groups() {
        let problem = mirrored_pair();
        // At theta = 0.5 group two (items centered at -1) has the larger
        // loss, so a correct ascent step must increase its weight.
        let theta = array![0.5];
        let config = OmpConfig::new(0.2, 1.0, 1);
        let mut honest = OmpState::init(&problem, &theta).unwrap();
        omp_step(&mut honest, &problem, &config).unwrap();
        assert!(
            honest.pi.weights()[1] > 0.5,
            "higher-loss group should gain mass, got {:?}",
            honest.pi.weights()
        );

        let faulted_config = OmpConfig {
            pi_sign_fault: true,
            ..config
        };
        let mut faulted = OmpState::init(&problem, &theta).unwrap();
        omp_step(&mut faulted, &problem, &faulted_config).unwrap();
        assert!(
            faulted.pi.weights()[1] < 0.5,
            "the sign fault must push mass the wrong way, got {:?}",
            faulted.pi.weights()
        );
    }

    #[test]
    fn rejects_non_positive_stepsizes() {
        let problem = mirrored_pair();
        let mut config = OmpConfig::new(0.2, 1.0, 1);
        config.gamma_theta = 0.0;
        let err = run_omp(
            &problem,
            &config,
            &array![0.0],
            &RecordSpec::every(0),
            RunMeta::new("fixture", 0),
        )
        .unwrap_err();
        assert!(
            err.to_string().contains("gamma_theta"),
            "unexpected error: {err}"
        );
    }
}
