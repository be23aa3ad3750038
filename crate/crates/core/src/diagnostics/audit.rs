//! Finite-difference audit of the analytic oracles.
//!
//! Checks the hand-written gradients against central differences of the
//! objective itself, on both blocks:
//!
//! * `theta` block: coordinate differences of `h(theta, pi)` against
//!   `sum_i pi_i grad g_i + tau_theta theta`.
//! * `pi` block: the simplex has no coordinate directions, so the audit
//!   differences along the tangent basis `e_i - e_c` and compares with
//!   the analytic directional derivative
//!   `(g_i - g_c) - tau_pi (ln(pi_i / prior_i) - ln(pi_c / prior_c))`.
//!
//! Errors are reported relative to `max(1, |analytic|)`, so tiny
//! derivatives are judged on absolute terms.

use ndarray::Array1;

use crate::problems::DroProblem;
use crate::simplex::SimplexWeights;

use super::DiagnosticsError;

#[derive(Debug, Clone, Copy)]
pub struct FdReport {
    /// Worst relative error over theta coordinates.
    pub theta_max_rel: f64,
    /// Worst relative error over simplex tangent directions.
    pub pi_max_rel: f64,
    /// Step actually used.
    pub step: f64,
}

/// Runs the audit at `(theta, pi)` with central-difference step `step`.
/// The weights must sit far enough inside the floor for `pi + step d` to
/// remain feasible.
pub fn finite_difference_audit(
    problem: &DroProblem,
    theta: &Array1<f64>,
    pi: &SimplexWeights,
    step: f64,
) -> Result<FdReport, DiagnosticsError> {
    let mut analytic = problem.grad_theta_full(theta, pi)?;
    analytic.scaled_add(problem.tau_theta(), theta);

    let mut theta_max_rel: f64 = 0.0;
    for i in 0..theta.len() {
        let mut plus = theta.clone();
        plus[i] += step;
        let mut minus = theta.clone();
        minus[i] -= step;
        let fd = (problem.objective_h(&plus, pi)? - problem.objective_h(&minus, pi)?)
            / (2.0 * step);
        let rel = (fd - analytic[i]).abs() / analytic[i].abs().max(1.0);
        theta_max_rel = theta_max_rel.max(rel);
    }

    let mut pi_max_rel: f64 = 0.0;
    let c = pi.len();
    if c >= 2 {
        let losses = problem.group_losses(theta)?;
        let w = pi.weights();
        let prior = pi.prior();
        let last = c - 1;
        for i in 0..last {
            let directional = (losses[i] - losses[last])
                - problem.tau_pi()
                    * ((w[i] / prior[i]).ln() - (w[last] / prior[last]).ln());

            let mut plus = w.to_vec();
            plus[i] += step;
            plus[last] -= step;
            let mut minus = w.to_vec();
            minus[i] -= step;
            minus[last] += step;
            let pi_plus = SimplexWeights::new(plus, prior.to_vec(), pi.floor())?;
            let pi_minus = SimplexWeights::new(minus, prior.to_vec(), pi.floor())?;
            let fd = (problem.objective_h(theta, &pi_plus)?
                - problem.objective_h(theta, &pi_minus)?)
                / (2.0 * step);
            let rel = (fd - directional).abs() / directional.abs().max(1.0);
            pi_max_rel = pi_max_rel.max(rel);
        }
    }

    Ok(FdReport {
        theta_max_rel,
        pi_max_rel,
        step,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{
        make_imbalanced_logistic, make_quadratic_problem, make_tiny_mlp, MlpDataSpec,
    };
    use crate::rng::{stream, StreamId};
    use ndarray::array;

    #[test]
    fn quadratic_oracles_pass_at_tight_tolerance() {
        // Central differences are exact for quadratics up to roundoff.
        let problem = make_quadratic_problem(41, 3, 3, 2);
        let pi = problem
            .initial_weights()
            .with_weights(vec![0.5, 0.2, 0.3])
            .unwrap();
        let theta = array![0.4, -1.1, 0.25];
        let report = finite_difference_audit(&problem, &theta, &pi, 1e-6).unwrap();
        assert!(
            report.theta_max_rel < 1e-8,
            "theta mismatch {}",
            report.theta_max_rel
        );
        assert!(
            report.pi_max_rel < 1e-8,
            "pi mismatch {}",
            report.pi_max_rel
        );
    }

    #[test]
    fn logistic_oracles_pass() {
        let imb = make_imbalanced_logistic(42, 3, 12, 5);
        let problem = &imb.problem;
        let theta = array![0.3, -0.2, 0.1];
        let pi = problem.initial_weights();
        let report = finite_difference_audit(problem, &theta, &pi, 1e-6).unwrap();
        assert!(
            report.theta_max_rel < 1e-7,
            "theta mismatch {}",
            report.theta_max_rel
        );
        assert!(
            report.pi_max_rel < 1e-7,
            "pi mismatch {}",
            report.pi_max_rel
        );
    }

    #[test]
    fn network_oracles_pass() {
        let problem = make_tiny_mlp(
            43,
            2,
            3,
            MlpDataSpec {
                n_per_class: 5,
                separation: 2.0,
            },
        );
        let mut rng = stream(43, StreamId::Init);
        let theta = problem.initial_theta(&mut rng);
        let pi = problem.initial_weights();
        let report = finite_difference_audit(&problem, &theta, &pi, 1e-6).unwrap();
        assert!(
            report.theta_max_rel < 1e-6,
            "theta mismatch {}",
            report.theta_max_rel
        );
        assert!(
            report.pi_max_rel < 1e-6,
            "pi mismatch {}",
            report.pi_max_rel
        );
    }

    #[test]
    fn single_group_problems_skip_the_pi_block() {
        let problem = make_quadratic_problem(44, 2, 1, 3);
        let theta = array![0.1, 0.9];
        let report =
            finite_difference_audit(&problem, &theta, &problem.initial_weights(), 1e-6).unwrap();
        assert_eq!(report.pi_max_rel, 0.0);
    }
}
