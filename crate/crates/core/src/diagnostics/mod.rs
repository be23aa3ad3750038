//! Verification instruments for solver runs.
//!
//! Everything here exists to check claims, not to make progress on the
//! problem:
//!
//! * [`reference`]: near-exact saddle points computed by a conservative
//!   run of the deterministic solver, with a machine-checkable residual.
//! * [`rate`]: least-squares estimation of the geometric decay rate of a
//!   Lyapunov series, used to compare observed against certified rates.
//! * [`moreau`]: envelope-gradient stationarity measurements, the
//!   currency in which the stochastic solver's guarantees are stated.
//! * [`audit`]: finite-difference checks of the analytic oracles on both
//!   blocks.

pub mod audit;
pub mod moreau;
pub mod rate;
pub mod reference;

pub use audit::{finite_difference_audit, FdReport};
pub use moreau::{moreau_grad_norm, moreau_prox, MoreauProx, MOREAU_CERT_TOL, MOREAU_RESTARTS};
pub use rate::{fit_geometric_rate, RateFit, PHI_FLOOR};
pub use reference::{compute_reference, ReferenceSolution};

use ndarray::Array1;
use thiserror::Error;

use crate::problems::ProblemError;
use crate::simplex::{kl_divergence, SimplexError, SimplexWeights};

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("need at least {need} data points, got {have}")]
    NeedMoreData { have: usize, need: usize },
    #[error("lyapunov value at iteration {k} is not positive ({value}); cannot fit a log-linear rate")]
    NonPositivePhi { k: usize, value: f64 },
    #[error("reference solve stalled: one-step displacement {residual:e} above tolerance {tol:e}")]
    NoConvergence { residual: f64, tol: f64 },
    #[error("prox solve exhausted its budget at gradient norm {grad_norm:e} (target {target:e})")]
    BudgetExhausted { grad_norm: f64, target: f64 },
    #[error("linear convergence requires strictly positive regularization on both blocks, got tau = {tau}")]
    NotStronglyMonotone { tau: f64 },
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Simplex(#[from] SimplexError),
    #[error("solver failed inside a diagnostic: {0}")]
    Solver(String),
}

impl From<crate::optimizers::SolverError> for DiagnosticsError {
    fn from(e: crate::optimizers::SolverError) -> Self {
        DiagnosticsError::Solver(e.to_string())
    }
}

/// The Lyapunov function of the linear-rate certificate:
/// `||theta - theta*||^2 + KL[pi* || pi]`.
pub fn lyapunov_phi(
    theta: &Array1<f64>,
    pi: &SimplexWeights,
    reference: &ReferenceSolution,
) -> Result<f64, SimplexError> {
    let mut dist = 0.0;
    for (x, y) in theta.iter().zip(reference.theta_star.iter()) {
        dist += (x - y) * (x - y);
    }
    let kl = kl_divergence(reference.pi_star.weights(), pi.weights())?;
    Ok(dist + kl)
}
