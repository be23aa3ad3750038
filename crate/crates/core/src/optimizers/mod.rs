//! Saddle-point solvers.
//!
//! Two main algorithms operate on [`crate::problems::DroProblem`]:
//!
//! * [`omp`]: deterministic optimistic mirror-prox with exact prox steps
//!   in both blocks; linearly convergent under the stepsize rule
//!   `gamma <= 1 / (2 L_F)`, `alpha = 1 / (1 + gamma tau)`.
//! * [`also`]: the adaptive stochastic variant that replaces the `theta`
//!   prox with an Adam-style direction and feeds both blocks from
//!   mini-batch estimates.
//!
//! [`baselines`] holds the non-robust and non-optimistic loops used for
//! comparisons. All run loops share [`RecordSpec`] for checkpoint logging.

pub mod adam;
pub mod also;
pub mod baselines;
pub mod omp;

pub use adam::{AdamParams, AdamState, AdamVariant};
pub use also::{also_step, run_also, AlsoConfig, AlsoState, GradientOracle, PiUpdate};
pub use baselines::{run_baseline, BaselineVariant};
pub use omp::{omp_step, run_omp, OmpConfig, OmpState};

pub(crate) use also::oracle_estimate;

use std::time::Instant;

use ndarray::Array1;
use thiserror::Error;

use crate::diagnostics::{self, ReferenceSolution};
use crate::problems::{DroProblem, ProblemError};
use crate::sampling::SamplingError;
use crate::simplex::{SimplexError, SimplexWeights};
use crate::trajectory::{TrajectoryRecord, TrajectoryRow};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("non-finite {what} at iteration {iteration}")]
    NonFiniteOperator { what: &'static str, iteration: usize },
    #[error("invalid solver configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Simplex(#[from] SimplexError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error("diagnostic evaluation failed during the run: {0}")]
    Diagnostic(String),
}

/// Sparse Moreau-envelope instrumentation for a run.
#[derive(Debug, Clone, Copy)]
pub struct MoreauSpec {
    /// Evaluate at recorded iterations divisible by this.
    pub every: usize,
    /// Envelope parameter `L` (the envelope is `Phi_{1/(2L)}`).
    pub envelope_l: f64,
    /// Inner iteration budget per restart.
    pub budget: usize,
}

/// What the run loops log and how often.
#[derive(Debug, Clone, Copy, Default)]
pub struct RecordSpec<'a> {
    /// Record every this-many iterations (0 behaves like `iterations`,
    /// i.e. first and last only). The final iterate is always recorded.
    pub every: usize,
    /// Log the inner-max value `Phi(theta)` per checkpoint.
    pub with_phi: bool,
    /// Log weight snapshots per checkpoint.
    pub with_pi: bool,
    /// Reference solution for Lyapunov logging.
    pub reference: Option<&'a ReferenceSolution>,
    /// Moreau-envelope gradient estimates at sparse checkpoints.
    pub moreau: Option<MoreauSpec>,
}

impl<'a> RecordSpec<'a> {
    pub fn every(every: usize) -> Self {
        Self {
            every,
            ..Self::default()
        }
    }

    pub fn with_reference(mut self, reference: &'a ReferenceSolution) -> Self {
        self.reference = Some(reference);
        self
    }

    pub fn with_phi(mut self) -> Self {
        self.with_phi = true;
        self
    }

    pub fn with_pi(mut self) -> Self {
        self.with_pi = true;
        self
    }

    pub fn with_moreau(mut self, moreau: MoreauSpec) -> Self {
        self.moreau = Some(moreau);
        self
    }

    fn due(&self, k: usize, last: usize) -> bool {
        if k == 0 || k == last {
            return true;
        }
        self.every > 0 && k.is_multiple_of(self.every)
    }
}

/// Evaluates one checkpoint row. Shared by every run loop so that all
/// solvers log identical quantities.
fn record_row(
    problem: &DroProblem,
    theta: &Array1<f64>,
    pi: &SimplexWeights,
    k: usize,
    spec: &RecordSpec,
    started: Instant,
    out: &mut TrajectoryRecord,
) -> Result<(), SolverError> {
    let h = problem.objective_h(theta, pi)?;
    if !h.is_finite() {
        return Err(SolverError::NonFiniteOperator {
            what: "objective",
            iteration: k,
        });
    }
    let mut grad = problem.grad_theta_full(theta, pi)?;
    grad.scaled_add(problem.tau_theta(), theta);
    let grad_norm = grad.dot(&grad).sqrt();
    let phi_obj = if spec.with_phi && problem.tau_pi() > 0.0 {
        Some(problem.inner_max_closed_form(theta)?.1)
    } else {
        None
    };
    let phi_k = match spec.reference {
        Some(r) => Some(diagnostics::lyapunov_phi(theta, pi, r)?),
        None => None,
    };
    let moreau_grad = match spec.moreau {
        Some(m) if m.every > 0 && k.is_multiple_of(m.every) => Some(
            diagnostics::moreau_grad_norm(problem, theta, m.envelope_l, m.budget)
                .map_err(|e| SolverError::Diagnostic(e.to_string()))?,
        ),
        _ => None,
    };
    out.push(TrajectoryRow {
        k,
        h,
        phi_obj,
        phi_k,
        moreau_grad,
        pi: spec.with_pi.then(|| pi.weights().to_vec()),
        grad_norm,
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
    });
    Ok(())
}

fn ensure_finite(values: &[f64], what: &'static str, iteration: usize) -> Result<(), SolverError> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(SolverError::NonFiniteOperator { what, iteration });
    }
    Ok(())
}
