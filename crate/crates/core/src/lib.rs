//! Solvers and diagnostics for KL-regularized distributionally robust
//! optimization over grouped losses.
//!
//! The central object is the saddle-point problem
//!
//! ```text
//! min_theta max_{pi in simplex}  sum_i pi_i g_i(theta)
//!                                + (tau_theta/2) ||theta||^2
//!                                - tau_pi KL[pi || prior]
//! ```
//!
//! where `g_i` is the scaled loss of group `i`. The crate provides:
//!
//! * [`simplex`]: entropic geometry primitives (KL divergence, softmax,
//!   closed-form prox steps on the probability simplex).
//! * [`problems`]: grouped loss families (quadratic, logistic, tiny MLP),
//!   objective and gradient oracles, instance generators, snapshot I/O.
//! * [`sampling`]: unbiased stochastic gradient estimators for the grouped
//!   objective, with exhaustive-enumeration modes for verification.
//! * [`optimizers`]: a deterministic optimistic mirror-prox solver, an
//!   adaptive stochastic solver built on Adam-style directions, and
//!   non-robust baselines.
//! * [`diagnostics`]: reference-solution computation, Lyapunov tracking,
//!   geometric-rate fitting, Moreau-envelope stationarity estimates, and
//!   finite-difference gradient audits.

pub mod diagnostics;
pub mod optimizers;
pub mod problems;
pub mod rng;
pub mod sampling;
pub mod simplex;
pub mod trajectory;

pub use diagnostics::{lyapunov_phi, ReferenceSolution};
pub use problems::{DroProblem, LossFamily};
pub use sampling::{SamplingStrategy, StochasticEstimate};
pub use simplex::SimplexWeights;
pub use trajectory::{TrajectoryRecord, TrajectoryRow};
