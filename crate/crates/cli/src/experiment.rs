//! Builds a problem instance from a config, runs the selected solver and
//! writes the trajectory CSV.
//!
//! Seed discipline: the `[problem] seed` key feeds the data-generation
//! stream only; the experiment master seed (config `[experiment] seed`,
//! overridable with `--seed`) expands into the named init and sampler
//! streams. Adding or removing diagnostics therefore never perturbs the
//! solver's randomness.

use std::io;
use std::path::{Path, PathBuf};

use ndarray::Array1;
use thiserror::Error;

use drokit_core::diagnostics::{compute_reference, fit_geometric_rate, DiagnosticsError};
use drokit_core::optimizers::{
    run_also, run_baseline, run_omp, AdamParams, AlsoConfig, BaselineVariant, GradientOracle,
    MoreauSpec, OmpConfig, PiUpdate, RecordSpec, SolverError,
};
use drokit_core::problems::{
    make_imbalanced_logistic, make_quadratic_problem, make_tiny_mlp, MlpDataSpec, ProblemError,
};
use drokit_core::rng::{stream, StreamId};
use drokit_core::trajectory::RunMeta;
use drokit_core::{DroProblem, ReferenceSolution, SamplingStrategy, TrajectoryRecord};

use crate::config::{
    AdamKind, ConfigError, ExperimentConfig, FamilyKind, MethodKind, OracleKind, PiUpdateKind,
    ProblemConfig, SolverConfig, StrategyKind,
};
use crate::csvio;

/// Tolerated excess over the certified contraction factor when the
/// strict rate certification runs on a theorem-mode trajectory.
pub const RATE_MARGIN: f64 = 0.05;
/// Minimum goodness of fit for the strict rate certification.
pub const RATE_MIN_R_SQUARED: f64 = 0.95;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("solver failure: {0}")]
    Solver(#[from] SolverError),
    #[error("diagnostics failure: {0}")]
    Diagnostics(#[from] DiagnosticsError),
    #[error("problem construction failure: {0}")]
    Problem(#[from] ProblemError),
    #[error("io failure: {0}")]
    Io(#[from] io::Error),
    #[error("certification failed: {0}")]
    Certification(String),
    #[error("{0}")]
    Environment(String),
    #[error("unknown preset `{0}`; `drokit list-presets` shows the bundled ones")]
    UnknownPreset(String),
}

/// Extra context carried by the imbalanced-logistic family so callers
/// can evaluate held-out metrics after a run.
pub struct ImbalanceContext {
    pub test: Vec<(Array1<f64>, f64)>,
    pub minority_groups: Vec<usize>,
    pub minority_prior_mass: f64,
}

pub struct BuiltProblem {
    pub problem: DroProblem,
    pub imbalance: Option<ImbalanceContext>,
}

/// Instantiates the configured problem family and applies any
/// regularization overrides.
pub fn build_problem(cfg: &ProblemConfig) -> BuiltProblem {
    let (problem, imbalance) = match cfg.family {
        FamilyKind::Quadratic => (
            make_quadratic_problem(cfg.seed, cfg.dim, cfg.groups, cfg.items_per_group),
            None,
        ),
        FamilyKind::Logistic => {
            let inst = make_imbalanced_logistic(cfg.seed, cfg.dim, cfg.n_per_class, cfg.uc);
            (
                inst.problem,
                Some(ImbalanceContext {
                    test: inst.test,
                    minority_groups: inst.minority_groups,
                    minority_prior_mass: inst.minority_prior_mass,
                }),
            )
        }
        FamilyKind::Mlp => (
            make_tiny_mlp(
                cfg.seed,
                cfg.dim,
                cfg.hidden,
                MlpDataSpec {
                    n_per_class: cfg.n_per_class,
                    separation: cfg.separation,
                },
            ),
            None,
        ),
    };
    let problem = match (cfg.tau_theta, cfg.tau_pi) {
        (None, None) => problem,
        (tt, tp) => {
            let tau_theta = tt.unwrap_or(problem.tau_theta());
            let tau_pi = tp.unwrap_or(problem.tau_pi());
            problem.with_taus(tau_theta, tau_pi)
        }
    };
    BuiltProblem { problem, imbalance }
}

fn adam_params(kind: AdamKind) -> AdamParams {
    match kind {
        AdamKind::Coordinate => AdamParams::default(),
        AdamKind::ScalarNorm => AdamParams::scalar_norm(),
    }
}

fn sampling_strategy(kind: StrategyKind) -> SamplingStrategy {
    match kind {
        StrategyKind::UniformAll => SamplingStrategy::UniformAll,
        StrategyKind::TwoStage => SamplingStrategy::TwoStage,
        StrategyKind::ProbabilityWeighted => SamplingStrategy::ProbabilityWeighted,
    }
}

fn gradient_oracle(s: &SolverConfig) -> GradientOracle {
    match s.oracle {
        OracleKind::Exact => GradientOracle::Exact,
        OracleKind::Sampled => GradientOracle::Sampled {
            strategy: sampling_strategy(s.strategy),
            batch: s.batch,
        },
    }
}

/// The adaptive-solver configuration shared by the adaptive method and
/// every baseline (they deliberately reuse the same plumbing).
pub fn also_config(s: &SolverConfig) -> AlsoConfig {
    let mut config = AlsoConfig::new(s.gamma_theta, s.gamma_pi, s.iterations);
    config.alpha = s.resolved_alpha();
    config.adam = adam_params(s.adam);
    config.oracle = gradient_oracle(s);
    config.pi_update = match s.pi_update {
        PiUpdateKind::Entropic => PiUpdate::EntropicMirror,
        PiUpdateKind::Constrained => PiUpdate::ConstrainedProx,
    };
    config.stop_grad_norm = s.stop_grad_norm;
    config
}

/// The mirror-prox configuration for a given instance.
pub fn omp_config(s: &SolverConfig, problem: &DroProblem) -> OmpConfig {
    let mut config = if s.theorem_mode {
        OmpConfig::theorem_mode(problem, s.iterations)
    } else {
        let tau = problem.tau_theta().min(problem.tau_pi());
        let mut c = OmpConfig::new(s.gamma_theta, tau, s.iterations);
        c.gamma_pi = s.gamma_pi;
        if let Some(a) = s.alpha {
            c.alpha = a;
        }
        c
    };
    config.stop_displacement = s.stop_displacement;
    config
}

/// Summary of one completed run.
pub struct RunReport {
    pub label: String,
    pub out_path: PathBuf,
    pub rows: usize,
    pub iterations_recorded: usize,
    pub final_h: f64,
    pub final_grad_norm: f64,
    /// `(fitted rate, r_squared, certified rate)` for theorem-mode
    /// mirror-prox runs with a reference attached.
    pub rate_fit: Option<(f64, f64, f64)>,
    pub warnings: Vec<String>,
}

fn resolve_out_path(
    cfg: &ExperimentConfig,
    out_override: Option<&Path>,
) -> PathBuf {
    if let Some(p) = out_override {
        return p.to_path_buf();
    }
    if !cfg.output_path.is_empty() {
        return PathBuf::from(&cfg.output_path);
    }
    if cfg.name.is_empty() {
        return PathBuf::from("run.csv");
    }
    PathBuf::from(format!("{}.csv", cfg.name))
}

/// Runs one experiment end to end: build the instance, optionally solve
/// for the reference saddle point, run the configured method, write the
/// CSV. With `strict`, certification warnings become a hard error after
/// the CSV is written, so the trajectory is still available for autopsy.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    seed_override: Option<u64>,
    out_override: Option<&Path>,
    strict: bool,
) -> Result<RunReport, CliError> {
    let master = seed_override.unwrap_or(cfg.master_seed);
    let built = build_problem(&cfg.problem);
    let problem = &built.problem;
    let diag = &cfg.diagnostics;

    let reference: Option<ReferenceSolution> = if diag.reference {
        Some(compute_reference(problem, diag.reference_tol)?)
    } else {
        None
    };

    let mut spec = RecordSpec::every(diag.record_every);
    if diag.with_pi {
        spec = spec.with_pi();
    }
    if let Some(r) = reference.as_ref() {
        spec = spec.with_reference(r);
    }
    if diag.moreau_every > 0 {
        let envelope_l = if diag.moreau_l > 0.0 {
            diag.moreau_l
        } else {
            problem.envelope_l()
        };
        spec = spec.with_moreau(MoreauSpec {
            every: diag.moreau_every,
            envelope_l,
            budget: diag.moreau_budget,
        });
    }

    let method = cfg.solver.method;
    let label = if cfg.name.is_empty() {
        method.label().to_string()
    } else {
        format!("{}:{}", cfg.name, method.label())
    };
    let meta = RunMeta::new(label.clone(), master);
    let theta0 = problem.initial_theta(&mut stream(master, StreamId::Init));

    let (record, rate_fit, warnings): (TrajectoryRecord, _, Vec<String>) = match method {
        MethodKind::Omp => {
            let config = omp_config(&cfg.solver, problem);
            let (record, _state) = run_omp(problem, &config, &theta0, &spec, meta)?;
            let mut warnings = Vec::new();
            let rate_fit = if cfg.solver.theorem_mode && reference.is_some() {
                let certified = config.certified_rate();
                match fit_geometric_rate(&record.phi_series()) {
                    Ok(fit) => {
                        if fit.rate > certified + RATE_MARGIN {
                            warnings.push(format!(
                                "fitted contraction {:.6} exceeds certified rate {:.6} by more than the {RATE_MARGIN} margin",
                                fit.rate, certified
                            ));
                        }
                        if fit.r_squared < RATE_MIN_R_SQUARED {
                            warnings.push(format!(
                                "rate fit r^2 {:.4} below {RATE_MIN_R_SQUARED}",
                                fit.r_squared
                            ));
                        }
                        Some((fit.rate, fit.r_squared, certified))
                    }
                    Err(e) => {
                        warnings.push(format!("rate fit unavailable: {e}"));
                        None
                    }
                }
            } else {
                None
            };
            (record, rate_fit, warnings)
        }
        MethodKind::Also => {
            let config = also_config(&cfg.solver);
            let mut rng = stream(master, StreamId::Sampler);
            let (record, _state) = run_also(problem, &config, &theta0, &mut rng, &spec, meta)?;
            (record, None, Vec::new())
        }
        MethodKind::AdamUniform
        | MethodKind::AdamwUniform
        | MethodKind::StaticWeights
        | MethodKind::Sgda => {
            let variant = match method {
                MethodKind::AdamUniform => BaselineVariant::AdamUniform,
                MethodKind::AdamwUniform => BaselineVariant::AdamwUniform,
                MethodKind::StaticWeights => BaselineVariant::StaticWeights,
                _ => BaselineVariant::Sgda,
            };
            let config = also_config(&cfg.solver);
            let mut rng = stream(master, StreamId::Sampler);
            let (record, _theta) =
                run_baseline(problem, variant, &config, &theta0, &mut rng, &spec, meta)?;
            (record, None, Vec::new())
        }
    };

    let out_path = resolve_out_path(cfg, out_override);
    let pi_columns = diag.with_pi.then(|| problem.c());
    csvio::write_trajectory_csv(&record, pi_columns, &out_path)?;

    let last = record
        .last()
        .expect("every run records at least the initial iterate");
    let report = RunReport {
        label,
        out_path,
        rows: record.rows.len(),
        iterations_recorded: last.k,
        final_h: last.h,
        final_grad_norm: last.grad_norm,
        rate_fit,
        warnings,
    };
    if strict && !report.warnings.is_empty() {
        return Err(CliError::Certification(report.warnings.join("; ")));
    }
    Ok(report)
}
