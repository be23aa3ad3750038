//! Class-imbalance sweep: the uc grid crossed with solver methods and
//! seeds, aggregated to one CSV row per `(uc, method)` pair.
//!
//! Jobs fan out across worker threads; `DROKIT_THREADS` caps the count.
//! Results are keyed by job index before aggregation, so the output is
//! identical whatever the thread count or completion order. The CSV has
//! no wall-time column and reruns are byte-identical.

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;

use drokit_core::optimizers::{run_also, run_baseline, BaselineVariant, RecordSpec};
use drokit_core::problems::{make_imbalanced_logistic, minority_f1};
use drokit_core::rng::{stream, StreamId};
use drokit_core::trajectory::RunMeta;

use crate::config::{MethodKind, OracleKind};
use crate::csvio::format_float;
use crate::experiment::{also_config, CliError};

/// The imbalance grid swept by the bundled preset.
pub const SWEEP_UC_GRID: [usize; 8] = [1, 2, 5, 10, 20, 30, 40, 50];

/// What to sweep. The defaults are the bundled `imbalance-sweep` preset.
#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub uc_grid: Vec<usize>,
    pub methods: Vec<MethodKind>,
    pub seeds: Vec<u64>,
    pub dim: usize,
    pub n_per_class: usize,
    pub iterations: usize,
    pub gamma_theta: f64,
    pub gamma_pi: f64,
    /// Gradient oracle for every run in the grid. The default is the
    /// exact oracle: at desk scale a full pass is cheap and keeps the
    /// uc trend free of sampling noise.
    pub oracle: OracleKind,
    /// Mini-batch size, used only when `oracle` is the sampled one.
    pub batch: usize,
}

impl Default for SweepPlan {
    fn default() -> Self {
        Self {
            uc_grid: SWEEP_UC_GRID.to_vec(),
            methods: vec![MethodKind::Also, MethodKind::AdamUniform],
            seeds: (0..5).collect(),
            dim: 5,
            // 120 majority samples keep every uc cell distinct: the
            // rounded minority counts over the grid are 120, 60, 24,
            // 12, 6, 4, 3, 2.
            n_per_class: 120,
            iterations: 1500,
            gamma_theta: 0.1,
            gamma_pi: 0.5,
            oracle: OracleKind::Exact,
            batch: 8,
        }
    }
}

/// One aggregated output row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub uc: usize,
    pub method: &'static str,
    pub seeds: usize,
    pub f1_mean: f64,
    pub f1_worst: f64,
    /// Mean final weight mass on the minority groups.
    pub minority_weight_mean: f64,
    /// Prior mass of the minority groups (identical across seeds).
    pub minority_prior_mass: f64,
    pub h_mean: f64,
}

struct JobOut {
    f1: f64,
    minority_weight: f64,
    prior_mass: f64,
    h_final: f64,
}

fn run_job(
    plan: &SweepPlan,
    master_seed: u64,
    uc: usize,
    method: MethodKind,
    seed: u64,
) -> Result<JobOut, CliError> {
    let effective = master_seed.wrapping_add(seed);
    let inst = make_imbalanced_logistic(effective, plan.dim, plan.n_per_class, uc);
    let problem = &inst.problem;

    let solver = crate::config::SolverConfig {
        method,
        iterations: plan.iterations,
        gamma_theta: plan.gamma_theta,
        gamma_pi: plan.gamma_pi,
        oracle: plan.oracle,
        batch: plan.batch,
        ..Default::default()
    };
    let config = also_config(&solver);

    let theta0 = problem.initial_theta(&mut stream(effective, StreamId::Init));
    let mut rng = stream(effective, StreamId::Sampler);
    let spec = RecordSpec::every(0);
    let meta = RunMeta::new(format!("sweep:uc{uc}:{}", method.label()), effective);

    let minority_mass = |weights: &[f64]| -> f64 {
        inst.minority_groups.iter().map(|&i| weights[i]).sum()
    };

    match method {
        MethodKind::Also => {
            let (record, state) = run_also(problem, &config, &theta0, &mut rng, &spec, meta)?;
            Ok(JobOut {
                f1: minority_f1(&state.theta, &inst.test),
                minority_weight: minority_mass(state.pi.weights()),
                prior_mass: inst.minority_prior_mass,
                h_final: record.last().expect("rows").h,
            })
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
            let (record, theta) =
                run_baseline(problem, variant, &config, &theta0, &mut rng, &spec, meta)?;
            // Frozen-weight baselines keep the uniform mass; report it so
            // the weight columns stay comparable across methods.
            let uniform = vec![1.0 / problem.c() as f64; problem.c()];
            Ok(JobOut {
                f1: minority_f1(&theta, &inst.test),
                minority_weight: minority_mass(&uniform),
                prior_mass: inst.minority_prior_mass,
                h_final: record.last().expect("rows").h,
            })
        }
        MethodKind::Omp => Err(CliError::Environment(
            "the sweep compares the adaptive solver against frozen-weight baselines; method = omp is not part of the grid".to_string(),
        )),
    }
}

/// Resolves the worker count: `available_parallelism`, capped by the
/// `DROKIT_THREADS` environment variable when set, never above `jobs`.
pub fn thread_cap(jobs: usize) -> Result<usize, CliError> {
    let available = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    let cap = match std::env::var("DROKIT_THREADS") {
        Ok(text) => text
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| {
                CliError::Environment(format!(
                    "DROKIT_THREADS must be a positive integer, got `{text}`"
                ))
            })?,
        Err(std::env::VarError::NotPresent) => available,
        Err(e) => {
            return Err(CliError::Environment(format!(
                "DROKIT_THREADS is not readable: {e}"
            )))
        }
    };
    Ok(cap.clamp(1, jobs.max(1)))
}

/// Runs the whole grid on `threads` workers and aggregates per
/// `(uc, method)` in plan order.
pub fn run_plan(
    plan: &SweepPlan,
    master_seed: u64,
    threads: usize,
) -> Result<Vec<SweepRow>, CliError> {
    let mut jobs: Vec<(usize, MethodKind, u64)> = Vec::new();
    for &uc in &plan.uc_grid {
        for &method in &plan.methods {
            for &seed in &plan.seeds {
                jobs.push((uc, method, seed));
            }
        }
    }
    let threads = threads.clamp(1, jobs.len().max(1));

    let cursor = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<(usize, Result<JobOut, CliError>)>();
    std::thread::scope(|scope| {
        for _ in 0..threads {
            let tx = tx.clone();
            let cursor = &cursor;
            let jobs = &jobs;
            scope.spawn(move || loop {
                let idx = cursor.fetch_add(1, Ordering::Relaxed);
                if idx >= jobs.len() {
                    break;
                }
                let (uc, method, seed) = jobs[idx];
                let out = run_job(plan, master_seed, uc, method, seed);
                if tx.send((idx, out)).is_err() {
                    break;
                }
            });
        }
    });
    drop(tx);

    let mut slots: Vec<Option<JobOut>> = (0..jobs.len()).map(|_| None).collect();
    for (idx, out) in rx {
        slots[idx] = Some(out?);
    }

    let mut rows = Vec::new();
    let per_cell = plan.seeds.len().max(1) as f64;
    let mut it = slots.into_iter();
    for &uc in &plan.uc_grid {
        for &method in &plan.methods {
            let outs: Vec<JobOut> = (0..plan.seeds.len())
                .map(|_| it.next().flatten().expect("every job reports"))
                .collect();
            let f1_mean = outs.iter().map(|o| o.f1).sum::<f64>() / per_cell;
            let f1_worst = outs.iter().map(|o| o.f1).fold(f64::INFINITY, f64::min);
            let weight_mean =
                outs.iter().map(|o| o.minority_weight).sum::<f64>() / per_cell;
            let h_mean = outs.iter().map(|o| o.h_final).sum::<f64>() / per_cell;
            rows.push(SweepRow {
                uc,
                method: method.label(),
                seeds: plan.seeds.len(),
                f1_mean,
                f1_worst,
                minority_weight_mean: weight_mean,
                minority_prior_mass: outs[0].prior_mass,
                h_mean,
            });
        }
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "uc,method,seeds,f1_mean,f1_worst,minority_weight_mean,minority_prior_mass,h_mean\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.uc,
            r.method,
            r.seeds,
            format_float(r.f1_mean),
            format_float(r.f1_worst),
            format_float(r.minority_weight_mean),
            format_float(r.minority_prior_mass),
            format_float(r.h_mean),
        ));
    }
    out
}

/// The full sweep entry point used by the CLI: resolve the thread cap,
/// run the grid, write the CSV.
pub fn run_sweep(plan: &SweepPlan, master_seed: u64, out: &Path) -> Result<Vec<SweepRow>, CliError> {
    let jobs = plan.uc_grid.len() * plan.methods.len() * plan.seeds.len();
    let threads = thread_cap(jobs)?;
    let rows = run_plan(plan, master_seed, threads)?;
    std::fs::write(out, sweep_csv(&rows))?;
    Ok(rows)
}
