//! `drokit`: run, sweep and verify KL-regularized robust min-max solvers.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use drokit_cli::experiment::CliError;
use drokit_cli::{acceptance, config, presets, run_experiment, sweep, ExperimentConfig};

const CONFIG_REFERENCE: &str = "\
CONFIG FILE FORMAT

`key = value` lines under bracketed section headers; `#` starts a comment;
blank lines are ignored. A dotted key (`solver.alpha = 0`) names its section
explicitly and may appear anywhere. Unknown sections or keys, duplicate
assignments, malformed values, and keys that do not apply to the selected
family or method are hard errors carrying the offending line number. An
empty file runs the documented defaults.

[experiment]
  name                    run label; also derives `<name>.csv` (default: run)
  seed = 0                master seed for the init and sampler streams

[problem]
  family = quadratic      quadratic | logistic | mlp
  seed = 7                data-generation seed (independent of the master seed)
  dim = 6                 parameter dimension (input width for mlp)
  groups = 4              (quadratic) number of groups
  items_per_group = 3     (quadratic) items per group
  n_per_class = 20        (logistic, mlp) majority-class size
  uc = 1                  (logistic) imbalance factor; minority size is
                          n_per_class/uc rounded, at least 1
  hidden = 3              (mlp) hidden width
  separation = 2          (mlp) class-center separation
  tau_theta               optional override of the Tikhonov strength
  tau_pi                  optional override of the KL strength

[solver]
  method = also           omp | also | adam-uniform | adamw-uniform |
                          static-weights | sgda
  iterations = 1000
  gamma_theta = 0.05      parameter stepsize
  gamma_pi = 0.1          weight stepsize (frozen-weight baselines reject it)
  alpha                   optimism coefficient; defaults to 1 for also and to
                          the rate-optimal value for omp; 0 disables the
                          lookback (plain descent-ascent)
  theorem_mode = false    (omp) derive the stepsize and optimism from the
                          instance constants; explicit gamma/alpha keys are
                          rejected in this mode
  pi_update = entropic    (also) entropic | constrained
  adam = coordinate       coordinate | scalar-norm direction scaling
  oracle = exact          exact | sampled (omp always evaluates exactly)
  strategy = two-stage    (oracle = sampled) uniform-all | two-stage |
                          probability-weighted
  batch = 1               (oracle = sampled) draws per step
  stop_grad_norm          (also) early stop on the step residual
  stop_displacement       (omp) early stop on the iterate displacement

[diagnostics]
  reference = false       solve for the saddle point first and log the
                          Lyapunov gap phi_k
  reference_tol = 1e-12   displacement tolerance of the reference solve
  record_every = 10       checkpoint cadence (0 records first and last only)
  with_pi = false         append the weight vector to each CSV row
  moreau_every = 0        envelope-gradient cadence (0 disables it)
  moreau_l = 0            envelope parameter (0 uses the instance bound)
  moreau_budget = 400     inner iterations per envelope solve

[output]
  path                    output CSV path (default: <name>.csv)

CSV columns: k,h,phi_k,moreau_grad[,pi_0..pi_{c-1}],grad_norm,wall_ms.
Floats carry 17 significant digits; reruns with the same config and seed are
byte-identical apart from wall_ms.

DROKIT_THREADS caps the sweep's worker threads.
";

#[derive(Parser)]
#[command(
    name = "drokit",
    version,
    about = "Robust min-max solvers with KL-regularized group weights",
    after_long_help = CONFIG_REFERENCE
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a config file or a bundled preset.
    Run {
        /// Config file path (`--help` documents the format).
        #[arg(long, value_name = "FILE", conflicts_with = "preset")]
        config: Option<PathBuf>,
        /// Bundled preset name (see `list-presets`).
        #[arg(long, value_name = "NAME")]
        preset: Option<String>,
        /// Master seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Output CSV path override.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        /// Exit with status 1 if the run misses its certification.
        #[arg(long)]
        strict: bool,
    },
    /// Sweep imbalance factors: adaptive reweighting vs uniform Adam.
    Sweep {
        /// Output CSV path.
        #[arg(long, value_name = "FILE", default_value = "sweep.csv")]
        out: PathBuf,
        /// Master seed offsetting every job seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the acceptance criteria, one pass/fail line each.
    Verify {
        /// Substring filter on criterion names (e.g. `prox`).
        filter: Option<String>,
    },
    /// List the bundled presets.
    ListPresets,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Run {
            config,
            preset,
            seed,
            out,
            strict,
        } => cmd_run(config, preset, seed, out, strict),
        Command::Sweep { out, seed } => cmd_sweep(&out, seed),
        Command::Verify { filter } => Ok(cmd_verify(filter.as_deref())?),
        Command::ListPresets => {
            for p in presets::all() {
                println!("{:<18} {}", p.name, p.summary);
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn load_config(
    config: Option<PathBuf>,
    preset: Option<String>,
) -> Result<ExperimentConfig, String> {
    match (config, preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| format!("reading {}: {e}", path.display()))?;
            config::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
        }
        (None, Some(name)) => presets::find(&name)
            .ok_or_else(|| format!("unknown preset `{name}`; try `drokit list-presets`")),
        (None, None) => Ok(ExperimentConfig::named("run")),
    }
}

fn cmd_run(
    config: Option<PathBuf>,
    preset: Option<String>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    strict: bool,
) -> Result<ExitCode, String> {
    let cfg = load_config(config, preset)?;
    match run_experiment(&cfg, seed, out.as_deref(), strict) {
        Ok(report) => {
            println!(
                "{}: {} rows -> {} (last k = {})",
                report.label,
                report.rows,
                report.out_path.display(),
                report.iterations_recorded
            );
            println!(
                "final h = {:.6e}, final grad norm = {:.6e}",
                report.final_h, report.final_grad_norm
            );
            if let Some((rate, r2, certified)) = report.rate_fit {
                println!(
                    "rate fit: rho_hat = {rate:.6} (r^2 = {r2:.4}), certified rate {certified:.6}"
                );
            }
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Err(CliError::Certification(msg)) => {
            eprintln!("certification failed: {msg}");
            Ok(ExitCode::from(1))
        }
        Err(e) => Err(e.to_string()),
    }
}

fn cmd_sweep(out: &Path, seed: u64) -> Result<ExitCode, String> {
    let plan = sweep::SweepPlan::default();
    let rows = sweep::run_sweep(&plan, seed, out).map_err(|e| e.to_string())?;
    for row in &rows {
        println!(
            "uc = {:>2} {:<14} f1 mean {:.4} worst {:.4} minority mass {:.4} (prior {:.4})",
            row.uc,
            row.method,
            row.f1_mean,
            row.f1_worst,
            row.minority_weight_mean,
            row.minority_prior_mass
        );
    }
    println!("wrote {} ({} rows)", out.display(), rows.len());
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(filter: Option<&str>) -> Result<ExitCode, String> {
    let names = acceptance::selected(filter);
    if names.is_empty() {
        return Err(format!(
            "no criterion name contains `{}`",
            filter.unwrap_or_default()
        ));
    }
    let mut passed = 0usize;
    for name in names.iter().copied() {
        let report = acceptance::run(Some(name))
            .pop()
            .expect("an exact criterion name selects that criterion");
        println!("{}", report.line());
        std::io::stdout().flush().ok();
        if report.passed {
            passed += 1;
        }
    }
    println!("{passed}/{} criteria passed", names.len());
    Ok(if passed == names.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
