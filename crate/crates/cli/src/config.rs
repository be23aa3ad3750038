//! Plain-text experiment configuration.
//!
//! The format is deliberately small: `key = value` pairs grouped under
//! bracketed section headers, `#` starts a comment (full-line or
//! trailing), blank lines are ignored. A key may also be written in
//! dotted form (`solver.alpha = 0`) anywhere in the file, in which case
//! the prefix names the section explicitly. The five sections are
//! `[experiment]`, `[problem]`, `[solver]`, `[diagnostics]` and
//! `[output]`.
//!
//! Parsing is strict: unknown sections, unknown keys, duplicate
//! assignments, malformed values and keys that do not apply to the
//! selected problem family or solver method are all hard errors carrying
//! the offending line number. An empty file yields the documented
//! defaults: a random quadratic instance solved by the adaptive
//! optimistic method with the entropic weight update and optimism
//! coefficient 1.
//!
//! [`ExperimentConfig::to_text`] emits a canonical rendering of every
//! applicable key; `parse(to_text(c)) == c` holds for any valid config.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown section `[{section}]`")]
    UnknownSection { line: usize, section: String },
    #[error("line {line}: unknown key `{key}` in section `[{section}]`")]
    UnknownKey {
        line: usize,
        section: String,
        key: String,
    },
    #[error("line {line}: duplicate assignment of `{section}.{key}`")]
    Duplicate {
        line: usize,
        section: String,
        key: String,
    },
    #[error("line {line}: key `{key}` expects {expected}, got `{value}`")]
    TypeMismatch {
        line: usize,
        key: String,
        expected: &'static str,
        value: String,
    },
    #[error("line {line}: key `{key}` does not apply here: {reason}")]
    Inapplicable {
        line: usize,
        key: String,
        reason: String,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Problem family selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    Quadratic,
    Logistic,
    Mlp,
}

impl FamilyKind {
    pub fn config_name(&self) -> &'static str {
        match self {
            FamilyKind::Quadratic => "quadratic",
            FamilyKind::Logistic => "logistic",
            FamilyKind::Mlp => "mlp",
        }
    }
}

/// Solver method selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodKind {
    Omp,
    Also,
    AdamUniform,
    AdamwUniform,
    StaticWeights,
    Sgda,
}

impl MethodKind {
    pub fn config_name(&self) -> &'static str {
        match self {
            MethodKind::Omp => "omp",
            MethodKind::Also => "also",
            MethodKind::AdamUniform => "adam-uniform",
            MethodKind::AdamwUniform => "adamw-uniform",
            MethodKind::StaticWeights => "static-weights",
            MethodKind::Sgda => "sgda",
        }
    }

    /// Label used in run metadata and CSV file naming.
    pub fn label(&self) -> &'static str {
        match self {
            MethodKind::Omp => "omp",
            MethodKind::Also => "also",
            MethodKind::AdamUniform => "adam_uniform",
            MethodKind::AdamwUniform => "adamw_uniform",
            MethodKind::StaticWeights => "static_weights",
            MethodKind::Sgda => "sgda",
        }
    }

    fn is_frozen_weight_baseline(&self) -> bool {
        matches!(
            self,
            MethodKind::AdamUniform | MethodKind::AdamwUniform | MethodKind::StaticWeights
        )
    }

    fn uses_adam(&self) -> bool {
        matches!(
            self,
            MethodKind::Also
                | MethodKind::AdamUniform
                | MethodKind::AdamwUniform
                | MethodKind::StaticWeights
        )
    }

    fn uses_oracle(&self) -> bool {
        !matches!(self, MethodKind::Omp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PiUpdateKind {
    Entropic,
    Constrained,
}

impl PiUpdateKind {
    pub fn config_name(&self) -> &'static str {
        match self {
            PiUpdateKind::Entropic => "entropic",
            PiUpdateKind::Constrained => "constrained",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdamKind {
    Coordinate,
    ScalarNorm,
}

impl AdamKind {
    pub fn config_name(&self) -> &'static str {
        match self {
            AdamKind::Coordinate => "coordinate",
            AdamKind::ScalarNorm => "scalar-norm",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleKind {
    Exact,
    Sampled,
}

impl OracleKind {
    pub fn config_name(&self) -> &'static str {
        match self {
            OracleKind::Exact => "exact",
            OracleKind::Sampled => "sampled",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyKind {
    UniformAll,
    TwoStage,
    ProbabilityWeighted,
}

impl StrategyKind {
    pub fn config_name(&self) -> &'static str {
        match self {
            StrategyKind::UniformAll => "uniform-all",
            StrategyKind::TwoStage => "two-stage",
            StrategyKind::ProbabilityWeighted => "probability-weighted",
        }
    }
}

/// `[problem]` section: instance family, generator seed and shape.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    pub family: FamilyKind,
    /// Data-generation seed (independent of the experiment master seed).
    pub seed: u64,
    /// Parameter dimension; for the network family this is the input width.
    pub dim: usize,
    /// Number of groups (quadratic family only).
    pub groups: usize,
    /// Items per group (quadratic family only).
    pub items_per_group: usize,
    /// Majority-class size (logistic and network families).
    pub n_per_class: usize,
    /// Class-imbalance factor (logistic family only).
    pub uc: usize,
    /// Hidden width (network family only).
    pub hidden: usize,
    /// Blob-center separation (network family only).
    pub separation: f64,
    /// Optional override of the Tikhonov strength.
    pub tau_theta: Option<f64>,
    /// Optional override of the KL strength.
    pub tau_pi: Option<f64>,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            family: FamilyKind::Quadratic,
            seed: 7,
            dim: 6,
            groups: 4,
            items_per_group: 3,
            n_per_class: 20,
            uc: 1,
            hidden: 3,
            separation: 2.0,
            tau_theta: None,
            tau_pi: None,
        }
    }
}

/// `[solver]` section: method selection and stepsizes.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub method: MethodKind,
    pub iterations: usize,
    pub gamma_theta: f64,
    pub gamma_pi: f64,
    /// Optimism coefficient. `None` resolves to 1 for the adaptive method
    /// and to the rate-optimal `1/(1 + gamma tau)` for the mirror-prox
    /// method; `0` disables the lookback and gives plain descent-ascent.
    pub alpha: Option<f64>,
    /// Mirror-prox only: derive `gamma = 1/(2 L_F)` and the matching
    /// optimism from the instance, ignoring nothing (explicit stepsize
    /// keys are rejected in this mode rather than silently overwritten).
    pub theorem_mode: bool,
    pub pi_update: PiUpdateKind,
    pub adam: AdamKind,
    pub oracle: OracleKind,
    pub strategy: StrategyKind,
    pub batch: usize,
    pub stop_grad_norm: Option<f64>,
    pub stop_displacement: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: MethodKind::Also,
            iterations: 1000,
            gamma_theta: 0.05,
            gamma_pi: 0.1,
            alpha: None,
            theorem_mode: false,
            pi_update: PiUpdateKind::Entropic,
            adam: AdamKind::Coordinate,
            oracle: OracleKind::Exact,
            strategy: StrategyKind::TwoStage,
            batch: 1,
            stop_grad_norm: None,
            stop_displacement: None,
        }
    }
}

impl SolverConfig {
    /// The optimism coefficient after applying method defaults. The
    /// mirror-prox derivation needs `(gamma, tau)` so it stays in the
    /// runner; this helper covers the adaptive method and baselines.
    pub fn resolved_alpha(&self) -> f64 {
        self.alpha.unwrap_or(1.0)
    }
}

/// `[diagnostics]` section: what the run loop logs.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsConfig {
    /// Solve for the saddle point first and log the Lyapunov gap.
    pub reference: bool,
    pub reference_tol: f64,
    /// Checkpoint cadence; 0 records only the first and last iterates.
    pub record_every: usize,
    /// Append the weight vector to each CSV row.
    pub with_pi: bool,
    /// Envelope-gradient cadence; 0 disables the estimate.
    pub moreau_every: usize,
    /// Envelope parameter; 0 uses the instance's own smoothness bound.
    pub moreau_l: f64,
    pub moreau_budget: usize,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            reference: false,
            reference_tol: 1e-12,
            record_every: 10,
            with_pi: false,
            moreau_every: 0,
            moreau_l: 0.0,
            moreau_budget: 400,
        }
    }
}

/// A full experiment description; round-trips through the text format.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentConfig {
    pub name: String,
    /// Master seed for the init and sampler streams (`--seed` overrides).
    pub master_seed: u64,
    pub problem: ProblemConfig,
    pub solver: SolverConfig,
    pub diagnostics: DiagnosticsConfig,
    /// Output CSV path; empty derives `<name>.csv`.
    pub output_path: String,
}

impl ExperimentConfig {
    pub fn named(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }
}

const SECTIONS: [&str; 5] = ["experiment", "problem", "solver", "diagnostics", "output"];

struct Entry {
    line: usize,
    section: String,
    key: String,
    value: String,
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(pos) => &line[..pos],
        None => line,
    }
}

fn tokenize(text: &str) -> Result<Vec<Entry>, ConfigError> {
    let mut entries = Vec::new();
    let mut section: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = strip_comment(raw).trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("malformed section header `{trimmed}`"),
                });
            };
            let name = name.trim();
            if !SECTIONS.contains(&name) {
                return Err(ConfigError::UnknownSection {
                    line,
                    section: name.to_string(),
                });
            }
            section = Some(name.to_string());
            continue;
        }
        let Some((key_part, value_part)) = trimmed.split_once('=') else {
            return Err(ConfigError::Syntax {
                line,
                message: format!("expected `key = value`, got `{trimmed}`"),
            });
        };
        let key_part = key_part.trim();
        let value = value_part.trim().to_string();
        if key_part.is_empty() {
            return Err(ConfigError::Syntax {
                line,
                message: "empty key".to_string(),
            });
        }
        let (entry_section, key) = if let Some((prefix, bare)) = key_part.split_once('.') {
            if !SECTIONS.contains(&prefix) {
                return Err(ConfigError::UnknownSection {
                    line,
                    section: prefix.to_string(),
                });
            }
            (prefix.to_string(), bare.trim().to_string())
        } else {
            let Some(current) = &section else {
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("key `{key_part}` appears before any section header"),
                });
            };
            (current.clone(), key_part.to_string())
        };
        if value.is_empty() {
            return Err(ConfigError::Syntax {
                line,
                message: format!("key `{key}` has an empty value"),
            });
        }
        entries.push(Entry {
            line,
            section: entry_section,
            key,
            value,
        });
    }
    Ok(entries)
}

fn parse_u64(e: &Entry) -> Result<u64, ConfigError> {
    e.value.parse().map_err(|_| ConfigError::TypeMismatch {
        line: e.line,
        key: e.key.clone(),
        expected: "a non-negative integer",
        value: e.value.clone(),
    })
}

fn parse_usize(e: &Entry) -> Result<usize, ConfigError> {
    e.value.parse().map_err(|_| ConfigError::TypeMismatch {
        line: e.line,
        key: e.key.clone(),
        expected: "a non-negative integer",
        value: e.value.clone(),
    })
}

fn parse_f64(e: &Entry) -> Result<f64, ConfigError> {
    let parsed: Result<f64, _> = e.value.parse();
    match parsed {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(ConfigError::TypeMismatch {
            line: e.line,
            key: e.key.clone(),
            expected: "a finite number",
            value: e.value.clone(),
        }),
    }
}

fn parse_bool(e: &Entry) -> Result<bool, ConfigError> {
    match e.value.as_str() {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(ConfigError::TypeMismatch {
            line: e.line,
            key: e.key.clone(),
            expected: "`true` or `false`",
            value: e.value.clone(),
        }),
    }
}

fn parse_choice<T: Copy>(e: &Entry, table: &[(&str, T)], expected: &'static str) -> Result<T, ConfigError> {
    for (name, v) in table {
        if e.value == *name {
            return Ok(*v);
        }
    }
    Err(ConfigError::TypeMismatch {
        line: e.line,
        key: e.key.clone(),
        expected,
        value: e.value.clone(),
    })
}

const FAMILIES: [(&str, FamilyKind); 3] = [
    ("quadratic", FamilyKind::Quadratic),
    ("logistic", FamilyKind::Logistic),
    ("mlp", FamilyKind::Mlp),
];

const METHODS: [(&str, MethodKind); 6] = [
    ("omp", MethodKind::Omp),
    ("also", MethodKind::Also),
    ("adam-uniform", MethodKind::AdamUniform),
    ("adamw-uniform", MethodKind::AdamwUniform),
    ("static-weights", MethodKind::StaticWeights),
    ("sgda", MethodKind::Sgda),
];

const PI_UPDATES: [(&str, PiUpdateKind); 2] = [
    ("entropic", PiUpdateKind::Entropic),
    ("constrained", PiUpdateKind::Constrained),
];

const ADAMS: [(&str, AdamKind); 2] = [
    ("coordinate", AdamKind::Coordinate),
    ("scalar-norm", AdamKind::ScalarNorm),
];

const ORACLES: [(&str, OracleKind); 2] =
    [("exact", OracleKind::Exact), ("sampled", OracleKind::Sampled)];

const STRATEGIES: [(&str, StrategyKind); 3] = [
    ("uniform-all", StrategyKind::UniformAll),
    ("two-stage", StrategyKind::TwoStage),
    ("probability-weighted", StrategyKind::ProbabilityWeighted),
];

/// Parses the text format. Strict by construction: every diagnostic
/// carries the line it came from, and nothing is silently ignored.
pub fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let entries = tokenize(text)?;
    let mut seen: Vec<(String, String)> = Vec::new();
    for e in &entries {
        let pair = (e.section.clone(), e.key.clone());
        if seen.contains(&pair) {
            return Err(ConfigError::Duplicate {
                line: e.line,
                section: e.section.clone(),
                key: e.key.clone(),
            });
        }
        seen.push(pair);
    }

    let mut cfg = ExperimentConfig::default();
    for e in &entries {
        match (e.section.as_str(), e.key.as_str()) {
            ("experiment", "name") => cfg.name = e.value.clone(),
            ("experiment", "seed") => cfg.master_seed = parse_u64(e)?,
            ("problem", "family") => {
                cfg.problem.family = parse_choice(e, &FAMILIES, "one of quadratic|logistic|mlp")?
            }
            ("problem", "seed") => cfg.problem.seed = parse_u64(e)?,
            ("problem", "dim") => cfg.problem.dim = parse_usize(e)?,
            ("problem", "groups") => cfg.problem.groups = parse_usize(e)?,
            ("problem", "items_per_group") => cfg.problem.items_per_group = parse_usize(e)?,
            ("problem", "n_per_class") => cfg.problem.n_per_class = parse_usize(e)?,
            ("problem", "uc") => cfg.problem.uc = parse_usize(e)?,
            ("problem", "hidden") => cfg.problem.hidden = parse_usize(e)?,
            ("problem", "separation") => cfg.problem.separation = parse_f64(e)?,
            ("problem", "tau_theta") => cfg.problem.tau_theta = Some(parse_f64(e)?),
            ("problem", "tau_pi") => cfg.problem.tau_pi = Some(parse_f64(e)?),
            ("solver", "method") => {
                cfg.solver.method = parse_choice(
                    e,
                    &METHODS,
                    "one of omp|also|adam-uniform|adamw-uniform|static-weights|sgda",
                )?
            }
            ("solver", "iterations") => cfg.solver.iterations = parse_usize(e)?,
            ("solver", "gamma_theta") => cfg.solver.gamma_theta = parse_f64(e)?,
            ("solver", "gamma_pi") => cfg.solver.gamma_pi = parse_f64(e)?,
            ("solver", "alpha") => cfg.solver.alpha = Some(parse_f64(e)?),
            ("solver", "theorem_mode") => cfg.solver.theorem_mode = parse_bool(e)?,
            ("solver", "pi_update") => {
                cfg.solver.pi_update = parse_choice(e, &PI_UPDATES, "one of entropic|constrained")?
            }
            ("solver", "adam") => {
                cfg.solver.adam = parse_choice(e, &ADAMS, "one of coordinate|scalar-norm")?
            }
            ("solver", "oracle") => {
                cfg.solver.oracle = parse_choice(e, &ORACLES, "one of exact|sampled")?
            }
            ("solver", "strategy") => {
                cfg.solver.strategy = parse_choice(
                    e,
                    &STRATEGIES,
                    "one of uniform-all|two-stage|probability-weighted",
                )?
            }
            ("solver", "batch") => cfg.solver.batch = parse_usize(e)?,
            ("solver", "stop_grad_norm") => cfg.solver.stop_grad_norm = Some(parse_f64(e)?),
            ("solver", "stop_displacement") => {
                cfg.solver.stop_displacement = Some(parse_f64(e)?)
            }
            ("diagnostics", "reference") => cfg.diagnostics.reference = parse_bool(e)?,
            ("diagnostics", "reference_tol") => cfg.diagnostics.reference_tol = parse_f64(e)?,
            ("diagnostics", "record_every") => cfg.diagnostics.record_every = parse_usize(e)?,
            ("diagnostics", "with_pi") => cfg.diagnostics.with_pi = parse_bool(e)?,
            ("diagnostics", "moreau_every") => cfg.diagnostics.moreau_every = parse_usize(e)?,
            ("diagnostics", "moreau_l") => cfg.diagnostics.moreau_l = parse_f64(e)?,
            ("diagnostics", "moreau_budget") => cfg.diagnostics.moreau_budget = parse_usize(e)?,
            ("output", "path") => cfg.output_path = e.value.clone(),
            _ => {
                return Err(ConfigError::UnknownKey {
                    line: e.line,
                    section: e.section.clone(),
                    key: e.key.clone(),
                })
            }
        }
    }

    for e in &entries {
        if let Err(reason) = applicable(&cfg, &e.section, &e.key) {
            return Err(ConfigError::Inapplicable {
                line: e.line,
                key: format!("{}.{}", e.section, e.key),
                reason,
            });
        }
    }
    validate(&cfg)?;
    Ok(cfg)
}

/// Whether a key makes sense under the selected family and method.
/// Returns the rejection reason otherwise.
fn applicable(cfg: &ExperimentConfig, section: &str, key: &str) -> Result<(), String> {
    let family = cfg.problem.family;
    let method = cfg.solver.method;
    match (section, key) {
        ("problem", "groups") | ("problem", "items_per_group")
            if family != FamilyKind::Quadratic =>
        {
            Err("only the quadratic family has explicit group shape".to_string())
        }
        ("problem", "n_per_class") if family == FamilyKind::Quadratic => {
            Err("the quadratic family is shaped by groups/items_per_group".to_string())
        }
        ("problem", "uc") if family != FamilyKind::Logistic => {
            Err("the imbalance factor applies to the logistic family".to_string())
        }
        ("problem", "hidden") | ("problem", "separation") if family != FamilyKind::Mlp => {
            Err("network shape keys apply to the mlp family".to_string())
        }
        ("solver", "theorem_mode") | ("solver", "stop_displacement")
            if method != MethodKind::Omp =>
        {
            Err("this key applies to method = omp".to_string())
        }
        ("solver", "gamma_theta") | ("solver", "gamma_pi") | ("solver", "alpha")
            if method == MethodKind::Omp && cfg.solver.theorem_mode =>
        {
            Err("theorem_mode derives the stepsizes and optimism from the instance".to_string())
        }
        ("solver", "gamma_pi") if method.is_frozen_weight_baseline() => {
            Err("frozen-weight baselines take no weight step".to_string())
        }
        ("solver", "alpha")
            if !matches!(method, MethodKind::Omp | MethodKind::Also) =>
        {
            Err("only the optimistic methods expose the lookback coefficient".to_string())
        }
        ("solver", "pi_update") | ("solver", "stop_grad_norm") if method != MethodKind::Also => {
            Err("this key applies to method = also".to_string())
        }
        ("solver", "adam") if !method.uses_adam() => {
            Err("this method does not use the adaptive direction".to_string())
        }
        ("solver", "oracle") if !method.uses_oracle() => {
            Err("the mirror-prox method always evaluates the exact operator".to_string())
        }
        ("solver", "strategy") | ("solver", "batch")
            if !method.uses_oracle() || cfg.solver.oracle != OracleKind::Sampled =>
        {
            Err("sampling keys require oracle = sampled".to_string())
        }
        _ => Ok(()),
    }
}

fn validate(cfg: &ExperimentConfig) -> Result<(), ConfigError> {
    let fail = |msg: String| Err(ConfigError::Invalid(msg));
    let p = &cfg.problem;
    if p.dim == 0 {
        return fail("problem.dim must be at least 1".to_string());
    }
    if p.family == FamilyKind::Quadratic && (p.groups == 0 || p.items_per_group == 0) {
        return fail("quadratic shape must have at least one group and item".to_string());
    }
    if p.family != FamilyKind::Quadratic && p.n_per_class == 0 {
        return fail("problem.n_per_class must be at least 1".to_string());
    }
    if p.family == FamilyKind::Logistic && p.uc == 0 {
        return fail("problem.uc must be at least 1".to_string());
    }
    if p.family == FamilyKind::Mlp && (p.hidden == 0 || p.separation <= 0.0 || p.separation.is_nan())
    {
        return fail("mlp needs hidden >= 1 and separation > 0".to_string());
    }
    for (name, tau) in [("tau_theta", p.tau_theta), ("tau_pi", p.tau_pi)] {
        if let Some(t) = tau {
            if t < 0.0 {
                return fail(format!("problem.{name} must be non-negative, got {t}"));
            }
        }
    }
    let s = &cfg.solver;
    if s.iterations == 0 {
        return fail("solver.iterations must be at least 1".to_string());
    }
    if !(s.method == MethodKind::Omp && s.theorem_mode) {
        if s.gamma_theta <= 0.0 || s.gamma_theta.is_nan() {
            return fail(format!(
                "solver.gamma_theta must be positive, got {}",
                s.gamma_theta
            ));
        }
        if s.gamma_pi < 0.0 {
            return fail(format!(
                "solver.gamma_pi must be non-negative, got {}",
                s.gamma_pi
            ));
        }
    }
    if let Some(a) = s.alpha {
        if a < 0.0 {
            return fail(format!("solver.alpha must be non-negative, got {a}"));
        }
    }
    if s.oracle == OracleKind::Sampled && s.batch == 0 {
        return fail("solver.batch must be at least 1".to_string());
    }
    let d = &cfg.diagnostics;
    if d.reference_tol <= 0.0 || d.reference_tol.is_nan() {
        return fail(format!(
            "diagnostics.reference_tol must be positive, got {}",
            d.reference_tol
        ));
    }
    if d.moreau_every > 0 && d.moreau_budget == 0 {
        return fail("diagnostics.moreau_budget must be at least 1".to_string());
    }
    if d.moreau_l < 0.0 {
        return fail(format!(
            "diagnostics.moreau_l must be non-negative, got {}",
            d.moreau_l
        ));
    }
    Ok(())
}

impl ExperimentConfig {
    /// Canonical text rendering: every key applicable under the selected
    /// family and method, optional keys only when set.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut line = |s: String| {
            out.push_str(&s);
            out.push('\n');
        };
        line("[experiment]".to_string());
        if !self.name.is_empty() {
            line(format!("name = {}", self.name));
        }
        line(format!("seed = {}", self.master_seed));
        line(String::new());

        let p = &self.problem;
        line("[problem]".to_string());
        line(format!("family = {}", p.family.config_name()));
        line(format!("seed = {}", p.seed));
        line(format!("dim = {}", p.dim));
        match p.family {
            FamilyKind::Quadratic => {
                line(format!("groups = {}", p.groups));
                line(format!("items_per_group = {}", p.items_per_group));
            }
            FamilyKind::Logistic => {
                line(format!("n_per_class = {}", p.n_per_class));
                line(format!("uc = {}", p.uc));
            }
            FamilyKind::Mlp => {
                line(format!("n_per_class = {}", p.n_per_class));
                line(format!("hidden = {}", p.hidden));
                line(format!("separation = {}", p.separation));
            }
        }
        if let Some(t) = p.tau_theta {
            line(format!("tau_theta = {t}"));
        }
        if let Some(t) = p.tau_pi {
            line(format!("tau_pi = {t}"));
        }
        line(String::new());

        let s = &self.solver;
        line("[solver]".to_string());
        line(format!("method = {}", s.method.config_name()));
        line(format!("iterations = {}", s.iterations));
        let theorem = s.method == MethodKind::Omp && s.theorem_mode;
        if theorem {
            line("theorem_mode = true".to_string());
        } else {
            line(format!("gamma_theta = {}", s.gamma_theta));
            if !s.method.is_frozen_weight_baseline() {
                line(format!("gamma_pi = {}", s.gamma_pi));
            }
            if let Some(a) = s.alpha {
                if matches!(s.method, MethodKind::Omp | MethodKind::Also) {
                    line(format!("alpha = {a}"));
                }
            }
        }
        if s.method == MethodKind::Also {
            line(format!("pi_update = {}", s.pi_update.config_name()));
            if let Some(g) = s.stop_grad_norm {
                line(format!("stop_grad_norm = {g}"));
            }
        }
        if s.method == MethodKind::Omp {
            if let Some(d) = s.stop_displacement {
                line(format!("stop_displacement = {d}"));
            }
        }
        if s.method.uses_adam() {
            line(format!("adam = {}", s.adam.config_name()));
        }
        if s.method.uses_oracle() {
            line(format!("oracle = {}", s.oracle.config_name()));
            if s.oracle == OracleKind::Sampled {
                line(format!("strategy = {}", s.strategy.config_name()));
                line(format!("batch = {}", s.batch));
            }
        }
        line(String::new());

        let d = &self.diagnostics;
        line("[diagnostics]".to_string());
        line(format!("reference = {}", d.reference));
        line(format!("reference_tol = {}", d.reference_tol));
        line(format!("record_every = {}", d.record_every));
        line(format!("with_pi = {}", d.with_pi));
        line(format!("moreau_every = {}", d.moreau_every));
        line(format!("moreau_l = {}", d.moreau_l));
        line(format!("moreau_budget = {}", d.moreau_budget));

        if !self.output_path.is_empty() {
            line(String::new());
            line("[output]".to_string());
            line(format!("path = {}", self.output_path));
        }
        out
    }
}
