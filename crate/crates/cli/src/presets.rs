//! Bundled experiment presets.
//!
//! Each preset is an ordinary [`ExperimentConfig`]; `drokit run --preset
//! NAME` behaves exactly like `--config` with the preset's canonical text,
//! and the round-trip property keeps the two paths interchangeable.

use crate::config::{
    AdamKind, ExperimentConfig, FamilyKind, MethodKind, OracleKind, PiUpdateKind, StrategyKind,
};

pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    pub config: ExperimentConfig,
}

fn omp_rate() -> Preset {
    let mut cfg = ExperimentConfig::named("omp-rate");
    cfg.problem.family = FamilyKind::Quadratic;
    cfg.problem.seed = 11;
    cfg.problem.dim = 6;
    cfg.problem.groups = 6;
    cfg.problem.items_per_group = 1;
    cfg.solver.method = MethodKind::Omp;
    cfg.solver.theorem_mode = true;
    cfg.solver.iterations = 4000;
    cfg.diagnostics.reference = true;
    cfg.diagnostics.record_every = 1;
    cfg.output_path = "omp-rate.csv".to_string();
    Preset {
        name: "omp-rate",
        summary: "mirror-prox at the certified stepsize; logs the Lyapunov gap per iteration",
        config: cfg,
    }
}

fn also_quadratic() -> Preset {
    let mut cfg = ExperimentConfig::named("also-quadratic");
    cfg.problem.seed = 3;
    cfg.problem.dim = 8;
    cfg.solver.method = MethodKind::Also;
    cfg.solver.gamma_theta = 0.05;
    cfg.solver.gamma_pi = 0.2;
    cfg.solver.iterations = 2000;
    cfg.diagnostics.with_pi = true;
    cfg.output_path = "also-quadratic.csv".to_string();
    Preset {
        name: "also-quadratic",
        summary: "adaptive solver on a random quadratic instance with weight snapshots",
        config: cfg,
    }
}

fn also_sampled() -> Preset {
    let mut cfg = ExperimentConfig::named("also-sampled");
    cfg.problem.seed = 3;
    cfg.problem.dim = 8;
    cfg.solver.method = MethodKind::Also;
    cfg.solver.gamma_theta = 0.02;
    cfg.solver.gamma_pi = 0.1;
    cfg.solver.iterations = 5000;
    cfg.solver.oracle = OracleKind::Sampled;
    cfg.solver.strategy = StrategyKind::TwoStage;
    cfg.solver.batch = 4;
    cfg.diagnostics.record_every = 25;
    cfg.output_path = "also-sampled.csv".to_string();
    Preset {
        name: "also-sampled",
        summary: "the same quadratic instance driven by two-stage mini-batch estimates",
        config: cfg,
    }
}

fn imbalance_uc10() -> Preset {
    let mut cfg = ExperimentConfig::named("imbalance-uc10");
    cfg.problem.family = FamilyKind::Logistic;
    cfg.problem.seed = 1;
    cfg.problem.dim = 5;
    cfg.problem.n_per_class = 100;
    cfg.problem.uc = 10;
    cfg.solver.method = MethodKind::Also;
    cfg.solver.gamma_theta = 0.1;
    cfg.solver.gamma_pi = 0.5;
    cfg.solver.pi_update = PiUpdateKind::Entropic;
    cfg.solver.iterations = 1500;
    cfg.diagnostics.record_every = 25;
    cfg.diagnostics.with_pi = true;
    cfg.output_path = "imbalance-uc10.csv".to_string();
    Preset {
        name: "imbalance-uc10",
        summary: "10x class-imbalanced logistic instance; watch the minority weights grow",
        config: cfg,
    }
}

fn moreau_mlp() -> Preset {
    let mut cfg = ExperimentConfig::named("moreau-mlp");
    cfg.problem.family = FamilyKind::Mlp;
    cfg.problem.seed = 5;
    cfg.problem.dim = 2;
    cfg.problem.hidden = 3;
    cfg.problem.n_per_class = 20;
    cfg.problem.separation = 2.0;
    cfg.solver.method = MethodKind::Also;
    cfg.solver.alpha = Some(0.0);
    cfg.solver.adam = AdamKind::ScalarNorm;
    cfg.solver.gamma_theta = 0.05;
    cfg.solver.gamma_pi = 0.1;
    cfg.solver.iterations = 2000;
    cfg.diagnostics.record_every = 100;
    cfg.diagnostics.moreau_every = 500;
    cfg.diagnostics.moreau_budget = 400;
    cfg.output_path = "moreau-mlp.csv".to_string();
    Preset {
        name: "moreau-mlp",
        summary: "nonconvex network run in the descent-ascent regime with envelope checkpoints",
        config: cfg,
    }
}

/// All bundled presets, in display order.
pub fn all() -> Vec<Preset> {
    vec![
        omp_rate(),
        also_quadratic(),
        also_sampled(),
        imbalance_uc10(),
        moreau_mlp(),
    ]
}

/// Looks a preset up by exact name.
pub fn find(name: &str) -> Option<ExperimentConfig> {
    all().into_iter().find(|p| p.name == name).map(|p| p.config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse;

    #[test]
    fn preset_names_are_unique_and_match_their_configs() {
        let presets = all();
        for (i, p) in presets.iter().enumerate() {
            assert_eq!(p.name, p.config.name, "preset name and config name differ");
            for other in &presets[i + 1..] {
                assert_ne!(p.name, other.name, "duplicate preset name");
            }
        }
    }

    #[test]
    fn every_preset_round_trips_through_the_text_format() {
        for p in all() {
            let text = p.config.to_text();
            let reparsed =
                parse(&text).unwrap_or_else(|e| panic!("preset {} failed to parse: {e}", p.name));
            assert_eq!(reparsed, p.config, "preset {} round-trip mismatch", p.name);
        }
    }

    #[test]
    fn unknown_preset_is_not_found() {
        assert!(find("no-such-preset").is_none());
    }
}
