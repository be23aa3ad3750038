//! Per-iteration records produced by the solver run loops.

/// One logged checkpoint. Optional fields are populated only when the run
/// was configured to compute them (a reference solution for `phi_k`, an
/// envelope parameter for `moreau_grad`, and so on).
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    /// Iteration index (true solver iteration, not row count).
    pub k: usize,
    /// Saddle objective `h(theta_k, pi_k)`.
    pub h: f64,
    /// Inner-max value `Phi(theta_k)`, when `tau_pi > 0` and requested.
    pub phi_obj: Option<f64>,
    /// Lyapunov value `||theta_k - theta*||^2 + KL[pi* || pi_k]` against
    /// an attached reference solution.
    pub phi_k: Option<f64>,
    /// Moreau-envelope gradient-norm estimate at sparse checkpoints.
    pub moreau_grad: Option<f64>,
    /// Weight snapshot, when requested.
    pub pi: Option<Vec<f64>>,
    /// Norm of the full deterministic gradient `grad_theta h(theta, pi)`.
    pub grad_norm: f64,
    /// Wall-clock milliseconds since the run started. Excluded from
    /// reproducibility guarantees.
    pub wall_ms: f64,
}

/// Run provenance carried alongside the rows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunMeta {
    pub label: String,
    pub seed: Option<u64>,
    pub config_hash: Option<u64>,
}

impl RunMeta {
    pub fn new(label: impl Into<String>, seed: u64) -> Self {
        Self {
            label: label.into(),
            seed: Some(seed),
            config_hash: None,
        }
    }
}

/// An ordered trajectory log.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrajectoryRecord {
    pub meta: RunMeta,
    pub rows: Vec<TrajectoryRow>,
}

impl TrajectoryRecord {
    pub fn new(label: impl Into<String>) -> Self {
        Self::with_meta(RunMeta {
            label: label.into(),
            ..RunMeta::default()
        })
    }

    pub fn with_meta(meta: RunMeta) -> Self {
        Self {
            meta,
            rows: Vec::new(),
        }
    }

    /// Appends a row; iteration indices must strictly increase.
    pub fn push(&mut self, row: TrajectoryRow) {
        if let Some(last) = self.rows.last() {
            assert!(
                row.k > last.k,
                "trajectory rows must have strictly increasing iteration indices"
            );
        }
        self.rows.push(row);
    }

    pub fn last(&self) -> Option<&TrajectoryRow> {
        self.rows.last()
    }

    /// The `(k, phi_k)` subsequence where a Lyapunov value was recorded.
    pub fn phi_series(&self) -> Vec<(usize, f64)> {
        self.rows
            .iter()
            .filter_map(|r| r.phi_k.map(|p| (r.k, p)))
            .collect()
    }
}
