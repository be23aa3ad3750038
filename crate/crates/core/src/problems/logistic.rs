//! Binary logistic losses `f(theta) = ln(1 + exp(-y x . theta))`,
//! `y in {-1, +1}`, and the class-imbalanced instance generator.

use ndarray::Array1;
use rand::Rng as _;
use rand_distr::StandardNormal;

use super::{DroProblem, LipschitzInfo, LossFamily};
use crate::rng::{stream, StreamId};

/// Held-out points per class in generated balanced test sets; large enough
/// to keep F1 estimates stable at desk scale.
const TEST_PER_CLASS: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticItem {
    pub x: Array1<f64>,
    pub y: f64,
}

fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl LogisticItem {
    pub fn value(&self, theta: &Array1<f64>) -> f64 {
        softplus(-self.y * self.x.dot(theta))
    }

    /// `out += scale * (-y sigma(-y x.theta)) x`.
    pub fn grad_into(&self, theta: &Array1<f64>, scale: f64, out: &mut Array1<f64>) {
        let margin = self.y * self.x.dot(theta);
        out.scaled_add(-scale * self.y * sigmoid(-margin), &self.x);
    }

    /// Smoothness `||x||^2 / 4` (the logistic curvature peaks at 1/4).
    pub fn smoothness(&self) -> f64 {
        0.25 * self.x.dot(&self.x)
    }

    /// Global gradient-norm bound `||x||`.
    pub fn grad_bound(&self) -> f64 {
        self.x.dot(&self.x).sqrt()
    }
}

pub(super) fn lipschitz(groups: &[Vec<LogisticItem>]) -> LipschitzInfo {
    let mut item_l = Vec::new();
    let mut item_k = Vec::new();
    for group in groups {
        for item in group {
            item_l.push(item.smoothness());
            item_k.push(item.grad_bound());
        }
    }
    LipschitzInfo {
        item_l,
        item_k,
        radius: f64::INFINITY,
        empirical: false,
    }
}

/// A class-imbalanced training problem plus its balanced evaluation data.
#[derive(Debug, Clone)]
pub struct ImbalancedLogistic {
    /// Per-object grouping: every training point is its own group, so the
    /// adversary reweights individual objects.
    pub problem: DroProblem,
    /// Balanced held-out set (features, label).
    pub test: Vec<(Array1<f64>, f64)>,
    /// Group indices belonging to the minority class.
    pub minority_groups: Vec<usize>,
    /// Prior mass of the minority class, `n_minority / n`.
    pub minority_prior_mass: f64,
    pub uc: usize,
}

/// Two overlapping Gaussian clouds at `+/- delta * ones` in the first
/// `d - 1` coordinates; the last coordinate is a constant 1 so the
/// linear model carries an intercept. That intercept is what class
/// imbalance corrupts: fitted on skewed counts it absorbs the log-odds
/// of the class prior and pushes the boundary past the minority cloud.
/// The majority class (+1) keeps `n_per_class` training points; the
/// minority class (-1) keeps `max(1, n_per_class / uc)`. Grouping is per
/// object, so `c = n` and the uniform prior assigns the minority class
/// total mass `n_minority / n`.
pub fn make_imbalanced_logistic(
    seed: u64,
    d: usize,
    n_per_class: usize,
    uc: usize,
) -> ImbalancedLogistic {
    assert!(uc >= 1, "imbalance factor must be at least 1");
    assert!(d >= 2, "need at least one feature beside the intercept");
    let mut rng = stream(seed, StreamId::DataGen);
    let features = d - 1;
    let delta = 1.0 / (features as f64).sqrt();
    let n_minority = ((n_per_class as f64 / uc as f64).round() as usize).max(1);
    let mut draw = |label: f64, count: usize| -> Vec<(Array1<f64>, f64)> {
        (0..count)
            .map(|_| {
                let x = Array1::from_shape_fn(d, |j| {
                    if j < features {
                        label * delta + rng.sample::<f64, _>(StandardNormal)
                    } else {
                        1.0
                    }
                });
                (x, label)
            })
            .collect()
    };
    let majority = draw(1.0, n_per_class);
    let minority = draw(-1.0, n_minority);
    let mut test = draw(1.0, TEST_PER_CLASS);
    test.extend(draw(-1.0, TEST_PER_CLASS));

    let mut groups: Vec<Vec<LogisticItem>> = Vec::with_capacity(n_per_class + n_minority);
    for (x, y) in majority.into_iter().chain(minority) {
        groups.push(vec![LogisticItem { x, y }]);
    }
    let n = groups.len();
    let minority_groups: Vec<usize> = (n_per_class..n).collect();
    // tau_pi = 0.5 keeps the KL anchor weak enough that the adversary's
    // reweighting is visible at desk scale; 1.0 pins the weights so close
    // to the prior that the boundary barely moves.
    let problem = DroProblem::new(LossFamily::Logistic { groups }, d, 1e-2, 0.5)
        .expect("generated logistic instance is well formed");
    ImbalancedLogistic {
        problem,
        test,
        minority_groups,
        minority_prior_mass: n_minority as f64 / n as f64,
        uc,
    }
}

/// F1 score of the linear classifier `sign(x . theta)` with the minority
/// class (label -1) as the positive class.
pub fn minority_f1(theta: &Array1<f64>, test: &[(Array1<f64>, f64)]) -> f64 {
    let (mut tp, mut fp, mut fnn) = (0usize, 0usize, 0usize);
    for (x, y) in test {
        let predicted_minority = x.dot(theta) < 0.0;
        let is_minority = *y < 0.0;
        match (predicted_minority, is_minority) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fnn += 1,
            (false, false) => {}
        }
    }
    let denom = 2 * tp + fp + fnn;
    if denom == 0 {
        return 0.0;
    }
    2.0 * tp as f64 / denom as f64
}
