//! Independent numeric oracles for the verification suite.
//!
//! These deliberately avoid the library's closed forms. The prox oracle
//! minimizes the variational objective directly by bisecting its
//! (monotone) directional derivative; the inner-max oracle combines a
//! coarse grid with the same bisection. Agreement between these and the
//! softmax-based fast paths is what the suite certifies.

use rand::Rng as _;
use rand_distr::StandardNormal;

use drokit_core::rng::Rng;

/// Fixed halving count: 2^-80 of the unit interval is far below one ulp,
/// so the bracket collapses to the arithmetic limit deterministically.
const BISECT_STEPS: usize = 80;

/// A strictly interior random simplex point: normalized exponentials of
/// Gaussian logits. `spread` controls how lopsided the draws get.
pub fn random_interior_point(c: usize, spread: f64, rng: &mut Rng) -> Vec<f64> {
    let logits: Vec<f64> = (0..c)
        .map(|_| spread * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&x| (x - m).exp()).collect();
    let sum: f64 = out.iter().sum();
    for x in &mut out {
        *x /= sum;
    }
    out
}

/// A random simplex point bounded away from the boundary: coordinates
/// `1 + u` with `u` uniform on `[0, 1)`, normalized, so every weight
/// lies in `[1/(2c), 1/c]`. Used where finite differences must stay in
/// the roundoff-dominated regime: the entropy term's third derivative
/// along a tangent direction grows like `1/w^2` near the boundary.
pub fn moderate_interior_point(c: usize, rng: &mut Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..c).map(|_| 1.0 + rng.random::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Directional derivative of
///
/// ```text
/// J(pi) = gamma <g, pi> + KL[pi || w] + gamma tau KL[pi || p]
/// ```
///
/// along `e_i - e_l`, evaluated at weights `(t_i, t_l)`. The `+1` terms
/// from the two entropy gradients cancel in the difference.
#[allow(clippy::too_many_arguments)]
fn pair_derivative(
    t_i: f64,
    t_l: f64,
    w_i: f64,
    w_l: f64,
    p_i: f64,
    p_l: f64,
    g_i: f64,
    g_l: f64,
    gamma: f64,
    tau: f64,
) -> f64 {
    gamma * (g_i - g_l) + ((t_i / w_i).ln() - (t_l / w_l).ln())
        + gamma * tau * ((t_i / p_i).ln() - (t_l / p_l).ln())
}

fn bisect_increasing(mut lo: f64, mut hi: f64, mut d: impl FnMut(f64) -> f64) -> f64 {
    if d(lo) >= 0.0 {
        return lo;
    }
    if d(hi) <= 0.0 {
        return hi;
    }
    for _ in 0..BISECT_STEPS {
        let mid = 0.5 * (lo + hi);
        if d(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Constrained argmin of the entropic prox objective over the floored
/// two- or three-point simplex, by derivative bisection. Supports only
/// the sizes the acceptance criterion exercises.
pub fn prox_oracle(
    pi_old: &[f64],
    prior: &[f64],
    g: &[f64],
    gamma: f64,
    tau: f64,
    floor: f64,
) -> Vec<f64> {
    match pi_old.len() {
        2 => {
            let t = bisect_increasing(floor, 1.0 - floor, |t| {
                pair_derivative(
                    t,
                    1.0 - t,
                    pi_old[0],
                    pi_old[1],
                    prior[0],
                    prior[1],
                    g[0],
                    g[1],
                    gamma,
                    tau,
                )
            });
            vec![t, 1.0 - t]
        }
        3 => {
            // Inner solve in the second coordinate for a fixed first one;
            // the partial in `b` is strictly increasing, so bisection is
            // exact. The outer derivative uses the envelope theorem: at
            // the inner minimizer, d/da of the partial minimum equals the
            // partial derivative in `a`.
            let inner = |a: f64| -> f64 {
                bisect_increasing(floor, 1.0 - a - floor, |b| {
                    pair_derivative(
                        b,
                        1.0 - a - b,
                        pi_old[1],
                        pi_old[2],
                        prior[1],
                        prior[2],
                        g[1],
                        g[2],
                        gamma,
                        tau,
                    )
                })
            };
            let a = bisect_increasing(floor, 1.0 - 2.0 * floor, |a| {
                let b = inner(a);
                pair_derivative(
                    a,
                    1.0 - a - b,
                    pi_old[0],
                    pi_old[2],
                    prior[0],
                    prior[2],
                    g[0],
                    g[2],
                    gamma,
                    tau,
                )
            });
            let b = inner(a);
            vec![a, b, 1.0 - a - b]
        }
        c => panic!("prox oracle supports c in {{2, 3}}, got {c}"),
    }
}

/// The robust inner objective on the two-point simplex,
/// `M(t) = t l_0 + (1-t) l_1 - tau (t ln(t/p_0) + (1-t) ln((1-t)/p_1))`.
pub fn two_point_objective(t: f64, losses: &[f64], prior: &[f64], tau: f64) -> f64 {
    t * losses[0] + (1.0 - t) * losses[1]
        - tau * (t * (t / prior[0]).ln() + (1.0 - t) * ((1.0 - t) / prior[1]).ln())
}

/// Grid-plus-bisection maximizer of [`two_point_objective`] over the
/// floored interval. Returns `(t_star, value)`.
pub fn two_point_maximizer(
    losses: &[f64],
    prior: &[f64],
    tau: f64,
    floor: f64,
) -> (f64, f64) {
    let lo = floor;
    let hi = 1.0 - floor;
    // Coarse grid pass to certify unimodality assumptions cheaply.
    let grid = 4096;
    let mut best_t = lo;
    let mut best_v = f64::NEG_INFINITY;
    for i in 0..=grid {
        let t = lo + (hi - lo) * i as f64 / grid as f64;
        let v = two_point_objective(t, losses, prior, tau);
        if v > best_v {
            best_v = v;
            best_t = t;
        }
    }
    // M'(t) is strictly decreasing, so -M' is increasing.
    let t = bisect_increasing(lo, hi, |t| {
        -((losses[0] - losses[1])
            - tau * ((t / prior[0]).ln() - ((1.0 - t) / prior[1]).ln()))
    });
    let v = two_point_objective(t, losses, prior, tau);
    if v >= best_v {
        (t, v)
    } else {
        (best_t, best_v)
    }
}
