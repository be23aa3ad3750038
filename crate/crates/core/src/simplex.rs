//! Entropic geometry on the probability simplex.
//!
//! The adversarial weights live on the truncated simplex
//! `U = { pi : sum_i pi_i = 1, pi_i >= floor }` and move under the KL
//! (entropic) geometry. This module provides the KL divergence, a stable
//! softmax, the closed-form KL prox step used by the mirror-prox and
//! adaptive solvers, and the floored constrained prox used when the
//! truncation is an active constraint.
//!
//! All weight updates are computed in the log domain and mapped back with
//! a max-shifted softmax, so iterates stay strictly positive.

use thiserror::Error;

/// Default truncation level for simplex weights.
pub const DEFAULT_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimplexError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("non-finite entry at index {0}")]
    NonFinite(usize),
    #[error("KL divergence is infinite: q[{0}] = 0 while p[{0}] > 0")]
    InfiniteDivergence(usize),
    #[error("weight {value:e} at index {index} is zero or negative; log-domain step undefined")]
    NonPositiveWeight { index: usize, value: f64 },
    #[error("floor {floor:e} is infeasible for dimension {dim}: dim * floor > 1")]
    InfeasibleFloor { floor: f64, dim: usize },
    #[error("weights sum to {0}, not 1")]
    NotNormalized(f64),
    #[error("empty weight vector")]
    Empty,
}

/// A point on the truncated probability simplex, together with the prior
/// it is regularized towards and the truncation floor defining `U`.
///
/// Invariants, enforced by every constructor: `weights`, `prior` have the
/// same nonzero length, every entry of both is at least `floor`, and each
/// vector sums to 1 within 1e-12.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexWeights {
    weights: Vec<f64>,
    prior: Vec<f64>,
    floor: f64,
}

impl SimplexWeights {
    /// Validating constructor. Rejects vectors that are off the simplex
    /// rather than silently repairing them.
    pub fn new(weights: Vec<f64>, prior: Vec<f64>, floor: f64) -> Result<Self, SimplexError> {
        if weights.is_empty() {
            return Err(SimplexError::Empty);
        }
        if weights.len() != prior.len() {
            return Err(SimplexError::LengthMismatch(weights.len(), prior.len()));
        }
        if floor.is_nan() || floor < 0.0 || floor * weights.len() as f64 > 1.0 {
            return Err(SimplexError::InfeasibleFloor {
                floor,
                dim: weights.len(),
            });
        }
        for v in [&weights, &prior] {
            check_on_simplex(v, floor)?;
        }
        Ok(Self {
            weights,
            prior,
            floor,
        })
    }

    /// Uniform weights and prior on `c` groups with the default floor.
    pub fn uniform(c: usize) -> Self {
        let w = vec![1.0 / c as f64; c];
        Self {
            weights: w.clone(),
            prior: w,
            floor: DEFAULT_FLOOR,
        }
    }

    /// Weights initialized at the prior (`pi = prior`), the standard
    /// starting point for the solvers.
    pub fn at_prior(prior: Vec<f64>, floor: f64) -> Result<Self, SimplexError> {
        Self::new(prior.clone(), prior, floor)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    /// KL[weights || prior].
    pub fn kl_to_prior(&self) -> f64 {
        kl_divergence(&self.weights, &self.prior).expect("prior entries are strictly positive")
    }

    /// Replaces the weights, keeping prior and floor. Entries below the
    /// floor are clamped to it and the remaining mass is redistributed
    /// proportionally; weights already feasible are kept bit-for-bit.
    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self, SimplexError> {
        if weights.len() != self.weights.len() {
            return Err(SimplexError::LengthMismatch(weights.len(), self.weights.len()));
        }
        let repaired = refloor(weights, self.floor)?;
        Ok(Self {
            weights: repaired,
            prior: self.prior.clone(),
            floor: self.floor,
        })
    }
}

fn check_on_simplex(v: &[f64], floor: f64) -> Result<(), SimplexError> {
    let mut sum = 0.0;
    for (i, &x) in v.iter().enumerate() {
        if !x.is_finite() {
            return Err(SimplexError::NonFinite(i));
        }
        if x < floor {
            return Err(SimplexError::NonPositiveWeight { index: i, value: x });
        }
        sum += x;
    }
    if (sum - 1.0).abs() > 1e-12 {
        return Err(SimplexError::NotNormalized(sum));
    }
    Ok(())
}

/// Clamps entries below `floor` and renormalizes the free mass. A vector
/// that is already feasible (entries >= floor, sum within 1e-12 of 1) is
/// returned unchanged, which keeps exact fixed points exact.
fn refloor(mut v: Vec<f64>, floor: f64) -> Result<Vec<f64>, SimplexError> {
    let c = v.len();
    if c == 0 {
        return Err(SimplexError::Empty);
    }
    if floor * c as f64 > 1.0 {
        return Err(SimplexError::InfeasibleFloor { floor, dim: c });
    }
    let mut sum = 0.0;
    let mut feasible = true;
    for (i, &x) in v.iter().enumerate() {
        if !x.is_finite() {
            return Err(SimplexError::NonFinite(i));
        }
        if x < floor {
            feasible = false;
        }
        sum += x;
    }
    if feasible && (sum - 1.0).abs() <= 1e-12 {
        return Ok(v);
    }
    // Clamp violators to the floor, then scale the free coordinates so the
    // total is exactly the remaining mass. Scaling can push a coordinate
    // below the floor, so iterate; each round permanently clamps at least
    // one coordinate.
    let mut clamped = vec![false; c];
    loop {
        let mut n_clamped = 0usize;
        let mut free_sum = 0.0;
        for i in 0..c {
            if clamped[i] || v[i] < floor {
                clamped[i] = true;
                n_clamped += 1;
            } else {
                free_sum += v[i];
            }
        }
        if n_clamped == c || free_sum <= 0.0 {
            return Ok(vec![1.0 / c as f64; c]);
        }
        let target = 1.0 - floor * n_clamped as f64;
        let scale = target / free_sum;
        let mut again = false;
        for i in 0..c {
            if clamped[i] {
                v[i] = floor;
            } else {
                v[i] *= scale;
                if v[i] < floor {
                    again = true;
                }
            }
        }
        if !again {
            return Ok(v);
        }
    }
}

/// KL divergence `sum_i p_i ln(p_i / q_i)` between probability vectors.
///
/// Entries with `p_i = 0` contribute zero; `q_i = 0` with `p_i > 0` is an
/// error. The result is clamped at zero to absorb rounding on nearly
/// identical inputs.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64, SimplexError> {
    if p.len() != q.len() {
        return Err(SimplexError::LengthMismatch(p.len(), q.len()));
    }
    let mut sum = 0.0;
    for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if !pi.is_finite() || !qi.is_finite() {
            return Err(SimplexError::NonFinite(i));
        }
        if pi > 0.0 {
            if qi <= 0.0 {
                return Err(SimplexError::InfiniteDivergence(i));
            }
            sum += pi * (pi / qi).ln();
        }
    }
    Ok(sum.max(0.0))
}

/// Max-shifted softmax. Rejects non-finite logits; the output sums to 1
/// within a few ulps and every entry is strictly positive whenever the
/// logit spread stays below roughly 700.
pub fn softmax(logits: &[f64]) -> Result<Vec<f64>, SimplexError> {
    if logits.is_empty() {
        return Err(SimplexError::Empty);
    }
    let mut max = f64::NEG_INFINITY;
    for (i, &x) in logits.iter().enumerate() {
        if !x.is_finite() {
            return Err(SimplexError::NonFinite(i));
        }
        max = max.max(x);
    }
    let mut out: Vec<f64> = logits.iter().map(|&x| (x - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for x in &mut out {
        *x /= sum;
    }
    Ok(out)
}

/// Closed-form entropic prox step
///
/// ```text
/// pi_new = argmin_{pi}  <gamma g, pi> + KL[pi || pi_old] + gamma tau KL[pi || prior]
///        = SM[ ln pi_old - gamma_hat (g + tau ln(pi_old / prior)) ],
/// gamma_hat = gamma / (1 + gamma tau).
/// ```
///
/// `g` follows the variational-inequality sign convention: it is the
/// negated gradient of the concave objective in `pi`, so groups with
/// larger losses carry more negative `g` and gain weight. `gamma = 0`
/// returns `pi` unchanged, bit for bit.
pub fn entropic_prox_step(
    pi: &SimplexWeights,
    g: &[f64],
    gamma: f64,
    tau: f64,
) -> Result<SimplexWeights, SimplexError> {
    if g.len() != pi.len() {
        return Err(SimplexError::LengthMismatch(g.len(), pi.len()));
    }
    if !gamma.is_finite() || gamma < 0.0 || !tau.is_finite() || tau < 0.0 {
        return Err(SimplexError::NonFinite(0));
    }
    let gamma_hat = gamma / (1.0 + gamma * tau);
    if gamma_hat == 0.0 {
        return Ok(pi.clone());
    }
    let mut logits = Vec::with_capacity(pi.len());
    for (i, ((&w, &p), &gi)) in pi.weights().iter().zip(pi.prior()).zip(g).enumerate() {
        if !gi.is_finite() {
            return Err(SimplexError::NonFinite(i));
        }
        if w <= 0.0 {
            return Err(SimplexError::NonPositiveWeight { index: i, value: w });
        }
        let lw = w.ln();
        logits.push(lw - gamma_hat * (gi + tau * (lw - p.ln())));
    }
    pi.with_weights(softmax(&logits)?)
}

/// Constrained prox step over the floored simplex
///
/// ```text
/// pi_new = argmin_{pi in U}  <p_hat + ln(pi / prior), pi> + KL[pi || pi_old],
/// U = { pi on the simplex : pi_i >= set_floor }.
/// ```
///
/// Since `<ln(pi / prior), pi> = KL[pi || prior]`, the unconstrained
/// solution is `SM[(ln prior + ln pi_old - p_hat) / 2]`; when it violates
/// the floor the KKT system is solved by water-filling (see
/// [`floored_fit`]).
pub fn constrained_prox_step(
    pi: &SimplexWeights,
    p_hat: &[f64],
    set_floor: f64,
) -> Result<SimplexWeights, SimplexError> {
    if p_hat.len() != pi.len() {
        return Err(SimplexError::LengthMismatch(p_hat.len(), pi.len()));
    }
    let mut log_w = Vec::with_capacity(pi.len());
    for (i, ((&w, &p), &ph)) in pi.weights().iter().zip(pi.prior()).zip(p_hat).enumerate() {
        if !ph.is_finite() {
            return Err(SimplexError::NonFinite(i));
        }
        if w <= 0.0 {
            return Err(SimplexError::NonPositiveWeight { index: i, value: w });
        }
        log_w.push(0.5 * (p.ln() + w.ln() - ph));
    }
    let fitted = floored_fit(&log_w, set_floor)?;
    pi.with_weights(fitted)
}

/// Solves `argmin_{pi in U} KL[pi || w / |w|]` for `w = exp(log_w)`, i.e.
/// projects the normalized weight vector onto the floored simplex
/// `U = { pi_i >= floor }` in the entropic geometry.
///
/// KKT structure: there is a multiplier `nu > 0` with
/// `pi_i = max(floor, nu * w_i)`. `S(nu) = sum_i max(floor, nu w_i)` is
/// continuous and nondecreasing with `S(0) = c * floor <= 1`, so `nu` is
/// found by bisection; the active set it identifies is then used to
/// renormalize the free coordinates exactly.
pub fn floored_fit(log_w: &[f64], floor: f64) -> Result<Vec<f64>, SimplexError> {
    let c = log_w.len();
    if c == 0 {
        return Err(SimplexError::Empty);
    }
    if floor.is_nan() || floor < 0.0 || floor * c as f64 > 1.0 {
        return Err(SimplexError::InfeasibleFloor { floor, dim: c });
    }
    let w = softmax(log_w)?;
    if w.iter().all(|&x| x >= floor) {
        return Ok(w);
    }
    if (floor * c as f64 - 1.0).abs() <= f64::EPSILON {
        return Ok(vec![floor; c]);
    }
    // S(1) >= sum w = 1 with equality only if nothing clamps, so the root
    // lies in (0, 1].
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let s: f64 = w.iter().map(|&x| (mid * x).max(floor)).sum();
        if s < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let nu = 0.5 * (lo + hi);
    let active: Vec<bool> = w.iter().map(|&x| nu * x <= floor).collect();
    let n_active = active.iter().filter(|&&a| a).count();
    if n_active == c {
        return Ok(vec![floor; c]);
    }
    let free_mass = 1.0 - floor * n_active as f64;
    let free_sum: f64 = w
        .iter()
        .zip(&active)
        .filter(|(_, &a)| !a)
        .map(|(&x, _)| x)
        .sum();
    Ok(w
        .iter()
        .zip(&active)
        .map(|(&x, &a)| if a { floor } else { x * free_mass / free_sum })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// Prox objective minimized by `entropic_prox_step`, evaluated
    /// directly from its definition.
    fn prox_objective(pi: &[f64], old: &SimplexWeights, g: &[f64], gamma: f64, tau: f64) -> f64 {
        let lin: f64 = pi.iter().zip(g).map(|(&p, &gi)| gamma * gi * p).sum();
        lin + kl_divergence(pi, old.weights()).unwrap()
            + gamma * tau * kl_divergence(pi, old.prior()).unwrap()
    }

    /// Independent 1D oracle for c = 2: bisection on the stationarity
    /// condition of the prox objective along pi = (t, 1 - t).
    fn prox_oracle_c2(old: &SimplexWeights, g: &[f64], gamma: f64, tau: f64) -> Vec<f64> {
        let dv = |t: f64| {
            let ratio = (t / (1.0 - t)).ln();
            gamma * (g[0] - g[1])
                + ratio
                + (old.weights()[1] / old.weights()[0]).ln()
                + gamma * tau * (ratio + (old.prior()[1] / old.prior()[0]).ln())
        };
        let (mut lo, mut hi) = (1e-15, 1.0 - 1e-15);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if dv(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = 0.5 * (lo + hi);
        vec![t, 1.0 - t]
    }

    fn simplex_point(raw: &[f64]) -> Vec<f64> {
        let sum: f64 = raw.iter().sum();
        raw.iter().map(|&x| x / sum).collect()
    }

    #[test]
    fn kl_matches_hand_computed_values() {
        let v = kl_divergence(&[0.5, 0.5], &[0.25, 0.75]).unwrap();
        let expected = 0.5 * (2.0f64).ln() + 0.5 * (2.0f64 / 3.0).ln();
        assert_abs_diff_eq!(v, expected, epsilon = 1e-15);

        let v = kl_divergence(&[1.0, 0.0], &[0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(v, (2.0f64).ln(), epsilon = 1e-15);
    }

    #[test]
    fn kl_of_point_with_itself_is_zero() {
        let p = simplex_point(&[0.3, 1.2, 0.05, 2.0]);
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0, "KL[p||p] must be exactly 0");
    }

    #[test]
    fn kl_rejects_zero_denominator_and_length_mismatch() {
        assert_eq!(
            kl_divergence(&[0.5, 0.5], &[1.0, 0.0]),
            Err(SimplexError::InfiniteDivergence(1))
        );
        assert_eq!(
            kl_divergence(&[1.0], &[0.5, 0.5]),
            Err(SimplexError::LengthMismatch(1, 2))
        );
    }

    #[test]
    fn softmax_handles_large_logits_without_overflow() {
        let p = softmax(&[1000.0, 0.0]).unwrap();
        assert!(p[0] > 1.0 - 1e-12 && p[1] >= 0.0);
        let sum: f64 = p.iter().sum();
        assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
        assert!(softmax(&[f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn entropic_prox_matches_worked_example() {
        // gamma_hat = 0.5 / 1.5 = 1/3; from uniform weights and prior the
        // update is a two-way softmax with logit gap gamma_hat.
        let pi = SimplexWeights::uniform(2);
        let out = entropic_prox_step(&pi, &[-1.0, 0.0], 0.5, 1.0).unwrap();
        let gap: f64 = 1.0 / 3.0;
        let expect = 1.0 / (1.0 + (-gap).exp());
        assert_abs_diff_eq!(out.weights()[0], expect, epsilon = 1e-15);
        assert_abs_diff_eq!(out.weights()[1], 1.0 - expect, epsilon = 1e-15);
    }

    #[test]
    fn entropic_prox_with_zero_step_is_identity() {
        let pi = SimplexWeights::new(
            vec![0.2, 0.3, 0.5],
            vec![1.0 / 3.0; 3],
            1e-12,
        )
        .unwrap();
        let out = entropic_prox_step(&pi, &[5.0, -2.0, 0.1], 0.0, 1.0).unwrap();
        assert_eq!(out.weights(), pi.weights(), "gamma = 0 must be the exact identity");
    }

    #[test]
    fn entropic_prox_agrees_with_bisection_oracle() {
        let mut rng_state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            // splitmix64, enough for test point generation
            rng_state = rng_state.wrapping_add(0x9e3779b97f4a7c15);
            let mut z = rng_state;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
            (z ^ (z >> 31)) as f64 / u64::MAX as f64
        };
        for _ in 0..60 {
            let w = simplex_point(&[next() + 0.05, next() + 0.05]);
            let p = simplex_point(&[next() + 0.05, next() + 0.05]);
            let pi = SimplexWeights::new(w, p, 1e-12).unwrap();
            let g = [8.0 * (next() - 0.5), 8.0 * (next() - 0.5)];
            let gamma = 0.02 + 2.0 * next();
            let tau = 3.0 * next();
            let ours = entropic_prox_step(&pi, &g, gamma, tau).unwrap();
            let oracle = prox_oracle_c2(&pi, &g, gamma, tau);
            for (a, b) in ours.weights().iter().zip(&oracle) {
                assert!(
                    (a - b).abs() <= 1e-8,
                    "prox disagrees with oracle: {a} vs {b} (gamma={gamma}, tau={tau})"
                );
            }
            // The closed form must not do worse than the oracle point.
            let ours_val = prox_objective(ours.weights(), &pi, &g, gamma, tau);
            let oracle_val = prox_objective(&oracle, &pi, &g, gamma, tau);
            assert!(ours_val <= oracle_val + 1e-12);
        }
    }

    #[test]
    fn constrained_prox_is_identity_at_rest() {
        let pi = SimplexWeights::uniform(3);
        let out = constrained_prox_step(&pi, &[0.0; 3], 1e-12).unwrap();
        for (a, b) in out.weights().iter().zip(pi.weights()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn constrained_prox_clamps_to_floor() {
        // Inputs chosen so the unconstrained solution is (0.9, 0.1); with
        // floor 0.3 the KKT solution clamps the second coordinate.
        let pi = SimplexWeights::uniform(2);
        let p_hat = [-2.0 * (9.0f64).ln(), 0.0];
        let unconstrained = constrained_prox_step(&pi, &p_hat, 1e-12).unwrap();
        assert_abs_diff_eq!(unconstrained.weights()[0], 0.9, epsilon = 1e-12);
        let out = constrained_prox_step(&pi, &p_hat, 0.3).unwrap();
        assert_abs_diff_eq!(out.weights()[0], 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(out.weights()[1], 0.3, epsilon = 1e-12);
    }

    #[test]
    fn constrained_prox_rejects_infeasible_floor() {
        let pi = SimplexWeights::uniform(4);
        assert!(matches!(
            constrained_prox_step(&pi, &[0.0; 4], 0.3),
            Err(SimplexError::InfeasibleFloor { .. })
        ));
    }

    #[test]
    fn constrained_prox_beats_dense_grid_on_c3() {
        // Grid oracle over the triangle: our KKT solution must achieve an
        // objective value no worse than every feasible grid point.
        let pi = SimplexWeights::new(
            vec![0.6, 0.3, 0.1],
            vec![0.2, 0.5, 0.3],
            1e-12,
        )
        .unwrap();
        let p_hat = [1.5, -0.7, 0.4];
        let floor = 0.15;
        let out = constrained_prox_step(&pi, &p_hat, floor).unwrap();
        let objective = |q: &[f64]| {
            let lin: f64 = q
                .iter()
                .zip(&p_hat)
                .zip(pi.prior())
                .map(|((&qi, &ph), &pr)| qi * (ph + (qi / pr).ln()))
                .sum();
            lin + kl_divergence(q, pi.weights()).unwrap()
        };
        let ours = objective(out.weights());
        let steps = 400;
        for a in 0..=steps {
            let q0 = floor + (1.0 - 3.0 * floor) * a as f64 / steps as f64;
            let remaining = 1.0 - q0 - floor;
            if remaining < floor {
                continue;
            }
            let inner = ((remaining - floor) / (1.0 - 3.0 * floor) * steps as f64) as usize;
            for b in 0..=inner {
                let q1 = floor + (remaining - floor) * b as f64 / inner.max(1) as f64;
                let q = [q0, q1, 1.0 - q0 - q1];
                assert!(
                    ours <= objective(&q) + 1e-10,
                    "grid point {q:?} beats the KKT solution"
                );
            }
        }
        assert!(out.weights().iter().all(|&x| x >= floor - 1e-15));
    }

    #[test]
    fn refloor_keeps_feasible_vectors_bitwise() {
        let w = vec![1.0 / 3.0; 3];
        let out = refloor(w.clone(), 1e-12).unwrap();
        assert_eq!(out, w);
    }

    proptest! {
        #[test]
        fn kl_nonnegative_and_dominates_half_l2(
            raw_p in proptest::collection::vec(0.01f64..1.0, 2..10),
            raw_q in proptest::collection::vec(0.01f64..1.0, 2..10),
        ) {
            let n = raw_p.len().min(raw_q.len());
            let p = simplex_point(&raw_p[..n]);
            let q = simplex_point(&raw_q[..n]);
            let kl = kl_divergence(&p, &q).unwrap();
            prop_assert!(kl >= 0.0);
            let l2: f64 = p.iter().zip(&q).map(|(&a, &b)| (a - b) * (a - b)).sum();
            prop_assert!(kl + 1e-12 >= 0.5 * l2, "KL {} < l2^2/2 {}", kl, 0.5 * l2);
        }

        #[test]
        fn softmax_shift_invariance_is_exact_on_integers(
            logits in proptest::collection::vec(-30i32..30, 2..8),
            shift in -50i32..50,
        ) {
            let a: Vec<f64> = logits.iter().map(|&x| x as f64).collect();
            let b: Vec<f64> = logits.iter().map(|&x| (x + shift) as f64).collect();
            // Integer logits and shifts are exact in f64, so the shifted
            // differences are bitwise identical.
            prop_assert_eq!(softmax(&a).unwrap(), softmax(&b).unwrap());
        }

        #[test]
        fn prox_step_stays_on_truncated_simplex(
            raw_w in proptest::collection::vec(0.05f64..1.0, 2..6),
            g_raw in proptest::collection::vec(-6.0f64..6.0, 2..6),
            gamma in 0.01f64..2.0,
            tau in 0.0f64..3.0,
        ) {
            let n = raw_w.len().min(g_raw.len());
            let pi = SimplexWeights::new(
                simplex_point(&raw_w[..n]),
                vec![1.0 / n as f64; n],
                1e-12,
            ).unwrap();
            let out = entropic_prox_step(&pi, &g_raw[..n], gamma, tau).unwrap();
            let sum: f64 = out.weights().iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-12);
            prop_assert!(out.weights().iter().all(|&x| x >= out.floor()));
        }

        #[test]
        fn prox_step_is_monotone_in_the_direction(
            gamma in 0.05f64..1.5,
            tau in 0.0f64..2.0,
            drop in 0.1f64..4.0,
        ) {
            let pi = SimplexWeights::uniform(3);
            let base = entropic_prox_step(&pi, &[0.0, 1.0, 2.0], gamma, tau).unwrap();
            let pushed = entropic_prox_step(&pi, &[-drop, 1.0, 2.0], gamma, tau).unwrap();
            // Making a coordinate's direction more negative never lowers
            // its weight.
            prop_assert!(pushed.weights()[0] >= base.weights()[0]);
        }

        #[test]
        fn floored_fit_satisfies_kkt(
            log_w in proptest::collection::vec(-3.0f64..3.0, 2..6),
            floor_scale in 0.1f64..0.9,
        ) {
            let c = log_w.len();
            let floor = floor_scale / c as f64;
            let out = floored_fit(&log_w, floor).unwrap();
            let sum: f64 = out.iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-9);
            prop_assert!(out.iter().all(|&x| x >= floor * (1.0 - 1e-12)));
            // Free coordinates share a common ratio to w; clamped ones sit
            // below the shared ratio.
            let w = softmax(&log_w).unwrap();
            let free_ratio: Vec<f64> = out
                .iter()
                .zip(&w)
                .filter(|(o, _)| **o > floor * (1.0 + 1e-9))
                .map(|(o, wi)| o / wi)
                .collect();
            if let Some(&first) = free_ratio.first() {
                for &r in &free_ratio {
                    prop_assert!((r - first).abs() <= 1e-6 * first.abs());
                }
                for (o, wi) in out.iter().zip(&w) {
                    if *o <= floor * (1.0 + 1e-9) {
                        prop_assert!(first * wi <= floor * (1.0 + 1e-6));
                    }
                }
            }
        }
    }
}
