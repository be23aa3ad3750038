//! Geometric-rate estimation for Lyapunov series.
//!
//! A linearly convergent run satisfies `phi_k <= rho^k phi_0`, so
//! `ln phi_k` is (up to transients and the floating-point floor) an
//! affine function of `k`. The fit:
//!
//! 1. truncates the series at the first entry at or below [`PHI_FLOOR`],
//!    where roundoff of the Lyapunov evaluation dominates,
//! 2. discards the first tenth of what remains as transient,
//! 3. least-squares fits `ln phi` against `k` and reports `exp(slope)`
//!    together with the coefficient of determination.

use super::DiagnosticsError;

/// Below this the Lyapunov evaluation is roundoff, not signal.
pub const PHI_FLOOR: f64 = 1e-14;

/// Minimum number of input points for a meaningful fit.
const MIN_POINTS: usize = 10;

#[derive(Debug, Clone, Copy)]
pub struct RateFit {
    /// Estimated per-iteration factor `exp(slope)`; below one means
    /// decay, one means stagnation, above one growth.
    pub rate: f64,
    /// Coefficient of determination of the log-linear fit.
    pub r_squared: f64,
    /// Points actually used after truncation and transient discard.
    pub used: usize,
}

/// Fits `phi_k ~ C rate^k` on `(k, phi_k)` pairs with strictly
/// increasing `k`.
pub fn fit_geometric_rate(series: &[(usize, f64)]) -> Result<RateFit, DiagnosticsError> {
    if series.len() < MIN_POINTS {
        return Err(DiagnosticsError::NeedMoreData {
            have: series.len(),
            need: MIN_POINTS,
        });
    }
    // Truncate at the floor: values in [0, PHI_FLOOR] are roundoff and
    // end the usable window. Negative values are not a floor hit, they
    // are invalid data, so they pass through to the positivity check.
    let kept: Vec<(usize, f64)> = series
        .iter()
        .copied()
        .take_while(|&(_, phi)| !(0.0..=PHI_FLOOR).contains(&phi))
        .collect();
    let skip = kept.len().div_ceil(10);
    let window = &kept[skip.min(kept.len())..];
    if window.len() < 2 {
        return Err(DiagnosticsError::NeedMoreData {
            have: window.len(),
            need: 2,
        });
    }
    for &(k, phi) in window {
        if phi <= 0.0 {
            return Err(DiagnosticsError::NonPositivePhi { k, value: phi });
        }
    }

    let n = window.len() as f64;
    let (mut sx, mut sy) = (0.0, 0.0);
    for &(k, phi) in window {
        sx += k as f64;
        sy += phi.ln();
    }
    let (x_bar, y_bar) = (sx / n, sy / n);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(k, phi) in window {
        let dx = k as f64 - x_bar;
        let dy = phi.ln() - y_bar;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    // A (numerically) constant series is a perfect fit with slope zero;
    // without the guard, roundoff in the mean would report R^2 = 0.
    let degenerate = syy <= n * (1e-12 * y_bar.abs().max(1.0)).powi(2);
    let r_squared = if degenerate {
        1.0
    } else {
        let ss_res = syy - sxy * sxy / sxx;
        1.0 - (ss_res / syy).max(0.0)
    };
    Ok(RateFit {
        rate: slope.exp(),
        r_squared,
        used: window.len(),
    })
}
