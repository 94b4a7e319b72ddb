//! Side-length thresholds for periodic plans and the search for the
//! discretisation parameter `K`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

/// Largest K tried before giving up.
pub(crate) const K_MAX: usize = 1_000_000;
/// Strict inequalities of the limit argument must hold with this relative margin.
pub(crate) const K_MARGIN: f64 = 1.01;

/// `Σ_{k=0}^{⌊upper⌋} sin(η/2 + kη)`; empty when `upper < 0`.
fn sin_sum(eta: f64, upper: f64) -> f64 {
    if upper < 0.0 {
        return 0.0;
    }
    (0..=upper.floor() as usize)
        .map(|k| (eta / 2.0 + k as f64 * eta).sin())
        .sum()
}

pub(crate) fn odd_angle(n: usize) -> f64 {
    FRAC_PI_2 + (1.0 / (n as f64 - 1.0)).asin()
}

/// True when the two-block disorder construction applies (otherwise three blocks).
pub(crate) fn two_block_case(n: usize, eps: f64) -> bool {
    n.is_multiple_of(2) || eps > 1.0 / n as f64
}

/// Minimum side length for the periodic disorder construction.
pub fn disorder_threshold(eta: f64, v: f64, r_max: f64, n: usize, eps: f64) -> f64 {
    if two_block_case(n, eps) {
        span_threshold(eta, v, r_max)
    } else {
        3.0 * r_max + 2.0 * v * sin_sum(eta, odd_angle(n) / eta - 0.5)
    }
}

/// Minimum side length for the periodic span construction (and the two-block disorder case).
pub fn span_threshold(eta: f64, v: f64, r_max: f64) -> f64 {
    2.0 * r_max + 2.0 * v * sin_sum(eta, FRAC_PI_2 / eta - 0.5)
}

/// Chosen K together with the quantities that certified it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KSearch {
    pub k: usize,
    /// Largest vertical drift from the gathering line over the plan.
    pub excursion: f64,
    /// Worst-case order parameter at the horizon (disorder plans), else 0.
    pub phi_bound: f64,
}

/// Smallest `K` in `[start, K_MAX]` accepted by `check`.
pub(crate) fn search_k(start: usize, check: impl Fn(usize) -> Option<KSearch>) -> Option<KSearch> {
    (start.max(4)..=K_MAX).find_map(check)
}

/// Upper bound on `v·sin θ` at steer step `m >= 1` when headings start at most
/// `η/2` and grow by at most `η` per step.
pub(crate) fn steer_rise(v: f64, eta: f64, steer_steps: usize) -> f64 {
    (1..steer_steps)
        .map(|m| {
            let a = eta / 2.0 + m as f64 * eta;
            if a >= FRAC_PI_2 {
                v
            } else {
                v * a.sin()
            }
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn threshold_example() {
        let th = span_threshold(0.6, 0.01, 1.0);
        let expected = 2.0 + 0.02 * (0.3f64.sin() + 0.9f64.sin() + 1.5f64.sin());
        assert_abs_diff_eq!(th, expected, epsilon = 1e-15);
        assert_abs_diff_eq!(th, 2.0415, epsilon = 1e-4);
        assert_eq!(disorder_threshold(0.6, 0.01, 1.0, 10, 0.1), th);
    }

    #[test]
    fn odd_threshold_uses_three_radii() {
        let th = disorder_threshold(0.6, 0.01, 1.0, 5, 0.1);
        assert!(th > 3.0 && th < 3.1);
        // ε > 1/n falls back to the two-block case
        assert_eq!(disorder_threshold(0.6, 0.01, 1.0, 5, 0.3), span_threshold(0.6, 0.01, 1.0));
    }

    #[test]
    fn empty_sum_for_large_eta() {
        assert_eq!(span_threshold(4.0, 0.01, 1.0), 2.0);
    }
}
