//! Smooth approximations and the fitted oscillation term.

use super::kernels::{EULER_GAMMA, LOG2_E};
use crate::{Error, Result};
use std::f64::consts::{E, PI};

/// Limit of `D_n - lg n`: `1/2 + gamma lg e`.
pub const DEPTH_OFFSET: f64 = 0.5 + EULER_GAMMA * LOG2_E;

/// Limit of `F_n` for the minimal tree: `lg(e) / 2`.
pub const FALSE_POSITIVE_LIMIT: f64 = 0.5 * LOG2_E;

/// Asymptotic degree-1 nodes per element, `lg(e/2)`.
pub fn degree1_rate() -> f64 {
    (E / 2.0).log2()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxParams {
    /// Bits per element, `1/2 + (1 + gamma) lg e`.
    pub alpha: f64,
    /// Amplitude of the `n sin(2 pi lg n + delta)` term.
    pub epsilon: f64,
    /// Phase of the oscillation, radians.
    pub delta: f64,
    pub gamma: f64,
}

impl Default for ApproxParams {
    fn default() -> Self {
        Self {
            alpha: 0.5 + (1.0 + EULER_GAMMA) * LOG2_E,
            epsilon: 1.6e-6,
            delta: 0.88,
            gamma: EULER_GAMMA,
        }
    }
}

impl ApproxParams {
    /// Asymptotic bits per element of the reduced tree, `alpha - lg(e/2)`.
    pub fn reduced_rate(&self) -> f64 {
        self.alpha - degree1_rate()
    }

    fn oscillation(&self, n: f64) -> f64 {
        self.epsilon * n * (2.0 * PI * n.log2() + self.delta).sin()
    }
}

/// Gaussian approximation of the split entropy, `1/2 lg(pi e n / 2)`.
pub fn approx_split_entropy(n: u64) -> f64 {
    0.5 * (PI * E * n as f64 / 2.0).log2()
}

/// `alpha n - 1 - 1/2 lg(e pi / 2) - 1/2 lg n`, without oscillation.
pub fn solved_tree_entropy(n: u64, p: &ApproxParams) -> f64 {
    let nf = n as f64;
    p.alpha * nf - 1.0 - 0.5 * (E * PI / 2.0).log2() - 0.5 * nf.log2()
}

/// Smooth part plus the fitted oscillation.
pub fn approx_tree_entropy(n: u64, p: &ApproxParams) -> Result<f64> {
    if n < 1 {
        return Err(Error::Domain("approximate tree entropy needs n >= 1".into()));
    }
    Ok(solved_tree_entropy(n, p) + p.oscillation(n as f64))
}

/// `lg n + (alpha - lg e) - lg(e)/(2n)`: the non-oscillating part of the
/// Stirling-based depth approximation.
pub fn smooth_avg_depth(n: u64, p: &ApproxParams) -> f64 {
    let nf = n as f64;
    nf.log2() + p.alpha - LOG2_E - LOG2_E / (2.0 * nf)
}

/// Stirling-based depth approximation including the oscillation.
pub fn approx_avg_depth_oscillating(n: u64, p: &ApproxParams) -> f64 {
    smooth_avg_depth(n, p) + p.epsilon * (2.0 * PI * (n as f64).log2() + p.delta).sin()
}

/// Truncated Euler-Maclaurin approximation of `D_{n+1}` (note the shift).
///
/// `terms` selects how many of the `1/(2n)`, `-1/(12n^2)`, `1/(120n^4)`
/// corrections are kept.
pub fn approx_avg_depth(n: u64, terms: u32) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain("Euler-Maclaurin depth needs n >= 2".into()));
    }
    if terms > 3 {
        return Err(Error::Domain(format!(
            "only 3 correction terms are defined (asked for {terms}); the series diverges"
        )));
    }
    let nf = n as f64;
    let corrections = [1.0 / (2.0 * nf), -1.0 / (12.0 * nf * nf), 1.0 / (120.0 * nf.powi(4))];
    let series: f64 = EULER_GAMMA + corrections[..terms as usize].iter().sum::<f64>();
    Ok(0.5 + nf.log2() + LOG2_E * series)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_matches_closed_form() {
        let p = ApproxParams::default();
        assert!((p.alpha - 2.77544121816583).abs() < 1e-12);
        assert!((DEPTH_OFFSET - 1.3327461772768672).abs() < 1e-15);
        assert!((p.reduced_rate() - 2.332746177).abs() < 1e-9);
        assert!((degree1_rate() - 0.442695).abs() < 1e-6);
    }

    #[test]
    fn gaussian_split_entropy() {
        assert!((approx_split_entropy(2) - 1.547).abs() < 5e-4);
        assert!((approx_split_entropy(5) - 2.208).abs() < 5e-4);
        assert!((approx_split_entropy(10) - 2.708).abs() < 5e-4);
    }

    #[test]
    fn oscillating_tree_entropy() {
        let p = ApproxParams::default();
        assert!((approx_tree_entropy(2, &p).unwrap() - 3.004).abs() < 5e-4);
        assert!((approx_tree_entropy(5, &p).unwrap() - 10.67).abs() < 5e-3);
        assert!((approx_tree_entropy(10, &p).unwrap() - 24.05).abs() < 5e-3);
        assert!(approx_tree_entropy(0, &p).is_err());
    }

    #[test]
    fn euler_maclaurin_limits() {
        let n = 1_000_000;
        let v = approx_avg_depth(n, 1).unwrap();
        assert!((v - (n as f64).log2() - 1.33275).abs() < 1e-4);
        assert!(approx_avg_depth(10, 4).is_err());
        assert!(approx_avg_depth(1, 0).is_err());
        let n2 = approx_avg_depth(2, 3).unwrap();
        let expect = 0.5 + 1.0 + LOG2_E * (EULER_GAMMA + 0.25 - 1.0 / 48.0 + 1.0 / 1920.0);
        assert!((n2 - expect).abs() < 1e-15);
    }
}
