//! Numerical kernels shared by the recurrences and the infinite sums.

use crate::{Error, Result};

pub const LOG2_E: f64 = std::f64::consts::LOG2_E;
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Base-2 logarithm of `C(n, k)`.
///
/// Small `min(k, n - k)` is summed term by term; everything else goes
/// through log-gamma so that no integer product can overflow.
pub fn log_binomial(n: u64, k: u64) -> Result<f64> {
    if k > n {
        return Err(Error::Domain(format!("C({n}, {k}) requires k <= n")));
    }
    Ok(lg_binomial_unchecked(n, k))
}

#[inline]
pub(crate) fn lg_binomial_unchecked(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    if k == 0 {
        return 0.0;
    }
    if k <= 64 {
        let mut ln = 0.0;
        for i in 0..k {
            ln += libm::log((n - i) as f64 / (i + 1) as f64);
        }
        return ln * LOG2_E;
    }
    let m = n - k;
    let (nf, kf, mf) = (n as f64, k as f64, m as f64);
    if m < 10_000 {
        return (libm::lgamma(nf + 1.0) - libm::lgamma(kf + 1.0) - libm::lgamma(mf + 1.0)) * LOG2_E;
    }
    // ln(n!) - ln(m!) through Stirling, arranged so nothing of size n ln n cancels
    let stirling_tail = |x: f64| {
        let x2 = x * x;
        1.0 / (12.0 * x) - 1.0 / (360.0 * x * x2) + 1.0 / (1260.0 * x * x2 * x2)
    };
    let ratio = -(mf + 0.5) * libm::log1p(-kf / nf) + kf * libm::log(nf) - kf;
    let falling = ratio + stirling_tail(nf) - stirling_tail(mf);
    (falling - libm::lgamma(kf + 1.0)) * LOG2_E
}

/// `lg(n!)` via log-gamma.
pub fn lg_factorial(n: u64) -> f64 {
    libm::lgamma(n as f64 + 1.0) * LOG2_E
}

/// Table of `lg(i!)` for `i <= cap`, used to build binomial weight rows.
#[derive(Debug, Clone)]
pub(crate) struct LgFactorials(Vec<f64>);

impl LgFactorials {
    pub fn new(cap: usize) -> Self {
        Self((0..=cap).map(|i| lg_factorial(i as u64)).collect())
    }

    /// `C(n, k) / 2^shift` for `k = 0..=n`.
    pub fn weights(&self, n: usize, shift: f64) -> Vec<f64> {
        let f = &self.0;
        (0..=n)
            .map(|k| libm::exp2(f[n] - f[k] - f[n - k] - shift))
            .collect()
    }
}

/// Split entropy `h_n` of the Binomial(n, 1/2) left/right division, in bits.
pub fn split_entropy(n: u64) -> f64 {
    let nf = n as f64;
    let mut h = 0.0;
    for k in 0..=n {
        let lp = lg_binomial_unchecked(n, k) - nf;
        if lp < -1100.0 {
            continue;
        }
        h -= libm::exp2(lp) * lp;
    }
    h
}

/// `h'_n`: the two degree-1 outcomes merged into one symbol.
pub fn reduced_split_entropy(n: u64) -> Result<f64> {
    if n < 1 {
        return Err(Error::Domain("reduced split entropy needs n >= 1".into()));
    }
    Ok(split_entropy(n) - libm::exp2(1.0 - n as f64))
}

/// `(1 - 2^-d)^m`, with `0^0 = 1`.
#[inline]
pub(crate) fn miss_prob(d: u64, m: u64) -> f64 {
    if d == 0 {
        return if m == 0 { 1.0 } else { 0.0 };
    }
    libm::exp(m as f64 * libm::log1p(-libm::exp2(-(d as f64))))
}

/// `1 - (1 - 2^-d)^m`, accurate when the result is tiny.
#[inline]
pub(crate) fn hit_prob(d: u64, m: u64) -> f64 {
    if d == 0 {
        return if m == 0 { 0.0 } else { 1.0 };
    }
    -libm::expm1(m as f64 * libm::log1p(-libm::exp2(-(d as f64))))
}

/// Stopping rule for sums over depth: the terms are not monotone around
/// `d = lg n`, so the tolerance only applies well past it.
#[inline]
pub(crate) fn tail_done(d: u64, n: u64, term: f64, sum: f64, tol: f64) -> bool {
    (d as f64) > (n.max(1) as f64).log2() + 10.0 && term.abs() <= tol * sum.abs().max(1e-300)
        || d > 4000
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_binomials() {
        assert_eq!(log_binomial(2, 1).unwrap(), 1.0);
        assert!((log_binomial(4, 2).unwrap() - 6f64.log2()).abs() < 1e-14);
        assert_eq!(log_binomial(7, 0).unwrap(), 0.0);
        assert!(log_binomial(3, 4).is_err());
    }

    #[test]
    fn both_binomial_paths_agree() {
        // k = 64 takes the product path, k = 65 the log-gamma path
        for n in [200u64, 10_000, 1 << 20, 1 << 40] {
            for k in [63u64, 64, 65, 66, 5000].into_iter().filter(|&k| k <= n / 2) {
                let direct: f64 = (0..k)
                    .map(|i| ((n - i) as f64 / (i + 1) as f64).ln())
                    .sum::<f64>()
                    * LOG2_E;
                let v = lg_binomial_unchecked(n, k);
                assert!((v - direct).abs() <= 1e-12 * direct, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn split_entropy_table_values() {
        assert_eq!(split_entropy(0), 0.0);
        assert!((split_entropy(1) - 1.0).abs() < 1e-15);
        assert!((split_entropy(2) - 1.5).abs() < 1e-15);
        assert!((split_entropy(3) - 1.811).abs() < 5e-4);
        assert!((split_entropy(10) - 2.706).abs() < 5e-4);
    }

    #[test]
    fn reduced_split_entropy_values() {
        assert!((reduced_split_entropy(2).unwrap() - 1.0).abs() < 1e-15);
        assert!((reduced_split_entropy(3).unwrap() - 1.561).abs() < 5e-4);
        assert!((reduced_split_entropy(10).unwrap() - 2.704).abs() < 5e-4);
        assert!(reduced_split_entropy(0).is_err());
        for n in 1..40 {
            assert_eq!(
                reduced_split_entropy(n).unwrap(),
                split_entropy(n) - 2f64.powi(1 - n as i32)
            );
        }
    }

    #[test]
    fn probabilities_at_extremes() {
        assert_eq!(miss_prob(0, 0), 1.0);
        assert_eq!(hit_prob(0, 3), 1.0);
        let tiny = hit_prob(80, 10);
        assert!((tiny / (10.0 * 2f64.powi(-80)) - 1.0).abs() < 1e-12);
    }
}
