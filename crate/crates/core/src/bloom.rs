//! Bloom filter baseline.

use crate::hashstream::{stream_word, StreamKey};
use crate::{Error, Result};
use std::f64::consts::LN_2;

/// `p_f = (1 - (1 - 1/m)^(kn))^k`.
pub fn bloom_fp(m: u64, n: u64, k: u64) -> f64 {
    let m = m.max(1) as f64;
    let fill = -libm::expm1((k * n) as f64 * libm::log1p(-1.0 / m));
    libm::exp(k as f64 * libm::log(fill))
}

/// Bits an optimally tuned filter needs for false-positive rate `p_f`:
/// `-n lg(p_f) / ln 2`.
pub fn bloom_bits(n: u64, p_f: f64) -> Result<f64> {
    if !(p_f > 0.0 && p_f < 1.0) {
        return Err(Error::Domain(format!("p_f must lie in (0, 1), got {p_f}")));
    }
    Ok(-(n as f64) * p_f.log2() / LN_2)
}

/// Integer hash count nearest `(m/n) ln 2`, ties broken toward lower `p_f`.
pub fn optimal_k(m: u64, n: u64) -> u64 {
    let real = m as f64 / n.max(1) as f64 * LN_2;
    let lo = (real.floor() as u64).max(1);
    let hi = (real.ceil() as u64).max(1);
    let pick = if (real - lo as f64) < (hi as f64 - real) {
        lo
    } else if (real - lo as f64) > (hi as f64 - real) {
        hi
    } else if bloom_fp(m, n, hi) < bloom_fp(m, n, lo) {
        hi
    } else {
        lo
    };
    pick.max(1)
}

#[derive(Debug, Clone)]
pub struct BloomFilter {
    words: Vec<u64>,
    m: u64,
    k: u64,
    key: StreamKey,
    n_inserted: u64,
}

impl BloomFilter {
    pub fn new(m: u64, k: u64, key: StreamKey) -> Result<Self> {
        if m == 0 || k == 0 {
            return Err(Error::Domain("bloom filter needs m >= 1 and k >= 1".into()));
        }
        Ok(Self {
            words: vec![0; m.div_ceil(64) as usize],
            m,
            k,
            key,
            n_inserted: 0,
        })
    }

    /// A filter sized for `n` elements at rate `p_f`, with optimal `k`.
    pub fn with_rate(n: u64, p_f: f64, key: StreamKey) -> Result<Self> {
        let m = bloom_bits(n, p_f)?.ceil().max(1.0) as u64;
        Self::new(m, optimal_k(m, n), key)
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn len(&self) -> u64 {
        self.n_inserted
    }

    pub fn is_empty(&self) -> bool {
        self.n_inserted == 0
    }

    /// Positions are stream blocks `1..=k` of the element, reduced mod `m`.
    fn positions(&self, digest: u64) -> impl Iterator<Item = u64> + '_ {
        (1..=self.k).map(move |j| stream_word(self.key, digest, j) % self.m)
    }

    pub fn insert(&mut self, digest: u64) {
        for p in self.positions(digest).collect::<Vec<_>>() {
            self.words[(p / 64) as usize] |= 1 << (p % 64);
        }
        self.n_inserted += 1;
    }

    pub fn contains(&self, digest: u64) -> bool {
        self.positions(digest)
            .all(|p| self.words[(p / 64) as usize] >> (p % 64) & 1 == 1)
    }

    /// Fraction of the `m` bits that are set.
    pub fn fill_ratio(&self) -> f64 {
        let ones: u64 = self.words.iter().map(|w| w.count_ones() as u64).sum();
        ones as f64 / self.m as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fp_formula() {
        assert!((bloom_fp(2, 1, 1) - 0.5).abs() < 1e-15);
        let (m, n) = (10_000u64, 1000u64);
        let k = optimal_k(m, n);
        let approx = (-(m as f64 / n as f64) * LN_2 * LN_2).exp();
        assert!((bloom_fp(m, n, k) / approx - 1.0).abs() < 0.01);
    }

    #[test]
    fn optimal_k_minimizes_fp() {
        let (m, n) = (9585u64, 1000u64);
        let k = optimal_k(m, n);
        let best = (1..40).min_by(|&a, &b| bloom_fp(m, n, a).total_cmp(&bloom_fp(m, n, b)));
        assert_eq!(Some(k), best);
    }

    #[test]
    fn bits_for_rate() {
        assert!((bloom_bits(20, 1.907e-5).unwrap() - 452.4).abs() < 0.5);
        assert!(bloom_bits(20, 0.0).is_err());
        assert!(bloom_bits(20, 1.0).is_err());
    }

    #[test]
    fn no_false_negatives() {
        let mut f = BloomFilter::new(1000, 5, StreamKey(3)).unwrap();
        assert!(f.is_empty());
        for d in 0..100u64 {
            f.insert(d * 7919);
            assert!(f.contains(d * 7919));
        }
        assert!((0..100u64).all(|d| f.contains(d * 7919)));
        assert_eq!(f.len(), 100);
    }

    #[test]
    fn empty_filter_rejects() {
        let f = BloomFilter::new(64, 3, StreamKey(0)).unwrap();
        assert!(!(0..1000u64).any(|d| f.contains(d)));
        assert!(BloomFilter::new(0, 1, StreamKey(0)).is_err());
    }
}
