//! Probability models for the left-count `k` of a node holding `n` streams.

use crate::analytic::kernels::{lg_binomial_unchecked, lg_factorial};
use crate::codec::range_coder::{Decoder, Encoder};
use crate::trie::TreeKind;
use crate::{Error, Result};

/// Counts up to this size read `lg C(n, k)` from a factorial table.
const TABLE_CAP: u64 = 1 << 22;

/// Flat quantized distribution of the split of one node.
///
/// `weights[k]` is the weight of left count `k`. For reduced trees index 0
/// stands for the merged degree-1 symbol and index `n` is absent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitModel {
    pub n: u32,
    pub kind: TreeKind,
    pub scale_bits: u32,
    pub weights: Vec<u32>,
}

impl SplitModel {
    pub fn total(&self) -> u64 {
        self.weights.iter().map(|&w| w as u64).sum()
    }

    /// `-lg` of the quantized probability of symbol `k`.
    pub fn cost_bits(&self, k: usize) -> f64 {
        self.scale_bits as f64 - (self.weights[k] as f64).log2()
    }
}

/// Largest-remainder quantization of the split pmf to `2^scale_bits`.
///
/// Each symbol gets weight 1 up front and the rest of the scale is shared in
/// proportion to the target pmf; leftover units go to the largest fractional
/// parts, lower `k` first on ties.
pub fn quantize_split(n: u32, kind: TreeKind, scale_bits: u32) -> Result<SplitModel> {
    if n < 2 {
        return Err(Error::Domain(format!("split model needs n >= 2, got {n}")));
    }
    check_scale(scale_bits)?;
    let total = 1u64 << scale_bits;
    let symbols = if kind == TreeKind::Reduced { n as u64 } else { n as u64 + 1 };
    if symbols > total {
        return Err(Error::Capacity { n: n as u64, cap: total - 1 });
    }
    let nf = n as u64;
    let target: Vec<f64> = (0..symbols)
        .map(|k| match (kind, k) {
            (TreeKind::Reduced, 0) => libm::exp2(1.0 - n as f64),
            _ => libm::exp2(lg_binomial_unchecked(nf, k) - n as f64),
        })
        .collect();
    let sum: f64 = target.iter().sum();
    let spare = (total - symbols) as f64;
    let mut weights = Vec::with_capacity(symbols as usize);
    let mut rema = Vec::with_capacity(symbols as usize);
    for (k, &t) in target.iter().enumerate() {
        let share = t / sum * spare;
        let fl = share.floor();
        weights.push(1 + fl as u32);
        rema.push((share - fl, k));
    }
    let assigned: u64 = weights.iter().map(|&w| w as u64).sum();
    rema.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, k) in rema.iter().take((total - assigned) as usize) {
        weights[k] += 1;
    }
    Ok(SplitModel { n, kind, scale_bits, weights })
}

pub(crate) fn check_scale(scale_bits: u32) -> Result<()> {
    if (1..=20).contains(&scale_bits) {
        Ok(())
    } else {
        Err(Error::Domain(format!("scale_bits must be in 1..=20, got {scale_bits}")))
    }
}

/// `round_half_even(p * 2^s)` clamped to `[1, 2^s - 1]`.
pub fn quantize_prob(p: f64, scale_bits: u32) -> u32 {
    let top = (1u32 << scale_bits) - 1;
    let w = (p * (1u64 << scale_bits) as f64).round_ties_even();
    if w.is_nan() {
        return 1 << (scale_bits - 1);
    }
    (w.max(1.0) as u32).min(top)
}

/// Binary decisions for node splits.
///
/// `k` is found by bisection of its admissible range, each step coding
/// whether `k <= mid` with the binomial mass of the lower half. Reduced trees
/// first code whether the node is degree 1.
#[derive(Debug, Clone)]
pub struct SplitCoder {
    lg_fact: Vec<f64>,
    scale_bits: u32,
}

impl SplitCoder {
    /// A coder for nodes holding at most `n_max` streams.
    pub fn new(n_max: u64, scale_bits: u32) -> Result<Self> {
        check_scale(scale_bits)?;
        let cap = n_max.min(TABLE_CAP);
        Ok(Self {
            lg_fact: (0..=cap).map(lg_factorial).collect(),
            scale_bits,
        })
    }

    pub fn scale_bits(&self) -> u32 {
        self.scale_bits
    }

    #[inline]
    fn lg_binomial(&self, n: u64, k: u64) -> f64 {
        match self.lg_fact.get(n as usize) {
            Some(&f) => f - self.lg_fact[k as usize] - self.lg_fact[(n - k) as usize],
            None => lg_binomial_unchecked(n, k),
        }
    }

    /// Weight of `k <= mid` within `[lo, hi]`.
    fn lower_half_weight(&self, n: u64, lo: u64, mid: u64, hi: u64) -> u32 {
        let peak = (n / 2).clamp(lo, hi);
        let reference = self.lg_binomial(n, peak);
        let mass = |a: u64, b: u64| -> f64 {
            (a..=b)
                .map(|k| libm::exp2(self.lg_binomial(n, k) - reference))
                .sum()
        };
        let below = mass(lo, mid);
        let above = mass(mid + 1, hi);
        quantize_prob(below / (below + above), self.scale_bits)
    }

    fn degree1_weight(&self, n: u64) -> u32 {
        quantize_prob(libm::exp2(1.0 - n as f64), self.scale_bits)
    }

    /// Code left count `k` of a node with `n >= 2` streams. For reduced
    /// trees `k = 0` or `k = n` codes the degree-1 symbol.
    pub fn encode(&self, enc: &mut Encoder, n: u32, k: u32, kind: TreeKind) {
        debug_assert!(n >= 2 && k <= n);
        let (n, k) = (n as u64, k as u64);
        let s = self.scale_bits;
        let (mut lo, mut hi) = (0, n);
        if kind == TreeKind::Reduced {
            let degree1 = k == 0 || k == n;
            let w = self.degree1_weight(n);
            enc.encode(!degree1, w, s);
            if degree1 {
                return;
            }
            (lo, hi) = (1, n - 1);
        }
        while lo < hi {
            let mid = (lo + hi) / 2;
            let upper = k > mid;
            enc.encode(upper, self.lower_half_weight(n, lo, mid, hi), s);
            if upper {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
    }

    /// Inverse of [`SplitCoder::encode`]; the reduced degree-1 symbol comes
    /// back as 0.
    pub fn decode(&self, dec: &mut Decoder, n: u32, kind: TreeKind) -> Result<u32> {
        let n = n as u64;
        let s = self.scale_bits;
        let (mut lo, mut hi) = (0, n);
        if kind == TreeKind::Reduced {
            if !dec.decode(self.degree1_weight(n), s)? {
                return Ok(0);
            }
            (lo, hi) = (1, n - 1);
        }
        while lo < hi {
            let mid = (lo + hi) / 2;
            if dec.decode(self.lower_half_weight(n, lo, mid, hi), s)? {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        Ok(lo as u32)
    }
}

/// One-off split coding with a freshly built table.
pub fn encode_split_bisect(
    enc: &mut Encoder,
    n: u32,
    k: u32,
    kind: TreeKind,
    scale_bits: u32,
) -> Result<()> {
    if n < 2 || k > n {
        return Err(Error::Domain(format!("split k = {k} of n = {n}")));
    }
    SplitCoder::new(n as u64, scale_bits)?.encode(enc, n, k, kind);
    Ok(())
}
