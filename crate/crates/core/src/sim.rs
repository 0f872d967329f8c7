//! Monte Carlo drivers.
//!
//! All randomness flows from one `u64` seed through ChaCha8 streams indexed
//! by trial (or probe chunk), so results do not depend on how work is
//! scheduled. With the `parallel` feature, [`Execution::Parallel`] runs the
//! trials on rayon's global pool; without it, it falls back to a plain loop.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::hashstream::{ElementStream, StreamKey};
use crate::trie::{PrefixTree, TreeKind, TreeStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

/// Probes handled by one RNG stream in [`chunked`].
pub const CHUNK: u64 = 1 << 16;

/// Independent generator for work item `index` under `seed`.
pub fn item_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `f(i)` for `i in 0..count`, results in index order.
pub fn map_indexed<T, F>(count: u64, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..count).into_par_iter().map(f).collect(),
        _ => (0..count).map(f).collect(),
    }
}

/// One generator per trial.
pub fn run_trials<T, F>(trials: u64, seed: u64, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut ChaCha8Rng) -> T + Sync + Send,
{
    map_indexed(trials, exec, |i| f(i, &mut item_rng(seed, i)))
}

/// Splits `total` units into chunks of [`CHUNK`], one generator each;
/// `f(rng, units)` handles one chunk.
pub fn chunked<T, F>(total: u64, seed: u64, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, u64) -> T + Sync + Send,
{
    let chunks = total.div_ceil(CHUNK);
    map_indexed(chunks, exec, |c| {
        let units = CHUNK.min(total - c * CHUNK);
        f(&mut item_rng(seed, c), units)
    })
}

/// `n` streams with distinct random digests.
pub fn random_streams<R: Rng>(key: StreamKey, n: usize, rng: &mut R) -> Vec<ElementStream> {
    let mut seen = HashSet::with_capacity(n);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let d: u64 = rng.gen();
        if seen.insert(d) {
            out.push(ElementStream::new(key, d));
        }
    }
    out
}

/// A random tree of `kind` over `n` fresh streams drawn from `rng`.
pub fn random_tree<R: Rng>(n: usize, kind: TreeKind, rng: &mut R) -> (PrefixTree, Vec<ElementStream>) {
    let key = StreamKey(rng.gen());
    let streams = random_streams(key, n, rng);
    let tree = PrefixTree::build(&streams, kind).expect("random digests are distinct");
    (tree, streams)
}

/// First stream (searching digests from `salt` upward) whose leading bits
/// equal `prefix`.
pub fn stream_with_prefix(key: StreamKey, prefix: &[bool], salt: u64) -> ElementStream {
    (salt.wrapping_mul(0x1_0000_0000)..)
        .map(|d| ElementStream::new(key, d))
        .find(|s| prefix.iter().enumerate().all(|(i, &b)| s.bit(i as u64) == b))
        .unwrap()
}

/// Stats of `trials` random trees.
pub fn tree_stats_trials(
    n: usize,
    kind: TreeKind,
    trials: u64,
    seed: u64,
    exec: Execution,
) -> Vec<TreeStats> {
    run_trials(trials, seed, exec, |_, rng| random_tree(n, kind, rng).0.stats())
}

/// Sample mean, standard deviation and standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    pub fn of<I: IntoIterator<Item = f64>>(samples: I) -> Self {
        let v: Vec<f64> = samples.into_iter().collect();
        let count = v.len();
        let mean = v.iter().sum::<f64>() / count.max(1) as f64;
        let var = if count > 1 {
            v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1) as f64
        } else {
            0.0
        };
        Self {
            count,
            mean,
            std: var.sqrt(),
        }
    }

    pub fn std_err(&self) -> f64 {
        self.std / (self.count.max(1) as f64).sqrt()
    }

    /// Distance from `target` in standard errors.
    pub fn z(&self, target: f64) -> f64 {
        (self.mean - target) / self.std_err()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedules_agree() {
        let f = |i: u64, rng: &mut ChaCha8Rng| i ^ rng.gen::<u64>();
        assert_eq!(
            run_trials(50, 7, Execution::Sequential, f),
            run_trials(50, 7, Execution::Parallel, f)
        );
        let g = |rng: &mut ChaCha8Rng, k: u64| (0..k).map(|_| rng.gen::<u32>() as u64).sum::<u64>();
        assert_eq!(
            chunked(3 * CHUNK + 5, 1, Execution::Sequential, g),
            chunked(3 * CHUNK + 5, 1, Execution::Parallel, g)
        );
        assert_eq!(chunked(3 * CHUNK + 5, 1, Execution::Parallel, |_, k| k).iter().sum::<u64>(), 3 * CHUNK + 5);
    }

    #[test]
    fn summary_basics() {
        let s = Summary::of([1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((s.std_err() - s.std / 2.0).abs() < 1e-15);
    }

    #[test]
    fn prefix_search() {
        let s = stream_with_prefix(StreamKey(1), &[true, true, false, true], 0);
        assert!(s.bit(0) && s.bit(1) && !s.bit(2) && s.bit(3));
    }
}
