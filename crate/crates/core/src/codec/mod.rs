//! Serialized prefix trees.
//!
//! Layout: `"HPT1"`, version byte (1), kind byte (0 minimal, 1 min-depth,
//! 2 reduced), scale-bits byte, LEB128 `n`, LEB128 `d` for min-depth trees,
//! then the range-coded payload to end of input.
//!
//! The payload walks the tree in preorder. Nodes with `n >= 2` streams code
//! their left count by bisection; single-stream nodes above the minimum depth
//! code their branch bit at probability 1/2; leaves code nothing.

pub mod range_coder;
pub mod split;

use std::io::{Read, Write};

use rand::Rng;

use crate::sim::{self, Execution, Summary};
use crate::trie::{Node, NodeId, PrefixTree, TreeKind, MAX_DEPTH};
use crate::{Error, Result};

pub use range_coder::{Decoder, Encoder};
pub use split::{encode_split_bisect, quantize_prob, quantize_split, SplitCoder, SplitModel};

pub const MAGIC: &[u8; 4] = b"HPT1";
pub const VERSION: u8 = 1;
pub const DEFAULT_SCALE_BITS: u32 = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedTree {
    pub kind: TreeKind,
    pub n: u64,
    pub scale_bits: u32,
    pub payload: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncodeReport {
    pub payload_bits: u64,
    /// Ideal code length of the decisions, before coder rounding and flush.
    pub model_bits: f64,
}

impl EncodedTree {
    pub fn payload_bits(&self) -> u64 {
        self.payload.len() as u64 * 8
    }

    pub fn header_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16);
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.push(match self.kind {
            TreeKind::Minimal => 0,
            TreeKind::MinDepth(_) => 1,
            TreeKind::Reduced => 2,
        });
        out.push(self.scale_bits as u8);
        leb128::write::unsigned(&mut out, self.n).unwrap();
        if let TreeKind::MinDepth(d) = self.kind {
            leb128::write::unsigned(&mut out, d as u64).unwrap();
        }
        out
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.header_bytes();
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Format(m.into());
        if bytes.len() < 7 {
            return Err(if bytes.len() >= 4 && &bytes[..4] != MAGIC {
                bad("bad magic")
            } else {
                Error::Truncated
            });
        }
        if &bytes[..4] != MAGIC {
            return Err(bad("bad magic"));
        }
        if bytes[4] != VERSION {
            return Err(Error::Format(format!("unsupported version {}", bytes[4])));
        }
        let kind_byte = bytes[5];
        let scale_bits = bytes[6] as u32;
        split::check_scale(scale_bits).map_err(|_| bad("bad scale bits"))?;
        let mut rest = &bytes[7..];
        let mut varint = |what: &str| -> Result<u64> {
            leb128::read::unsigned(&mut rest).map_err(|e| match e {
                leb128::read::Error::IoError(_) => Error::Truncated,
                _ => Error::Format(format!("bad varint for {what}")),
            })
        };
        let n = varint("n")?;
        if n == 0 || n > u32::MAX as u64 {
            return Err(Error::Format(format!("element count {n} out of range")));
        }
        let kind = match kind_byte {
            0 => TreeKind::Minimal,
            1 => {
                let d = varint("d")?;
                if d == 0 || d > u32::MAX as u64 {
                    return Err(Error::Format(format!("min depth {d} out of range")));
                }
                TreeKind::MinDepth(d as u32)
            }
            2 => TreeKind::Reduced,
            k => return Err(Error::Format(format!("unknown kind {k}"))),
        };
        Ok(Self {
            kind,
            n,
            scale_bits,
            payload: rest.to_vec(),
        })
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        Self::from_bytes(&buf)
    }
}

pub fn encode(tree: &PrefixTree, scale_bits: u32) -> Result<EncodedTree> {
    encode_with_report(tree, scale_bits).map(|(e, _)| e)
}

pub fn encode_with_report(tree: &PrefixTree, scale_bits: u32) -> Result<(EncodedTree, EncodeReport)> {
    let kind = tree.kind();
    let coder = SplitCoder::new(tree.len(), scale_bits)?;
    let d = kind.min_depth();
    let half = 1u32 << (scale_bits - 1);
    let mut enc = Encoder::new();
    let mut stack = vec![(NodeId::ROOT, 0u32)];
    while let Some((id, depth)) = stack.pop() {
        let node = tree.node(id);
        if node.count == 1 {
            if depth >= d {
                if !node.is_leaf() {
                    return Err(Error::MalformedTree(format!("node {} below depth {d} has a child", id.0)));
                }
                continue;
            }
            let (side, child) = match node.children {
                [Some(c), None] => (false, c),
                [None, Some(c)] => (true, c),
                _ => return Err(Error::MalformedTree(format!("extension node {} is not a chain", id.0))),
            };
            enc.encode(side, half, scale_bits);
            stack.push((child, depth + 1));
            continue;
        }
        let left = node.children[0].map_or(0, |c| tree.node(c).count);
        let k = if node.wildcard { 0 } else { left };
        coder.encode(&mut enc, node.count, k, kind);
        if let Some(r) = node.children[1] {
            stack.push((r, depth + 1));
        }
        if let Some(l) = node.children[0] {
            stack.push((l, depth + 1));
        }
    }
    let model_bits = enc.model_bits();
    let payload = enc.finish();
    let report = EncodeReport {
        payload_bits: payload.len() as u64 * 8,
        model_bits,
    };
    let encoded = EncodedTree {
        kind,
        n: tree.len(),
        scale_bits,
        payload,
    };
    Ok((encoded, report))
}

/// Rebuild the tree. Reduced wildcards come back with their child on the left.
pub fn decode(encoded: &EncodedTree) -> Result<PrefixTree> {
    let kind = encoded.kind;
    let s = encoded.scale_bits;
    split::check_scale(s)?;
    let n = u32::try_from(encoded.n)
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| Error::Format(format!("element count {} out of range", encoded.n)))?;
    let coder = SplitCoder::new(n as u64, s)?;
    let d = kind.min_depth();
    let split_depth_limit = MAX_DEPTH;
    let mut dec = Decoder::new(&encoded.payload)?;
    let mut nodes: Vec<Node> = Vec::new();
    let mut stack: Vec<(Option<(NodeId, usize)>, u32, u32)> = vec![(None, n, 0)];
    while let Some((parent, count, depth)) = stack.pop() {
        let id = NodeId(nodes.len() as u32);
        nodes.push(Node {
            children: [None, None],
            count,
            wildcard: false,
        });
        if let Some((p, side)) = parent {
            nodes[p.index()].children[side] = Some(id);
        }
        if count == 1 {
            if depth < d {
                let side = dec.decode(1 << (s - 1), s)? as usize;
                stack.push((Some((id, side)), 1, depth + 1));
            }
            continue;
        }
        if depth >= split_depth_limit {
            return Err(Error::Format(format!("streams still unsplit at depth {depth}")));
        }
        let k = coder.decode(&mut dec, count, kind)?;
        if kind == TreeKind::Reduced && k == 0 {
            nodes[id.index()].wildcard = true;
            stack.push((Some((id, 0)), count, depth + 1));
            continue;
        }
        if k < count {
            stack.push((Some((id, 1)), count - k, depth + 1));
        }
        if k > 0 {
            stack.push((Some((id, 0)), k, depth + 1));
        }
    }
    if dec.remaining() != 0 {
        return Err(Error::Format(format!("{} trailing payload bytes", dec.remaining())));
    }
    PrefixTree::from_parts(nodes, kind).map_err(|e| Error::Format(e.to_string()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub n: usize,
    pub kind: TreeKind,
    pub payload_bits: Summary,
    pub model_bits: Summary,
}

impl RateReport {
    pub fn bits_per_element(&self) -> f64 {
        self.payload_bits.mean / self.n as f64
    }

    pub fn bits_per_element_std(&self) -> f64 {
        self.payload_bits.std / self.n as f64
    }
}

/// Encode `trials` random trees of `n` elements and summarize their sizes.
pub fn measure_rate(
    n: usize,
    kind: TreeKind,
    trials: u64,
    seed: u64,
    scale_bits: u32,
    exec: Execution,
) -> Result<RateReport> {
    if trials == 0 || n == 0 {
        return Err(Error::Domain("measure_rate needs n >= 1 and trials >= 1".into()));
    }
    split::check_scale(scale_bits)?;
    let reports = sim::run_trials(trials, seed, exec, |_, rng| {
        let (tree, _) = sim::random_tree(n, kind, rng);
        encode_with_report(&tree, scale_bits).map(|(_, r)| r)
    });
    let reports = reports.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(RateReport {
        n,
        kind,
        payload_bits: Summary::of(reports.iter().map(|r| r.payload_bits as f64)),
        model_bits: Summary::of(reports.iter().map(|r| r.model_bits)),
    })
}

/// A random tree and its encoding, for fixtures and benches.
pub fn random_encoded<R: Rng>(n: usize, kind: TreeKind, scale_bits: u32, rng: &mut R) -> Result<(PrefixTree, EncodedTree)> {
    let (tree, _) = sim::random_tree(n, kind, rng);
    let e = encode(&tree, scale_bits)?;
    Ok((tree, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hashstream::{ElementStream, StreamKey};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn round_trip(tree: &PrefixTree) -> EncodedTree {
        let e = encode(tree, 16).unwrap();
        let bytes = e.to_bytes();
        let back = EncodedTree::from_bytes(&bytes).unwrap();
        assert_eq!(back, e);
        let t = decode(&back).unwrap();
        let expect = if tree.kind() == TreeKind::Reduced {
            tree.erase_directions()
        } else {
            tree.clone()
        };
        assert_eq!(t, expect);
        e
    }

    #[test]
    fn single_element() {
        let key = StreamKey(3);
        let s = [ElementStream::new(key, 9)];
        let t = PrefixTree::build(&s, TreeKind::Minimal).unwrap();
        let e = round_trip(&t);
        assert!(e.payload.len() <= 5);
        let t = PrefixTree::build(&s, TreeKind::MinDepth(12)).unwrap();
        let (e, r) = encode_with_report(&t, 16).unwrap();
        assert!((r.model_bits - 12.0).abs() < 1e-9);
        assert_eq!(decode(&e).unwrap(), t);
    }

    #[test]
    fn random_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for i in 0..120 {
            let n = rng.gen_range(1..=150);
            let kind = match i % 3 {
                0 => TreeKind::Minimal,
                1 => TreeKind::MinDepth(rng.gen_range(1..=14)),
                _ => TreeKind::Reduced,
            };
            let (t, _) = sim::random_tree(n, kind, &mut rng);
            round_trip(&t);
        }
    }

    #[test]
    fn min_depth_leaves_come_back_deep() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (t, _) = sim::random_tree(50, TreeKind::MinDepth(9), &mut rng);
        let back = decode(&encode(&t, 16).unwrap()).unwrap();
        assert!(back.stats().leaf_depth_histogram.keys().all(|&d| d >= 9));
    }

    #[test]
    fn corruption() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (t, _) = sim::random_tree(60, TreeKind::Minimal, &mut rng);
        let bytes = encode(&t, 16).unwrap().to_bytes();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(EncodedTree::from_bytes(&bad), Err(Error::Format(_))));
        let mut bad = bytes.clone();
        bad[4] = 2;
        assert!(matches!(EncodedTree::from_bytes(&bad), Err(Error::Format(_))));
        let cut = EncodedTree::from_bytes(&bytes[..bytes.len() - 6]).unwrap();
        assert!(matches!(decode(&cut), Err(Error::Truncated)));
        assert!(matches!(EncodedTree::from_bytes(&bytes[..3]), Err(Error::Truncated)));
    }

    #[test]
    fn deterministic_bytes() {
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(77);
            let (t, _) = sim::random_tree(300, TreeKind::Reduced, &mut rng);
            encode(&t, 16).unwrap().to_bytes()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn rate_is_reproducible() {
        let a = measure_rate(64, TreeKind::Minimal, 20, 1, 16, Execution::Sequential).unwrap();
        let b = measure_rate(64, TreeKind::Minimal, 20, 1, 16, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        assert!(a.model_bits.mean <= a.payload_bits.mean);
    }
}
