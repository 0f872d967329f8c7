//! Prefix trees over element streams.
//!
//! Nodes live in a preorder arena (left subtree before right), so two trees
//! with the same shape have identical node vectors. Bit 0 goes left.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::Rng;

use crate::hashstream::{ElementStream, StreamKey};
use crate::sim::{self, Execution};
use crate::{Error, Result};

/// Two streams that agree this deep are treated as the same element.
pub const MAX_DEPTH: u32 = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TreeKind {
    Minimal,
    /// Minimal tree with every leaf extended along its stream to depth `d >= 1`.
    MinDepth(u32),
    /// Minimal tree with the direction of every degree-1 node erased.
    Reduced,
}

impl TreeKind {
    pub fn min_depth(&self) -> u32 {
        match self {
            TreeKind::MinDepth(d) => *d,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

impl NodeId {
    pub const ROOT: NodeId = NodeId(0);

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub children: [Option<NodeId>; 2],
    /// Number of member streams passing through this node.
    pub count: u32,
    /// Degree-1 node of a reduced tree whose direction was erased.
    pub wildcard: bool,
}

impl Node {
    fn leaf() -> Self {
        Self {
            children: [None, None],
            count: 1,
            wildcard: false,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children == [None, None]
    }

    pub fn degree(&self) -> usize {
        self.children.iter().flatten().count()
    }

    pub fn only_child(&self) -> Option<NodeId> {
        match self.children {
            [Some(c), None] | [None, Some(c)] => Some(c),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    PresentOrFalsePositive,
    DefinitelyAbsent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeStats {
    pub leaf_depth_histogram: BTreeMap<u32, u64>,
    pub avg_depth: f64,
    /// Internal nodes with count >= 2 and a single child (wildcards included).
    pub degree1_nodes: u64,
    pub degree2_nodes: u64,
    /// Single-stream nodes on min-depth extension chains, leaves excluded.
    pub extension_nodes: u64,
    pub total_nodes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefixTree {
    nodes: Vec<Node>,
    kind: TreeKind,
    n: u64,
}

impl PrefixTree {
    /// The minimal tree distinguishing `streams`. Input order is irrelevant.
    pub fn build_minimal(streams: &[ElementStream]) -> Result<Self> {
        if streams.is_empty() {
            return Err(Error::EmptyInput);
        }
        if streams.len() > u32::MAX as usize {
            return Err(Error::Domain("more than 2^32 - 1 elements".into()));
        }
        let mut items = streams.to_vec();
        let mut nodes = Vec::with_capacity(2 * items.len());
        build_subtree(&mut nodes, &mut items, 0)?;
        Ok(Self {
            nodes,
            kind: TreeKind::Minimal,
            n: streams.len() as u64,
        })
    }

    /// Builds the minimal tree and extends it to depth `d` in one go.
    pub fn build(streams: &[ElementStream], kind: TreeKind) -> Result<Self> {
        let tree = Self::build_minimal(streams)?;
        match kind {
            TreeKind::Minimal => Ok(tree),
            TreeKind::MinDepth(d) => tree.extend_to_min_depth(d, streams),
            TreeKind::Reduced => tree.reduce(),
        }
    }

    /// Assemble a tree from a preorder arena, checking every invariant.
    pub fn from_parts(nodes: Vec<Node>, kind: TreeKind) -> Result<Self> {
        let n = nodes.first().map_or(0, |r| r.count as u64);
        let tree = Self { nodes, kind, n };
        tree.validate()?;
        Ok(tree)
    }

    pub fn kind(&self) -> TreeKind {
        self.kind
    }

    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    /// Replace every leaf shallower than `d` by a chain following its
    /// stream's actual bits down to depth `d`. `d = 0` is the identity.
    pub fn extend_to_min_depth(&self, d: u32, streams: &[ElementStream]) -> Result<Self> {
        if self.kind != TreeKind::Minimal {
            return Err(Error::MalformedTree(format!(
                "only minimal trees can be extended, got {:?}",
                self.kind
            )));
        }
        if d == 0 {
            return Ok(self.clone());
        }
        if streams.len() as u64 != self.n {
            return Err(Error::MalformedTree(format!(
                "{} streams given for a tree of {} elements",
                streams.len(),
                self.n
            )));
        }
        let mut owner: HashMap<NodeId, ElementStream> = HashMap::with_capacity(streams.len());
        for s in streams {
            let leaf = self.leaf_of(s).ok_or_else(|| {
                Error::MalformedTree(format!("stream {:#x} is not in the tree", s.digest))
            })?;
            if owner.insert(leaf, *s).is_some() {
                return Err(Error::MalformedTree("two streams share a leaf".into()));
            }
        }
        let mut nodes = Vec::with_capacity(self.nodes.len() + streams.len() * d as usize);
        self.copy_extended(NodeId::ROOT, 0, d, &owner, &mut nodes);
        Ok(Self {
            nodes,
            kind: TreeKind::MinDepth(d),
            n: self.n,
        })
    }

    fn copy_extended(
        &self,
        id: NodeId,
        depth: u32,
        d: u32,
        owner: &HashMap<NodeId, ElementStream>,
        out: &mut Vec<Node>,
    ) -> NodeId {
        let node = self.node(id);
        let new_id = NodeId(out.len() as u32);
        out.push(Node {
            children: [None, None],
            ..node.clone()
        });
        if node.is_leaf() {
            let stream = owner[&id];
            let mut prev = new_id;
            for depth in depth..d {
                let next = NodeId(out.len() as u32);
                out.push(Node::leaf());
                out[prev.index()].children[stream.bit(depth as u64) as usize] = Some(next);
                prev = next;
            }
        } else {
            for side in 0..2 {
                if let Some(c) = node.children[side] {
                    let c = self.copy_extended(c, depth + 1, d, owner, out);
                    out[new_id.index()].children[side] = Some(c);
                }
            }
        }
        new_id
    }

    /// Mark every degree-1 internal node as a wildcard.
    pub fn reduce(&self) -> Result<Self> {
        if self.kind != TreeKind::Minimal {
            return Err(Error::MalformedTree(format!(
                "only minimal trees can be reduced, got {:?}",
                self.kind
            )));
        }
        let nodes = self
            .nodes
            .iter()
            .map(|node| Node {
                wildcard: node.degree() == 1,
                ..node.clone()
            })
            .collect();
        Ok(Self {
            nodes,
            kind: TreeKind::Reduced,
            n: self.n,
        })
    }

    /// The same tree with every wildcard's child moved to the left slot,
    /// i.e. with the erased directions forgotten.
    pub fn erase_directions(&self) -> Self {
        let mut out = self.clone();
        for node in out.nodes.iter_mut().filter(|n| n.wildcard) {
            node.children = [node.only_child(), None];
        }
        out
    }

    fn leaf_of(&self, stream: &ElementStream) -> Option<NodeId> {
        let mut id = NodeId::ROOT;
        let mut bits = stream.bits();
        loop {
            let node = self.node(id);
            if node.is_leaf() {
                return Some(id);
            }
            let bit = bits.next().unwrap();
            id = if node.wildcard {
                node.only_child()?
            } else {
                node.children[bit as usize]?
            };
        }
    }

    /// Walk the stream's bits from the root. Wildcards accept either bit.
    pub fn query(&self, stream: &ElementStream) -> Verdict {
        match self.leaf_of(stream) {
            Some(_) => Verdict::PresentOrFalsePositive,
            None => Verdict::DefinitelyAbsent,
        }
    }

    pub fn stats(&self) -> TreeStats {
        let mut hist = BTreeMap::new();
        let (mut d1, mut d2, mut ext) = (0u64, 0u64, 0u64);
        let mut stack = vec![(NodeId::ROOT, 0u32)];
        while let Some((id, depth)) = stack.pop() {
            let node = self.node(id);
            match node.degree() {
                0 => *hist.entry(depth).or_insert(0u64) += 1,
                1 if node.count >= 2 => d1 += 1,
                1 => ext += 1,
                _ => d2 += 1,
            }
            stack.extend(node.children.iter().flatten().map(|&c| (c, depth + 1)));
        }
        let leaves: u64 = hist.values().sum();
        let depth_sum: u64 = hist.iter().map(|(&d, &c)| d as u64 * c).sum();
        TreeStats {
            avg_depth: depth_sum as f64 / leaves.max(1) as f64,
            leaf_depth_histogram: hist,
            degree1_nodes: d1,
            degree2_nodes: d2,
            extension_nodes: ext,
            total_nodes: self.nodes.len() as u64,
        }
    }

    /// Fraction of fresh random streams, disjoint from `members`, that reach
    /// a leaf. Reproducible for a given seed regardless of thread count.
    pub fn simulate_false_positive(
        &self,
        key: StreamKey,
        members: &[ElementStream],
        probes: u64,
        seed: u64,
        exec: Execution,
    ) -> f64 {
        let member_digests: HashSet<u64> = members.iter().map(|s| s.digest).collect();
        let hits: u64 = sim::chunked(probes, seed, exec, |rng, count| {
            let mut hits = 0u64;
            for _ in 0..count {
                let digest = loop {
                    let d: u64 = rng.gen();
                    if !member_digests.contains(&d) {
                        break d;
                    }
                };
                if self.query(&ElementStream::new(key, digest)) == Verdict::PresentOrFalsePositive {
                    hits += 1;
                }
            }
            hits
        })
        .into_iter()
        .sum();
        hits as f64 / probes.max(1) as f64
    }

    /// Check the structural invariants of this tree's kind.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::MalformedTree(m));
        if self.nodes.is_empty() {
            return bad("no root".into());
        }
        if self.root().count as u64 != self.n {
            return bad("root count differs from n".into());
        }
        let d_min = self.kind.min_depth();
        let mut seen = 0usize;
        let mut stack = vec![(NodeId::ROOT, 0u32)];
        while let Some((id, depth)) = stack.pop() {
            let Some(node) = self.nodes.get(id.index()) else {
                return bad(format!("dangling child {}", id.0));
            };
            seen += 1;
            if seen > self.nodes.len() {
                return bad("cycle".into());
            }
            let child_sum: u32 = node
                .children
                .iter()
                .flatten()
                .map(|c| self.nodes.get(c.index()).map_or(0, |c| c.count))
                .sum();
            if node.count == 0 {
                return bad(format!("node {} has zero count", id.0));
            }
            if node.wildcard && (self.kind != TreeKind::Reduced || node.degree() != 1) {
                return bad(format!("node {} is a misplaced wildcard", id.0));
            }
            match (node.count, node.degree()) {
                (1, 0) if depth < d_min => {
                    return bad(format!("leaf {} at depth {depth} < {d_min}", id.0))
                }
                (1, 0) => {}
                (1, 1) if depth < d_min && child_sum == 1 => {}
                (1, _) => return bad(format!("single-stream node {} is not a leaf", id.0)),
                (_, 0) => return bad(format!("leaf {} carries {} streams", id.0, node.count)),
                (c, _) if c != child_sum => {
                    return bad(format!("node {} count {c} != children {child_sum}", id.0))
                }
                (_, 1) if self.kind == TreeKind::Reduced && !node.wildcard => {
                    return bad(format!("degree-1 node {} of a reduced tree kept its direction", id.0))
                }
                _ => {}
            }
            stack.extend(node.children.iter().flatten().map(|&c| (c, depth + 1)));
        }
        if seen != self.nodes.len() {
            return bad("unreachable nodes in arena".into());
        }
        Ok(())
    }
}

fn build_subtree(nodes: &mut Vec<Node>, items: &mut [ElementStream], depth: u32) -> Result<NodeId> {
    let id = NodeId(nodes.len() as u32);
    nodes.push(Node {
        children: [None, None],
        count: items.len() as u32,
        wildcard: false,
    });
    if items.len() == 1 {
        return Ok(id);
    }
    if depth == MAX_DEPTH {
        return Err(Error::DuplicateElement(items[0].digest, items[1].digest, MAX_DEPTH));
    }
    let split = partition(items, depth as u64);
    let (left, right) = items.split_at_mut(split);
    if !left.is_empty() {
        let c = build_subtree(nodes, left, depth + 1)?;
        nodes[id.index()].children[0] = Some(c);
    }
    if !right.is_empty() {
        let c = build_subtree(nodes, right, depth + 1)?;
        nodes[id.index()].children[1] = Some(c);
    }
    Ok(id)
}

/// Moves streams with bit `i` = 0 to the front; returns their number.
fn partition(items: &mut [ElementStream], i: u64) -> usize {
    let mut split = 0;
    for j in 0..items.len() {
        if !items[j].bit(i) {
            items.swap(split, j);
            split += 1;
        }
    }
    split
}
