//! Prefix trees over hashed elements: build them from element hashes, compute their
//! expected information content in closed form, and entropy-code them close
//! to that bound.
//!
//! A set of `n` elements is mapped to `n` unbounded pseudorandom bit streams
//! ([`hashstream`]). The minimal binary trie distinguishing those streams
//! ([`trie`]) can be stored in about 2.775 bits per element by coding, at
//! every internal node, how many of its streams go left ([`codec`]).
//! [`analytic`] evaluates the expected sizes, depths and false-positive
//! rates of the three tree kinds, and [`bloom`] provides the Bloom filter
//! used as a baseline. [`sim`] holds the Monte Carlo drivers, which run on
//! rayon when the `parallel` feature is enabled.

pub mod analytic;
pub mod bloom;
pub mod codec;
mod error;
pub mod hashstream;
pub mod sim;
pub mod trie;

pub use error::{Error, Result};
pub use hashstream::{ElementStream, StreamKey};
pub use trie::{PrefixTree, TreeKind, Verdict};
