//! Per-element pseudorandom bit streams.
//!
//! Every element is reduced to a 64-bit FNV-1a digest. Its bit stream is the
//! concatenation of 64-bit blocks `mix(key ^ digest + block * GOLDEN)`, read
//! most significant bit first, where `mix` is the SplitMix64 finalizer. The
//! construction is part of the wire contract: trees encoded by one
//! implementation are queried by another, so none of these constants may
//! change.

use std::collections::HashSet;
use std::io::{BufRead, Read};

use crate::Result;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// Dataset-wide seed mixed into every stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct StreamKey(pub u64);

/// FNV-1a over `bytes`.
pub fn digest_element(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

/// SplitMix64 output function.
#[inline]
pub fn finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The `block`-th 64-bit word of the stream for `(key, digest)`.
#[inline]
pub fn stream_word(key: StreamKey, digest: u64, block: u64) -> u64 {
    finalize((key.0 ^ digest).wrapping_add(block.wrapping_mul(GOLDEN)))
}

/// Bit `i` of the stream, MSB-first within each block.
#[inline]
pub fn stream_bit(key: StreamKey, digest: u64, i: u64) -> bool {
    let w = stream_word(key, digest, i / 64);
    (w >> (63 - (i % 64))) & 1 == 1
}

/// The unbounded bit sequence assigned to one element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ElementStream {
    pub digest: u64,
    pub key: StreamKey,
}

impl ElementStream {
    pub fn new(key: StreamKey, digest: u64) -> Self {
        Self { digest, key }
    }

    pub fn from_bytes(key: StreamKey, bytes: &[u8]) -> Self {
        Self::new(key, digest_element(bytes))
    }

    #[inline]
    pub fn bit(&self, i: u64) -> bool {
        stream_bit(self.key, self.digest, i)
    }

    #[inline]
    pub fn word(&self, block: u64) -> u64 {
        stream_word(self.key, self.digest, block)
    }

    /// Iterator over the bits from index 0, one block computed per 64 bits.
    pub fn bits(&self) -> StreamBits {
        StreamBits {
            stream: *self,
            cursor: 0,
            word: 0,
        }
    }
}

/// Cursor over an [`ElementStream`].
#[derive(Debug, Clone)]
pub struct StreamBits {
    stream: ElementStream,
    cursor: u64,
    word: u64,
}

impl StreamBits {
    pub fn position(&self) -> u64 {
        self.cursor
    }
}

impl Iterator for StreamBits {
    type Item = bool;

    #[inline]
    fn next(&mut self) -> Option<bool> {
        let pos = self.cursor % 64;
        if pos == 0 {
            self.word = self.stream.word(self.cursor / 64);
        }
        self.cursor += 1;
        Some((self.word >> (63 - pos)) & 1 == 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    /// UTF-8 text, one element per line, newline stripped.
    Lines,
    /// Little-endian u64 records taken directly as digests.
    RawU64,
}

/// An ingested element corpus.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub streams: Vec<ElementStream>,
    /// Printable form of each record, parallel to `streams`.
    pub labels: Vec<String>,
    /// Records whose digest already appeared earlier in the input.
    pub duplicates: usize,
}

impl Corpus {
    /// Streams with repeated digests removed, first occurrence kept.
    pub fn distinct_streams(&self) -> Vec<ElementStream> {
        let mut seen = HashSet::with_capacity(self.streams.len());
        self.streams
            .iter()
            .copied()
            .filter(|s| seen.insert(s.digest))
            .collect()
    }
}

pub fn ingest<R: Read>(reader: R, format: InputFormat, key: StreamKey) -> Result<Corpus> {
    let mut corpus = Corpus::default();
    let mut seen = HashSet::new();
    let mut push = |corpus: &mut Corpus, digest: u64, label: String| {
        if !seen.insert(digest) {
            corpus.duplicates += 1;
        }
        corpus.streams.push(ElementStream::new(key, digest));
        corpus.labels.push(label);
    };
    match format {
        InputFormat::Lines => {
            let mut reader = std::io::BufReader::new(reader);
            let mut line = Vec::new();
            loop {
                line.clear();
                if reader.read_until(b'\n', &mut line)? == 0 {
                    break;
                }
                if line.last() == Some(&b'\n') {
                    line.pop();
                    if line.last() == Some(&b'\r') {
                        line.pop();
                    }
                }
                let label = String::from_utf8_lossy(&line).into_owned();
                push(&mut corpus, digest_element(&line), label);
            }
        }
        InputFormat::RawU64 => {
            let mut bytes = Vec::new();
            let mut reader = reader;
            reader.read_to_end(&mut bytes)?;
            if bytes.len() % 8 != 0 {
                return Err(std::io::Error::new(
                    std::io::ErrorKind::InvalidData,
                    format!("raw-u64 input length {} is not a multiple of 8", bytes.len()),
                )
                .into());
            }
            for chunk in bytes.chunks_exact(8) {
                let v = u64::from_le_bytes(chunk.try_into().unwrap());
                push(&mut corpus, v, format!("{v:#018x}"));
            }
        }
    }
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_reference_values() {
        assert_eq!(digest_element(b""), 0xcbf29ce484222325);
        assert_eq!(digest_element(b"a"), 0xaf63dc4c8601ec8c);
    }

    #[test]
    fn finalizer_zero_is_fixed_point() {
        assert_eq!(finalize(0), 0);
        assert!(!stream_bit(StreamKey(0), 0, 0));
    }

    #[test]
    fn bits_iterator_matches_random_access() {
        let s = ElementStream::new(StreamKey(7), 0xdead_beef);
        for (i, b) in s.bits().take(200).enumerate() {
            assert_eq!(b, s.bit(i as u64), "bit {i}");
        }
    }

    #[test]
    fn ingest_lines() {
        let c = ingest(&b"x\ny\r\nz"[..], InputFormat::Lines, StreamKey(1)).unwrap();
        assert_eq!(c.labels, ["x", "y", "z"]);
        assert_eq!(c.streams[1].digest, digest_element(b"y"));
        assert_eq!(c.duplicates, 0);

        let c = ingest(&b"x\ny\nx\n"[..], InputFormat::Lines, StreamKey(1)).unwrap();
        assert_eq!(c.duplicates, 1);
        assert_eq!(c.distinct_streams().len(), 2);
    }

    #[test]
    fn ingest_raw() {
        let mut bytes = 5u64.to_le_bytes().to_vec();
        bytes.extend(9u64.to_le_bytes());
        let c = ingest(&bytes[..], InputFormat::RawU64, StreamKey(0)).unwrap();
        assert_eq!(c.streams.iter().map(|s| s.digest).collect::<Vec<_>>(), [5, 9]);
        assert!(ingest(&bytes[..5], InputFormat::RawU64, StreamKey(0)).is_err());
    }
}
