//! Binary range coder: 32-bit range, carry-propagating 64-bit low, byte output.
//!
//! The leading byte such a coder always emits (the initial zero cache) is
//! dropped, so the decoder primes itself with four bytes instead of five.

use crate::{Error, Result};

const TOP: u32 = 1 << 24;

#[derive(Debug, Clone)]
pub struct Encoder {
    low: u64,
    range: u32,
    cache: u8,
    cache_size: u64,
    primed: bool,
    out: Vec<u8>,
    model_bits: f64,
}

impl Default for Encoder {
    fn default() -> Self {
        Self::new()
    }
}

impl Encoder {
    pub fn new() -> Self {
        Self {
            low: 0,
            range: u32::MAX,
            cache: 0,
            cache_size: 1,
            primed: false,
            out: Vec::new(),
            model_bits: 0.0,
        }
    }

    /// Code `bit` where `false` has probability `p_false / 2^scale_bits`.
    /// `p_false` must lie in `1..2^scale_bits`.
    #[inline]
    pub fn encode(&mut self, bit: bool, p_false: u32, scale_bits: u32) {
        debug_assert!(p_false >= 1 && p_false < 1 << scale_bits);
        let bound = ((self.range as u64 * p_false as u64) >> scale_bits) as u32;
        let p = if bit {
            self.low += bound as u64;
            self.range -= bound;
            (1u32 << scale_bits) - p_false
        } else {
            self.range = bound;
            p_false
        };
        self.model_bits += scale_bits as f64 - (p as f64).log2();
        while self.range < TOP {
            self.range <<= 8;
            self.shift_low();
        }
    }

    fn shift_low(&mut self) {
        if self.low < 0xff00_0000 || self.low > 0xffff_ffff {
            let carry = (self.low >> 32) as u8;
            let mut byte = self.cache;
            loop {
                self.emit(byte.wrapping_add(carry));
                byte = 0xff;
                self.cache_size -= 1;
                if self.cache_size == 0 {
                    break;
                }
            }
            self.cache = (self.low >> 24) as u8;
        }
        self.cache_size += 1;
        self.low = (self.low & 0x00ff_ffff) << 8;
    }

    fn emit(&mut self, byte: u8) {
        if self.primed {
            self.out.push(byte);
        } else {
            self.primed = true;
        }
    }

    /// Ideal code length of everything coded so far, `sum -lg p`.
    pub fn model_bits(&self) -> f64 {
        self.model_bits
    }

    pub fn finish(mut self) -> Vec<u8> {
        for _ in 0..5 {
            self.shift_low();
        }
        self.out
    }
}

#[derive(Debug, Clone)]
pub struct Decoder<'a> {
    data: &'a [u8],
    pos: usize,
    range: u32,
    code: u32,
}

impl<'a> Decoder<'a> {
    pub fn new(data: &'a [u8]) -> Result<Self> {
        let mut d = Self {
            data,
            pos: 0,
            range: u32::MAX,
            code: 0,
        };
        for _ in 0..4 {
            d.code = (d.code << 8) | d.next_byte()? as u32;
        }
        Ok(d)
    }

    #[inline]
    fn next_byte(&mut self) -> Result<u8> {
        let b = *self.data.get(self.pos).ok_or(Error::Truncated)?;
        self.pos += 1;
        Ok(b)
    }

    #[inline]
    pub fn decode(&mut self, p_false: u32, scale_bits: u32) -> Result<bool> {
        let bound = ((self.range as u64 * p_false as u64) >> scale_bits) as u32;
        let bit = if self.code < bound {
            self.range = bound;
            false
        } else {
            self.code -= bound;
            self.range -= bound;
            true
        };
        while self.range < TOP {
            self.range <<= 8;
            self.code = (self.code << 8) | self.next_byte()? as u32;
        }
        Ok(bit)
    }

    /// Bytes not yet consumed.
    pub fn remaining(&self) -> usize {
        self.data.len() - self.pos
    }
}
