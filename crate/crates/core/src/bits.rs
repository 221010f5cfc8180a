//! Bit blocks, soft values and the hard-decision / error-count primitives.
//!
//! LLRs follow `ln(P(bit = 0) / P(bit = 1))` everywhere in the crate: a
//! positive value favors 0 and an exact zero decides 0.

use std::ops::Deref;

use crate::error::{Error, Result};

/// An ordered sequence of bits, each stored as a `u8` equal to 0 or 1.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct BitBlock(Vec<u8>);

impl BitBlock {
    pub fn zeros(len: usize) -> Self {
        BitBlock(vec![0; len])
    }

    /// Wraps `bits`, rejecting any element other than 0 or 1.
    pub fn from_vec(bits: Vec<u8>) -> Result<Self> {
        if let Some(pos) = bits.iter().position(|&b| b > 1) {
            return Err(Error::invalid(
                "bits",
                format!("element {pos} is {}, not 0 or 1", bits[pos]),
            ));
        }
        Ok(BitBlock(bits))
    }

    /// Caller guarantees every element is 0 or 1.
    pub(crate) fn from_vec_unchecked(bits: Vec<u8>) -> Self {
        debug_assert!(bits.iter().all(|&b| b <= 1));
        BitBlock(bits)
    }

    /// Parses a string of `0`/`1` characters, ignoring whitespace and `_`.
    pub fn parse(s: &str) -> Result<Self> {
        s.chars()
            .filter(|c| !c.is_whitespace() && *c != '_')
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::invalid("bits", format!("unexpected character {other:?}"))),
            })
            .collect::<Result<Vec<u8>>>()
            .map(BitBlock)
    }

    /// MSB-first expansion of a byte string.
    pub fn from_bytes_msb(bytes: &[u8]) -> Self {
        let bits = bytes
            .iter()
            .flat_map(|&b| (0..8).rev().map(move |i| (b >> i) & 1))
            .collect();
        BitBlock(bits)
    }

    pub fn into_vec(self) -> Vec<u8> {
        self.0
    }

    /// Bitwise XOR of two equal-length blocks.
    pub fn xor(&self, other: &BitBlock) -> Result<BitBlock> {
        Error::check_len(self.len(), other.len())?;
        Ok(BitBlock(
            self.0.iter().zip(&other.0).map(|(a, b)| a ^ b).collect(),
        ))
    }
}

impl Deref for BitBlock {
    type Target = [u8];

    fn deref(&self) -> &[u8] {
        &self.0
    }
}

impl AsRef<[u8]> for BitBlock {
    fn as_ref(&self) -> &[u8] {
        &self.0
    }
}

impl std::fmt::Display for BitBlock {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for b in &self.0 {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// Per-bit log-likelihood ratios.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LlrVector(Vec<f64>);

impl LlrVector {
    pub fn new(values: Vec<f64>) -> Self {
        LlrVector(values)
    }

    /// Noiseless LLRs of `bits` with the given magnitude.
    pub fn from_bits(bits: &[u8], magnitude: f64) -> Self {
        LlrVector(
            bits.iter()
                .map(|&b| if b == 0 { magnitude } else { -magnitude })
                .collect(),
        )
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for LlrVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl std::ops::DerefMut for LlrVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for LlrVector {
    fn from(v: Vec<f64>) -> Self {
        LlrVector(v)
    }
}

#[inline]
pub fn hard_bit(llr: f64) -> u8 {
    u8::from(llr < 0.0)
}

pub fn hard_decision(llr: &[f64]) -> BitBlock {
    BitBlock(llr.iter().map(|&l| hard_bit(l)).collect())
}

/// Outcome of comparing a decoded block with its reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ErrorCount {
    pub bit_errors: usize,
    pub frame_error: bool,
}

pub fn count_errors(reference: &[u8], decoded: &[u8]) -> Result<ErrorCount> {
    Error::check_len(reference.len(), decoded.len())?;
    let bit_errors = reference
        .iter()
        .zip(decoded)
        .filter(|(a, b)| a != b)
        .count();
    Ok(ErrorCount {
        bit_errors,
        frame_error: bit_errors > 0,
    })
}

/// Even parity (XOR) of a bit slice.
#[inline]
pub(crate) fn parity(bits: &[u8]) -> u8 {
    bits.iter().fold(0, |acc, &b| acc ^ b)
}
