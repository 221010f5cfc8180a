//! Rate-1/2, constraint-length-7 convolutional code with the (133, 171)
//! octal generators, zero-tail termination and a soft-input Viterbi decoder.

use crate::bits::BitBlock;
use crate::error::{Error, Result};

const MEMORY: usize = 6;
const STATES: usize = 1 << MEMORY;

/// Code parameters. Only the 802.11a code is supported, but the values are
/// kept explicit so callers can report them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvCodeSpec {
    pub constraint_length: usize,
    pub memory: usize,
    /// Octal generator polynomials, first output first.
    pub generators: [u32; 2],
}

impl Default for ConvCodeSpec {
    fn default() -> Self {
        ConvCodeSpec {
            constraint_length: MEMORY + 1,
            memory: MEMORY,
            generators: [0o133, 0o171],
        }
    }
}

impl ConvCodeSpec {
    /// Encoded length for a message of `msg_len` bits, tail included.
    pub fn encoded_len(&self, msg_len: usize) -> usize {
        2 * (msg_len + self.memory)
    }

    /// Output pair for shift-register contents `reg` (input bit at bit 6).
    #[inline]
    fn outputs(&self, reg: u32) -> (u8, u8) {
        (
            ((reg & self.generators[0]).count_ones() & 1) as u8,
            ((reg & self.generators[1]).count_ones() & 1) as u8,
        )
    }
}

/// Encodes `msg` followed by `memory` zero tail bits. Output bits alternate
/// between the first and second generator.
pub fn conv_encode(msg: &[u8], spec: &ConvCodeSpec) -> BitBlock {
    let mut out = Vec::with_capacity(spec.encoded_len(msg.len()));
    let mut state = 0u32;
    for &bit in msg.iter().chain(std::iter::repeat(&0).take(spec.memory)) {
        let reg = (u32::from(bit) << MEMORY) | state;
        let (a, b) = spec.outputs(reg);
        out.push(a);
        out.push(b);
        state = reg >> 1;
    }
    BitBlock::from_vec_unchecked(out)
}

/// Maximum-likelihood decoding of a zero-terminated block.
///
/// Path metrics are correlations of the LLRs with the antipodal code symbols
/// (bit 0 -> +1). When two paths tie at a merge the one whose oldest register
/// bit is 0 survives.
pub fn viterbi_decode(llr: &[f64], msg_len: usize, spec: &ConvCodeSpec) -> Result<BitBlock> {
    let steps = msg_len + spec.memory;
    Error::check_len(spec.encoded_len(msg_len), llr.len())?;

    // Code symbols for each 7-bit register value, as (+1/-1, +1/-1).
    let mut signs = [(0.0f64, 0.0f64); 2 * STATES];
    for (reg, s) in signs.iter_mut().enumerate() {
        let (a, b) = spec.outputs(reg as u32);
        *s = (1.0 - 2.0 * f64::from(a), 1.0 - 2.0 * f64::from(b));
    }

    let mut metric = [f64::NEG_INFINITY; STATES];
    metric[0] = 0.0;
    let mut next = [0.0f64; STATES];
    // Bit `ns` of decisions[t] holds the surviving oldest bit into state `ns`.
    let mut decisions = vec![0u64; steps];

    for (t, pair) in llr.chunks_exact(2).enumerate() {
        let (l0, l1) = (pair[0], pair[1]);
        let mut dec = 0u64;
        for ns in 0..STATES {
            let r0 = ns << 1;
            let r1 = r0 | 1;
            let m0 = metric[r0 & (STATES - 1)] + signs[r0].0 * l0 + signs[r0].1 * l1;
            let m1 = metric[r1 & (STATES - 1)] + signs[r1].0 * l0 + signs[r1].1 * l1;
            if m1 > m0 {
                next[ns] = m1;
                dec |= 1 << ns;
            } else {
                next[ns] = m0;
            }
        }
        decisions[t] = dec;
        metric = next;
    }

    let mut state = 0usize;
    let mut inputs = vec![0u8; steps];
    for t in (0..steps).rev() {
        inputs[t] = (state >> (MEMORY - 1)) as u8;
        let b = ((decisions[t] >> state) & 1) as usize;
        state = ((state << 1) | b) & (STATES - 1);
    }
    inputs.truncate(msg_len);
    Ok(BitBlock::from_vec_unchecked(inputs))
}
