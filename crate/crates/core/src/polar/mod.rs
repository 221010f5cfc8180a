//! Polar codes: Bhattacharyya construction, natural-order encoding and
//! successive-cancellation (list) decoding with CRC-aided path selection.
//!
//! Indices are in natural order throughout: the encoder computes
//! `x = u F^{(x)n}` with `F = [[1, 0], [1, 1]]` and no bit-reversal, and the
//! most significant index bit selects the outermost polarization step.

mod crc;
mod decode;

pub use crc::{crc16_append, crc16_bits, crc16_check, CRC_LEN};
pub use decode::{crc_scl_decode, sc_decode, scl_decode, ListPath, PolarDecoder};

use crate::bits::BitBlock;
use crate::error::{Error, Result};

pub const DEFAULT_LIST_SIZE: usize = 16;
pub const DEFAULT_DESIGN_SNR_DB: f64 = 2.0;

/// Check-node rule used by the decoder's f-function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FNode {
    #[default]
    MinSum,
    /// `2 atanh(tanh(a/2) tanh(b/2))`; for sensitivity studies only.
    Exact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolarCodeSpec {
    n: usize,
    k_msg: usize,
    crc_len: usize,
    info_set: Vec<usize>,
    frozen: Vec<bool>,
    pub list_size: usize,
    pub design_snr_db: f64,
    pub f_node: FNode,
}

impl PolarCodeSpec {
    /// Rate-1/2 code carrying `k_msg` message bits plus a 16-bit CRC in a
    /// mother code of length `2 * k_msg`.
    pub fn for_message(k_msg: usize) -> Result<Self> {
        Self::new(2 * k_msg, k_msg, DEFAULT_DESIGN_SNR_DB)
    }

    pub fn new(n: usize, k_msg: usize, design_snr_db: f64) -> Result<Self> {
        check_power_of_two(n)?;
        let z = bhattacharyya_construct(n, design_snr_db)?;
        let mut spec = Self::from_bhattacharyya(&z, k_msg, CRC_LEN)?;
        spec.design_snr_db = design_snr_db;
        Ok(spec)
    }

    /// Picks the `k_msg + crc_len` most reliable positions of `z`.
    pub fn from_bhattacharyya(z: &[f64], k_msg: usize, crc_len: usize) -> Result<Self> {
        let k_total = k_msg + crc_len;
        if k_total > z.len() {
            return Err(Error::invalid(
                "k_msg",
                format!("{k_msg} message + {crc_len} CRC bits exceed N = {}", z.len()),
            ));
        }
        Self::from_info_set(z.len(), select_info_set(z, k_total), crc_len)
    }

    /// Spec with an explicit information set; `crc_len` of its bits (the
    /// last ones in index order) carry the CRC.
    pub fn from_info_set(n: usize, info_set: Vec<usize>, crc_len: usize) -> Result<Self> {
        check_power_of_two(n)?;
        let mut info_set = info_set;
        info_set.sort_unstable();
        info_set.dedup();
        if info_set.last().is_some_and(|&i| i >= n) {
            return Err(Error::invalid("info_set", "index out of range"));
        }
        if info_set.len() < crc_len {
            return Err(Error::invalid("crc_len", "longer than the information set"));
        }
        let mut frozen = vec![true; n];
        for &i in &info_set {
            frozen[i] = false;
        }
        Ok(PolarCodeSpec {
            n,
            k_msg: info_set.len() - crc_len,
            crc_len,
            info_set,
            frozen,
            list_size: DEFAULT_LIST_SIZE,
            design_snr_db: DEFAULT_DESIGN_SNR_DB,
            f_node: FNode::MinSum,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k_msg(&self) -> usize {
        self.k_msg
    }

    pub fn crc_len(&self) -> usize {
        self.crc_len
    }

    /// Message plus CRC bits.
    pub fn k_total(&self) -> usize {
        self.info_set.len()
    }

    pub fn info_set(&self) -> &[usize] {
        &self.info_set
    }

    pub fn is_frozen(&self, i: usize) -> bool {
        self.frozen[i]
    }

    pub(crate) fn frozen_mask(&self) -> &[bool] {
        &self.frozen
    }

    pub fn frozen_set(&self) -> Vec<usize> {
        (0..self.n).filter(|&i| self.frozen[i]).collect()
    }

    /// Appends the CRC and polar-encodes a message of `k_msg` bits.
    pub fn encode_message(&self, msg: &[u8]) -> Result<BitBlock> {
        Error::check_len(self.k_msg, msg.len())?;
        if self.crc_len == 0 {
            return polar_encode(msg, self);
        }
        debug_assert_eq!(self.crc_len, CRC_LEN);
        polar_encode(&crc16_append(msg), self)
    }

    /// Plain-text frozen-set listing: comment header, then one index per line.
    pub fn frozen_set_text(&self) -> String {
        let mut s = format!(
            "# polar frozen set\n# N={} K_msg={} crc={} design_snr_db={}\n",
            self.n, self.k_msg, self.crc_len, self.design_snr_db
        );
        for i in self.frozen_set() {
            s.push_str(&i.to_string());
            s.push('\n');
        }
        s
    }

    /// Parses the output of [`Self::frozen_set_text`].
    pub fn parse_frozen_set(text: &str, n: usize) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let v: usize = line.parse().map_err(|_| Error::Parse {
                line: lineno + 1,
                reason: format!("not an index: {line:?}"),
            })?;
            if v >= n {
                return Err(Error::Parse {
                    line: lineno + 1,
                    reason: format!("index {v} >= N = {n}"),
                });
            }
            out.push(v);
        }
        Ok(out)
    }
}

fn check_power_of_two(n: usize) -> Result<()> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::invalid("N", format!("{n} is not a power of two")));
    }
    Ok(())
}

/// Bhattacharyya parameters with `Z_0 = exp(-10^(snr/10))`.
pub fn bhattacharyya_construct(n: usize, design_snr_db: f64) -> Result<Vec<f64>> {
    bhattacharyya_from_z0(n, (-(10f64.powf(design_snr_db / 10.0))).exp())
}

/// Polarizes `z0` to length `n`: index `2j` receives `2Z - Z^2` and `2j + 1`
/// receives `Z^2` at every doubling.
pub fn bhattacharyya_from_z0(n: usize, z0: f64) -> Result<Vec<f64>> {
    check_power_of_two(n)?;
    if !(0.0..=1.0).contains(&z0) {
        return Err(Error::invalid("z0", format!("{z0} not in [0, 1]")));
    }
    let mut z = vec![z0];
    while z.len() < n {
        z = z
            .iter()
            .flat_map(|&v| [2.0 * v - v * v, v * v])
            .collect();
    }
    Ok(z)
}

/// Indices of the `k` smallest values, ties to the lower index, returned in
/// ascending index order.
pub fn select_info_set(z: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..z.len()).collect();
    order.sort_by(|&a, &b| z[a].total_cmp(&z[b]).then(a.cmp(&b)));
    let mut chosen: Vec<usize> = order.into_iter().take(k).collect();
    chosen.sort_unstable();
    chosen
}

/// In-place `x = u F^{(x)n}` over GF(2), natural order.
pub fn polar_transform(x: &mut [u8]) {
    let n = x.len();
    let mut half = 1;
    while half < n {
        for block in x.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter()) {
                *a ^= *b;
            }
        }
        half *= 2;
    }
}

/// Places `info_bits` (message followed by CRC) on the information set and
/// transforms.
pub fn polar_encode(info_bits: &[u8], spec: &PolarCodeSpec) -> Result<BitBlock> {
    Error::check_len(spec.k_total(), info_bits.len())?;
    let mut u = vec![0u8; spec.n];
    for (&pos, &b) in spec.info_set.iter().zip(info_bits) {
        u[pos] = b;
    }
    polar_transform(&mut u);
    Ok(BitBlock::from_vec_unchecked(u))
}
