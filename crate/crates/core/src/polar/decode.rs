//! Successive-cancellation decoding.
//!
//! [`sc_decode`] is a plain recursive implementation. [`PolarDecoder`] runs
//! list decoding over per-depth LLR and partial-sum arrays shared between
//! paths by reference count. Every array is rewritten in full whenever its
//! owner writes it, so a shared array is never copied: a path that needs to
//! write a shared array just takes a fresh one.

use super::{crc16_check, FNode, PolarCodeSpec};
use crate::bits::{hard_bit, BitBlock};
use crate::error::{Error, Result};

const NONE: u32 = u32::MAX;
const MAX_DEPTH: usize = 17;

#[inline]
fn f_min_sum(a: f64, b: f64) -> f64 {
    let m = a.abs().min(b.abs());
    if (a < 0.0) != (b < 0.0) {
        -m
    } else {
        m
    }
}

#[inline]
fn f_exact(a: f64, b: f64) -> f64 {
    // sign(a) sign(b) min(|a|, |b|) plus the two correction terms.
    f_min_sum(a, b) + (-(a + b).abs()).exp().ln_1p() - (-(a - b).abs()).exp().ln_1p()
}

#[inline]
fn f_node(rule: FNode, a: f64, b: f64) -> f64 {
    match rule {
        FNode::MinSum => f_min_sum(a, b),
        FNode::Exact => f_exact(a, b),
    }
}

#[inline]
fn g_node(a: f64, b: f64, u: u8) -> f64 {
    if u == 0 {
        b + a
    } else {
        b - a
    }
}

/// Successive-cancellation decoding; returns the bits on the information
/// set (message followed by CRC).
pub fn sc_decode(llr: &[f64], spec: &PolarCodeSpec) -> Result<BitBlock> {
    Error::check_len(spec.n(), llr.len())?;
    let mut u = vec![0u8; spec.n()];
    sc_node(llr, spec.frozen_mask(), spec.f_node, &mut u);
    Ok(BitBlock::from_vec_unchecked(
        spec.info_set().iter().map(|&i| u[i]).collect(),
    ))
}

fn sc_node(llr: &[f64], frozen: &[bool], rule: FNode, u: &mut [u8]) -> Vec<u8> {
    if llr.len() == 1 {
        let bit = if frozen[0] { 0 } else { hard_bit(llr[0]) };
        u[0] = bit;
        return vec![bit];
    }
    let half = llr.len() / 2;
    let (a, b) = llr.split_at(half);
    let (u_left, u_right) = u.split_at_mut(half);
    let (fr_left, fr_right) = frozen.split_at(half);

    let upper: Vec<f64> = a.iter().zip(b).map(|(&x, &y)| f_node(rule, x, y)).collect();
    let x_left = sc_node(&upper, fr_left, rule, u_left);
    let lower: Vec<f64> = a
        .iter()
        .zip(b)
        .zip(&x_left)
        .map(|((&x, &y), &s)| g_node(x, y, s))
        .collect();
    let x_right = sc_node(&lower, fr_right, rule, u_right);

    let mut out: Vec<u8> = x_left.iter().zip(&x_right).map(|(l, r)| l ^ r).collect();
    out.extend_from_slice(&x_right);
    out
}

/// One surviving list entry.
#[derive(Debug, Clone, PartialEq)]
pub struct ListPath {
    /// Bits on the information set (message followed by CRC).
    pub bits: BitBlock,
    /// Accumulated penalty; lower is more likely.
    pub metric: f64,
}

pub fn scl_decode(llr: &[f64], spec: &PolarCodeSpec, list_size: usize) -> Result<Vec<ListPath>> {
    PolarDecoder::new().scl(llr, spec, list_size)
}

/// CRC-aided list decoding with `spec.list_size` paths. Returns the message
/// (CRC stripped) and whether the chosen path passed the CRC.
pub fn crc_scl_decode(llr: &[f64], spec: &PolarCodeSpec) -> Result<(BitBlock, bool)> {
    PolarDecoder::new().crc_scl(llr, spec)
}

#[derive(Debug, Default)]
struct Pool<T> {
    len: usize,
    data: Vec<T>,
    refs: Vec<u32>,
    free: Vec<u32>,
}

impl<T: Copy + Default> Pool<T> {
    fn reset(&mut self, len: usize) {
        if self.len != len {
            self.data.clear();
            self.refs.clear();
            self.len = len;
        }
        self.free.clear();
        self.free.extend((0..self.refs.len() as u32).rev());
        self.refs.iter_mut().for_each(|r| *r = 0);
    }

    fn alloc(&mut self) -> u32 {
        let idx = match self.free.pop() {
            Some(i) => i,
            None => {
                self.data.resize(self.data.len() + self.len, T::default());
                self.refs.push(0);
                (self.refs.len() - 1) as u32
            }
        };
        self.refs[idx as usize] = 1;
        idx
    }

    fn retain(&mut self, idx: u32) {
        if idx != NONE {
            self.refs[idx as usize] += 1;
        }
    }

    fn release(&mut self, idx: u32) {
        if idx != NONE {
            let r = &mut self.refs[idx as usize];
            *r -= 1;
            if *r == 0 {
                self.free.push(idx);
            }
        }
    }

    /// Makes `idx` refer to an array owned solely by the caller.
    fn writable(&mut self, idx: &mut u32) {
        if *idx == NONE || self.refs[*idx as usize] > 1 {
            self.release(*idx);
            *idx = self.alloc();
        }
    }

    fn get(&self, idx: u32) -> &[T] {
        let start = idx as usize * self.len;
        &self.data[start..start + self.len]
    }

    fn get_mut(&mut self, idx: u32) -> &mut [T] {
        let start = idx as usize * self.len;
        &mut self.data[start..start + self.len]
    }
}

#[derive(Debug, Clone, Copy)]
struct Path {
    alpha: [u32; MAX_DEPTH],
    beta: [u32; MAX_DEPTH],
    metric: f64,
    /// Last information-bit decision in `nodes`.
    last: u32,
}

impl Path {
    fn root() -> Self {
        Path {
            alpha: [NONE; MAX_DEPTH],
            beta: [NONE; MAX_DEPTH],
            metric: 0.0,
            last: NONE,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    metric: f64,
    path: u32,
    bit: u8,
}

/// Reusable list decoder; keeps its buffers between calls.
#[derive(Debug, Default)]
pub struct PolarDecoder {
    alpha: Vec<Pool<f64>>,
    beta: Vec<Pool<u8>>,
    paths: Vec<Path>,
    next_paths: Vec<Path>,
    /// Decision tree: (parent, bit).
    nodes: Vec<(u32, u8)>,
    candidates: Vec<Candidate>,
    cur: Vec<u8>,
    tmp: Vec<u8>,
}

impl PolarDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn sc(&mut self, llr: &[f64], spec: &PolarCodeSpec) -> Result<BitBlock> {
        sc_decode(llr, spec)
    }

    /// List decoding; paths are returned sorted by metric, ties by list
    /// position.
    pub fn scl(&mut self, llr: &[f64], spec: &PolarCodeSpec, list_size: usize) -> Result<Vec<ListPath>> {
        self.run(llr, spec, list_size)?;
        let k = spec.k_total();
        Ok(self
            .ranked()
            .into_iter()
            .map(|p| ListPath {
                bits: BitBlock::from_vec_unchecked(self.trace(p.last, k)),
                metric: p.metric,
            })
            .collect())
    }

    pub fn crc_scl(&mut self, llr: &[f64], spec: &PolarCodeSpec) -> Result<(BitBlock, bool)> {
        self.run(llr, spec, spec.list_size)?;
        let k = spec.k_total();
        let k_msg = spec.k_msg();
        let ranked = self.ranked();
        if spec.crc_len() == 0 {
            let mut bits = self.trace(ranked[0].last, k);
            bits.truncate(k_msg);
            return Ok((BitBlock::from_vec_unchecked(bits), true));
        }
        for p in &ranked {
            let mut bits = self.trace(p.last, k);
            if crc16_check(&bits) {
                bits.truncate(k_msg);
                return Ok((BitBlock::from_vec_unchecked(bits), true));
            }
        }
        let mut bits = self.trace(ranked[0].last, k);
        bits.truncate(k_msg);
        Ok((BitBlock::from_vec_unchecked(bits), false))
    }

    fn ranked(&self) -> Vec<Path> {
        let mut order: Vec<usize> = (0..self.paths.len()).collect();
        order.sort_by(|&a, &b| {
            self.paths[a]
                .metric
                .total_cmp(&self.paths[b].metric)
                .then(a.cmp(&b))
        });
        order.into_iter().map(|i| self.paths[i]).collect()
    }

    fn trace(&self, mut node: u32, k: usize) -> Vec<u8> {
        let mut bits = vec![0u8; k];
        for slot in bits.iter_mut().rev() {
            let (parent, bit) = self.nodes[node as usize];
            *slot = bit;
            node = parent;
        }
        debug_assert_eq!(node, NONE);
        bits
    }

    fn run(&mut self, llr: &[f64], spec: &PolarCodeSpec, list_size: usize) -> Result<()> {
        let n = spec.n();
        Error::check_len(n, llr.len())?;
        if list_size == 0 {
            return Err(Error::invalid("list_size", "must be at least 1"));
        }
        let levels = n.trailing_zeros() as usize;
        if levels + 1 > MAX_DEPTH {
            return Err(Error::invalid("N", format!("{n} exceeds the supported length")));
        }

        self.alpha.resize_with(levels + 1, Pool::default);
        self.beta.resize_with(levels + 1, Pool::default);
        for d in 1..=levels {
            self.alpha[d].reset(n >> d);
            self.beta[d].reset(n >> d);
        }
        self.paths.clear();
        self.paths.push(Path::root());
        self.nodes.clear();
        self.cur.resize(n, 0);
        self.tmp.resize(n, 0);

        let rule = spec.f_node;
        for i in 0..n {
            let start = if i == 0 { 1 } else { levels - i.trailing_zeros() as usize };
            for p in 0..self.paths.len() {
                for d in start..=levels {
                    self.compute_alpha(p, d, i != 0 && d == start, llr, rule);
                }
            }

            if spec.is_frozen(i) {
                for p in 0..self.paths.len() {
                    let l = self.leaf(p, llr, levels);
                    if l < 0.0 {
                        self.paths[p].metric -= l;
                    }
                    self.update_partial_sums(p, i, 0, levels);
                }
                continue;
            }

            self.candidates.clear();
            for (p, path) in self.paths.iter().enumerate() {
                let l = self.leaf_of(path, llr, levels);
                let (pen0, pen1) = if l < 0.0 { (-l, 0.0) } else { (0.0, l) };
                self.candidates.push(Candidate { metric: path.metric + pen0, path: p as u32, bit: 0 });
                self.candidates.push(Candidate { metric: path.metric + pen1, path: p as u32, bit: 1 });
            }
            self.candidates.sort_by(|a, b| {
                a.metric
                    .total_cmp(&b.metric)
                    .then(a.path.cmp(&b.path))
                    .then(a.bit.cmp(&b.bit))
            });
            self.candidates.truncate(list_size);

            self.next_paths.clear();
            for c in &self.candidates {
                let mut path = self.paths[c.path as usize];
                for d in 1..=levels {
                    self.alpha[d].retain(path.alpha[d]);
                    self.beta[d].retain(path.beta[d]);
                }
                self.nodes.push((path.last, c.bit));
                path.last = (self.nodes.len() - 1) as u32;
                path.metric = c.metric;
                self.next_paths.push(path);
            }
            for path in &self.paths {
                for d in 1..=levels {
                    self.alpha[d].release(path.alpha[d]);
                    self.beta[d].release(path.beta[d]);
                }
            }
            std::mem::swap(&mut self.paths, &mut self.next_paths);
            for p in 0..self.paths.len() {
                let bit = self.nodes[self.paths[p].last as usize].1;
                self.update_partial_sums(p, i, bit, levels);
            }
        }
        Ok(())
    }

    fn leaf_of(&self, path: &Path, llr: &[f64], levels: usize) -> f64 {
        if levels == 0 {
            llr[0]
        } else {
            self.alpha[levels].get(path.alpha[levels])[0]
        }
    }

    fn leaf(&self, p: usize, llr: &[f64], levels: usize) -> f64 {
        self.leaf_of(&self.paths[p], llr, levels)
    }

    fn compute_alpha(&mut self, p: usize, d: usize, use_g: bool, llr: &[f64], rule: FNode) {
        let mut idx = self.paths[p].alpha[d];
        self.alpha[d].writable(&mut idx);
        self.paths[p].alpha[d] = idx;

        let (lower, upper) = self.alpha.split_at_mut(d);
        let parent: &[f64] = if d == 1 { llr } else { lower[d - 1].get(self.paths[p].alpha[d - 1]) };
        let child = upper[0].get_mut(idx);
        let half = child.len();
        let (a, b) = parent.split_at(half);
        if use_g {
            let partial = self.beta[d].get(self.paths[p].beta[d]);
            for j in 0..half {
                child[j] = g_node(a[j], b[j], partial[j]);
            }
        } else {
            for j in 0..half {
                child[j] = f_node(rule, a[j], b[j]);
            }
        }
    }

    /// Feeds decision `bit` for leaf `i` into the partial sums of path `p`.
    fn update_partial_sums(&mut self, p: usize, i: usize, bit: u8, levels: usize) {
        self.cur[0] = bit;
        let mut len = 1;
        for d in (1..=levels).rev() {
            if (i >> (levels - d)) & 1 == 0 {
                let mut idx = self.paths[p].beta[d];
                self.beta[d].writable(&mut idx);
                self.paths[p].beta[d] = idx;
                self.beta[d].get_mut(idx).copy_from_slice(&self.cur[..len]);
                return;
            }
            let left = self.beta[d].get(self.paths[p].beta[d]);
            for j in 0..len {
                self.tmp[j] = left[j] ^ self.cur[j];
                self.tmp[len + j] = self.cur[j];
            }
            std::mem::swap(&mut self.cur, &mut self.tmp);
            len *= 2;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::LlrVector;
    use crate::polar::{polar_encode, PolarCodeSpec};
    use crate::rng::RandomStream;

    #[test]
    fn two_bit_hand_example() {
        let spec = PolarCodeSpec::from_info_set(2, vec![0, 1], 0).unwrap();
        assert_eq!(&sc_decode(&[3.0, 5.0], &spec).unwrap()[..], &[0, 0]);
    }

    #[test]
    fn exact_f_node_matches_probability_domain() {
        let mut rng = RandomStream::new(30, 0);
        for _ in 0..1000 {
            let a = rng.normal() * 6.0;
            let b = rng.normal() * 6.0;
            let p0 = |l: f64| 1.0 / (1.0 + (-l).exp());
            let (pa, pb) = (p0(a), p0(b));
            let q = pa * pb + (1.0 - pa) * (1.0 - pb);
            let expect = (q / (1.0 - q)).ln();
            assert!((f_exact(a, b) - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn noiseless_sc_and_scl() {
        let mut rng = RandomStream::new(31, 0);
        for k in [64, 128] {
            let spec = PolarCodeSpec::for_message(k).unwrap();
            let mut dec = PolarDecoder::new();
            for _ in 0..20 {
                let info = rng.bits(spec.k_total());
                let x = polar_encode(&info, &spec).unwrap();
                let llr = LlrVector::from_bits(&x, 10.0);
                assert_eq!(sc_decode(&llr, &spec).unwrap(), info);
                let list = dec.scl(&llr, &spec, 16).unwrap();
                assert_eq!(list[0].bits, info);
                assert_eq!(list[0].metric, 0.0);
            }
        }
    }

    #[test]
    fn list_metrics_sorted() {
        let spec = PolarCodeSpec::for_message(32).unwrap();
        let mut rng = RandomStream::new(32, 0);
        let llr: Vec<f64> = (0..64).map(|_| 1.0 + 1.5 * rng.normal()).collect();
        let list = scl_decode(&llr, &spec, 8).unwrap();
        assert_eq!(list.len(), 8);
        assert!(list.windows(2).all(|w| w[0].metric <= w[1].metric));
    }

    #[test]
    fn rejects_bad_input() {
        let spec = PolarCodeSpec::for_message(32).unwrap();
        assert!(sc_decode(&[0.0; 10], &spec).is_err());
        assert!(scl_decode(&[0.0; 64], &spec, 0).is_err());
        assert!(crc_scl_decode(&[0.0; 63], &spec).is_err());
    }
}
