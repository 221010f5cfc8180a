//! Flooding sum-product decoder in the LLR domain with the exact tanh
//! check-node rule.

use super::{LdpcCodeSpec, ParityCheckMatrix};
use crate::bits::{hard_bit, BitBlock};
use crate::error::{Error, Result};

/// Variable-to-check messages are clamped to this magnitude before the
/// check-node update.
pub const LLR_CLAMP: f64 = 30.0;
/// Largest product magnitude passed to `atanh`.
const TANH_LIMIT: f64 = 1.0 - 1e-15;

/// Two-input check-node rule, `2 atanh(tanh(a/2) tanh(b/2))`.
pub fn boxplus_tanh(a: f64, b: f64) -> f64 {
    let t = ((a.clamp(-LLR_CLAMP, LLR_CLAMP) / 2.0).tanh() * (b.clamp(-LLR_CLAMP, LLR_CLAMP) / 2.0).tanh())
        .clamp(-TANH_LIMIT, TANH_LIMIT);
    2.0 * t.atanh()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LdpcOutcome {
    /// Message bits read from the systematic positions.
    pub decoded: BitBlock,
    pub iterations: usize,
    pub syndrome_ok: bool,
}

pub fn ldpc_decode_logbp(llr: &[f64], spec: &LdpcCodeSpec) -> Result<LdpcOutcome> {
    LdpcDecoder::new().decode(llr, spec, spec.max_iterations)
}

/// Edge-indexed view of a parity-check matrix.
#[derive(Debug, Clone)]
pub(super) struct EdgeLayout {
    /// Edges grouped by check node: `check_ptr[c]..check_ptr[c + 1]`.
    check_ptr: Vec<usize>,
    edge_var: Vec<usize>,
    /// Edge indices for each variable node.
    var_edges: Vec<Vec<usize>>,
    max_row: usize,
}

impl EdgeLayout {
    pub(super) fn new(h: &ParityCheckMatrix) -> Self {
        let mut check_ptr = Vec::with_capacity(h.m() + 1);
        let mut edge_var = Vec::with_capacity(h.edge_count());
        let mut var_edges = vec![Vec::new(); h.n()];
        check_ptr.push(0);
        for row in h.rows() {
            for &v in row {
                var_edges[v].push(edge_var.len());
                edge_var.push(v);
            }
            check_ptr.push(edge_var.len());
        }
        let max_row = h.rows().iter().map(Vec::len).max().unwrap_or(0);
        EdgeLayout {
            check_ptr,
            edge_var,
            var_edges,
            max_row,
        }
    }
}

/// Message buffers for one worker. The edge layout lives in the shared
/// [`LdpcCodeSpec`].
#[derive(Debug, Clone, Default)]
pub struct LdpcDecoder {
    c2v: Vec<f64>,
    v2c: Vec<f64>,
    tanh_buf: Vec<f64>,
    posterior: Vec<f64>,
    hard: Vec<u8>,
}

impl LdpcDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Runs at most `max_iterations` flooding iterations, stopping after the
    /// first iteration whose hard decision satisfies every check.
    pub fn decode(&mut self, llr: &[f64], spec: &LdpcCodeSpec, max_iterations: usize) -> Result<LdpcOutcome> {
        Error::check_len(spec.n(), llr.len())?;
        let layout = &spec.layout;
        let edges = layout.edge_var.len();
        self.c2v.clear();
        self.c2v.resize(edges, 0.0);
        self.v2c.resize(edges, 0.0);
        self.tanh_buf.resize(layout.max_row, 0.0);
        self.posterior.clear();
        self.posterior.extend_from_slice(llr);
        self.hard.resize(spec.n(), 0);

        let mut iterations = 0;
        let mut ok = false;
        while iterations < max_iterations.max(1) {
            iterations += 1;
            for (e, &v) in layout.edge_var.iter().enumerate() {
                self.v2c[e] = (self.posterior[v] - self.c2v[e]).clamp(-LLR_CLAMP, LLR_CLAMP);
            }
            for c in 0..layout.check_ptr.len() - 1 {
                self.update_check(layout.check_ptr[c], layout.check_ptr[c + 1]);
            }
            for (v, edges) in layout.var_edges.iter().enumerate() {
                self.posterior[v] = llr[v] + edges.iter().map(|&e| self.c2v[e]).sum::<f64>();
                self.hard[v] = hard_bit(self.posterior[v]);
            }
            if self.syndrome_ok(layout) {
                ok = true;
                break;
            }
        }

        let decoded = spec.info_positions().iter().map(|&c| self.hard[c]).collect();
        Ok(LdpcOutcome {
            decoded: BitBlock::from_vec_unchecked(decoded),
            iterations,
            syndrome_ok: ok,
        })
    }

    /// Hard decision of the full codeword after the last `decode` call.
    pub fn codeword(&self) -> &[u8] {
        &self.hard
    }

    fn update_check(&mut self, lo: usize, hi: usize) {
        let deg = hi - lo;
        let t = &mut self.tanh_buf[..deg];
        for (slot, &m) in t.iter_mut().zip(&self.v2c[lo..hi]) {
            *slot = (m / 2.0).tanh();
        }
        // Leave-one-out products via a forward pass then a backward pass.
        let out = &mut self.c2v[lo..hi];
        let mut acc = 1.0;
        for (o, &x) in out.iter_mut().zip(t.iter()) {
            *o = acc;
            acc *= x;
        }
        acc = 1.0;
        for (o, &x) in out.iter_mut().zip(t.iter()).rev() {
            let p = (*o * acc).clamp(-TANH_LIMIT, TANH_LIMIT);
            *o = 2.0 * p.atanh();
            acc *= x;
        }
    }

    fn syndrome_ok(&self, layout: &EdgeLayout) -> bool {
        (0..layout.check_ptr.len() - 1).all(|c| {
            layout.edge_var[layout.check_ptr[c]..layout.check_ptr[c + 1]]
                .iter()
                .fold(0u8, |acc, &v| acc ^ self.hard[v])
                == 0
        })
    }
}
