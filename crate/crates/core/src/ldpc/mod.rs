//! Regular (3, 6) LDPC codes: progressive-edge-growth construction,
//! systematic encoding and log-domain belief propagation.

mod alist;
mod decode;

pub use decode::{boxplus_tanh, ldpc_decode_logbp, LdpcDecoder, LdpcOutcome, LLR_CLAMP};

use std::collections::{HashSet, VecDeque};

use crate::bits::BitBlock;
use crate::error::{Error, Result};
use crate::rng::RandomStream;

pub const COLUMN_WEIGHT: usize = 3;
pub const ROW_WEIGHT: usize = 6;
pub const DEFAULT_MAX_ITERATIONS: usize = 200;
/// Seed used for the code tables shipped in `fixtures/`.
pub const DEFAULT_SEED: u64 = 1;
const MAX_ATTEMPTS: u64 = 64;

/// Sparse parity-check matrix kept as row and column adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityCheckMatrix {
    n: usize,
    rows: Vec<Vec<usize>>,
    cols: Vec<Vec<usize>>,
}

impl ParityCheckMatrix {
    /// Builds from per-row column lists.
    pub fn from_rows(n: usize, rows: Vec<Vec<usize>>) -> Result<Self> {
        let mut cols = vec![Vec::new(); n];
        for (r, row) in rows.iter().enumerate() {
            for &c in row {
                if c >= n {
                    return Err(Error::invalid("H", format!("row {r} references column {c} >= {n}")));
                }
                cols[c].push(r);
            }
        }
        let mut rows = rows;
        for row in rows.iter_mut() {
            row.sort_unstable();
            let before = row.len();
            row.dedup();
            if row.len() != before {
                return Err(Error::invalid("H", "duplicate entry in a row"));
            }
        }
        Ok(ParityCheckMatrix { n, rows, cols })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn cols(&self) -> &[Vec<usize>] {
        &self.cols
    }

    pub fn edge_count(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn is_regular(&self, col_weight: usize, row_weight: usize) -> bool {
        self.cols.iter().all(|c| c.len() == col_weight) && self.rows.iter().all(|r| r.len() == row_weight)
    }

    /// True when two rows share two or more columns.
    pub fn has_four_cycle(&self) -> bool {
        let mut seen = HashSet::new();
        for col in &self.cols {
            for (i, &a) in col.iter().enumerate() {
                for &b in &col[i + 1..] {
                    if !seen.insert((a.min(b), a.max(b))) {
                        return true;
                    }
                }
            }
        }
        false
    }

    /// Syndrome weight of `word`.
    pub fn syndrome_weight(&self, word: &[u8]) -> usize {
        self.rows
            .iter()
            .filter(|row| row.iter().fold(0u8, |acc, &c| acc ^ word[c]) != 0)
            .count()
    }

    pub fn to_alist(&self) -> String {
        alist::write(self)
    }

    pub fn from_alist(text: &str) -> Result<Self> {
        alist::read(text)
    }
}

/// A code ready for encoding and decoding.
#[derive(Debug, Clone)]
pub struct LdpcCodeSpec {
    h: ParityCheckMatrix,
    /// Codeword positions carrying message bits, in message order.
    info_cols: Vec<usize>,
    /// Codeword position solved by each reduced row.
    parity_cols: Vec<usize>,
    /// Reduced rows restricted to `info_cols`, bit-packed.
    parity_rows: Vec<Vec<u64>>,
    layout: decode::EdgeLayout,
    pub max_iterations: usize,
    pub seed: u64,
}

impl LdpcCodeSpec {
    /// Derives the systematic encoder from `h` by Gaussian elimination.
    /// Fails when `h` is rank deficient.
    pub fn from_matrix(h: ParityCheckMatrix, seed: u64) -> Result<Self> {
        let n = h.n();
        let m = h.m();
        let words = n.div_ceil(64);
        let mut dense: Vec<Vec<u64>> = h
            .rows()
            .iter()
            .map(|row| {
                let mut v = vec![0u64; words];
                for &c in row {
                    v[c / 64] |= 1 << (c % 64);
                }
                v
            })
            .collect();

        let mut pivots = Vec::with_capacity(m);
        let mut rank = 0;
        for col in 0..n {
            if rank == m {
                break;
            }
            let (w, bit) = (col / 64, 1u64 << (col % 64));
            let Some(p) = (rank..m).find(|&r| dense[r][w] & bit != 0) else {
                continue;
            };
            dense.swap(rank, p);
            let pivot_row = dense[rank].clone();
            for (r, row) in dense.iter_mut().enumerate() {
                if r != rank && row[w] & bit != 0 {
                    row.iter_mut().zip(&pivot_row).for_each(|(a, b)| *a ^= b);
                }
            }
            pivots.push(col);
            rank += 1;
        }
        if rank < m {
            return Err(Error::Construction(format!("parity-check matrix has rank {rank} < {m}")));
        }

        let mut is_pivot = vec![false; n];
        for &c in &pivots {
            is_pivot[c] = true;
        }
        let info_cols: Vec<usize> = (0..n).filter(|&c| !is_pivot[c]).collect();
        let k = info_cols.len();
        let parity_rows = dense
            .iter()
            .map(|row| {
                let mut packed = vec![0u64; k.div_ceil(64)];
                for (j, &c) in info_cols.iter().enumerate() {
                    if row[c / 64] >> (c % 64) & 1 == 1 {
                        packed[j / 64] |= 1 << (j % 64);
                    }
                }
                packed
            })
            .collect();

        Ok(LdpcCodeSpec {
            layout: decode::EdgeLayout::new(&h),
            h,
            info_cols,
            parity_cols: pivots,
            parity_rows,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            seed,
        })
    }

    pub fn n(&self) -> usize {
        self.h.n()
    }

    pub fn k(&self) -> usize {
        self.info_cols.len()
    }

    pub fn matrix(&self) -> &ParityCheckMatrix {
        &self.h
    }

    pub fn info_positions(&self) -> &[usize] {
        &self.info_cols
    }

    pub fn encode(&self, msg: &[u8]) -> Result<BitBlock> {
        ldpc_encode(msg, self)
    }
}

/// PEG construction of a regular (3, 6) code of length `n`.
///
/// Each new edge of a variable node goes to a check node at maximum distance
/// in the current graph (unreachable counts as infinite), then lowest degree,
/// then uniformly at random from the seeded stream. A construction that is
/// irregular, contains a 4-cycle or is rank deficient is discarded and the
/// next attempt uses stream `attempt + 1`.
pub fn ldpc_construct(n: usize, seed: u64) -> Result<LdpcCodeSpec> {
    if n < 16 || n % 2 != 0 {
        return Err(Error::invalid("n", format!("{n} must be even and at least 16")));
    }
    let mut last_reason = String::new();
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = RandomStream::new(seed, attempt);
        let Some(h) = peg(n, &mut rng) else {
            last_reason = "ran out of free check sockets".into();
            continue;
        };
        if h.has_four_cycle() {
            last_reason = "4-cycle".into();
            continue;
        }
        match LdpcCodeSpec::from_matrix(h, seed) {
            Ok(spec) => return Ok(spec),
            Err(e) => last_reason = e.to_string(),
        }
    }
    Err(Error::Construction(format!(
        "no valid (3,6) code for n = {n}, seed = {seed} after {MAX_ATTEMPTS} attempts: {last_reason}"
    )))
}

fn peg(n: usize, rng: &mut RandomStream) -> Option<ParityCheckMatrix> {
    let m = n / 2;
    let mut rows: Vec<Vec<usize>> = vec![Vec::with_capacity(ROW_WEIGHT); m];
    let mut cols: Vec<Vec<usize>> = vec![Vec::with_capacity(COLUMN_WEIGHT); n];
    let mut dist = vec![usize::MAX; m];
    let mut var_seen = vec![false; n];
    let mut queue = VecDeque::new();
    let mut best = Vec::with_capacity(m);

    for v in 0..n {
        for _ in 0..COLUMN_WEIGHT {
            // Breadth-first distances (in check layers) from v.
            dist.iter_mut().for_each(|d| *d = usize::MAX);
            var_seen.iter_mut().for_each(|s| *s = false);
            queue.clear();
            var_seen[v] = true;
            for &c in &cols[v] {
                dist[c] = 0;
                queue.push_back(c);
            }
            while let Some(c) = queue.pop_front() {
                for &u in &rows[c] {
                    if var_seen[u] {
                        continue;
                    }
                    var_seen[u] = true;
                    for &c2 in &cols[u] {
                        if dist[c2] == usize::MAX {
                            dist[c2] = dist[c] + 1;
                            queue.push_back(c2);
                        }
                    }
                }
            }

            best.clear();
            let mut best_key = (0usize, usize::MAX);
            for c in 0..m {
                if rows[c].len() >= ROW_WEIGHT || cols[v].contains(&c) {
                    continue;
                }
                // Larger distance first, then smaller degree.
                let key = (dist[c], rows[c].len());
                let better = key.0 > best_key.0 || (key.0 == best_key.0 && key.1 < best_key.1);
                if best.is_empty() || better {
                    best.clear();
                    best_key = key;
                    best.push(c);
                } else if key == best_key {
                    best.push(c);
                }
            }
            if best.is_empty() {
                return None;
            }
            let c = best[rng.below(best.len() as u64) as usize];
            rows[c].push(v);
            cols[v].push(c);
        }
    }
    let h = ParityCheckMatrix::from_rows(n, rows).ok()?;
    h.is_regular(COLUMN_WEIGHT, ROW_WEIGHT).then_some(h)
}

pub fn ldpc_encode(msg: &[u8], spec: &LdpcCodeSpec) -> Result<BitBlock> {
    Error::check_len(spec.k(), msg.len())?;
    let mut packed = vec![0u64; msg.len().div_ceil(64)];
    for (j, &b) in msg.iter().enumerate() {
        packed[j / 64] |= u64::from(b) << (j % 64);
    }
    let mut word = vec![0u8; spec.n()];
    for (&c, &b) in spec.info_cols.iter().zip(msg) {
        word[c] = b;
    }
    for (row, &c) in spec.parity_rows.iter().zip(&spec.parity_cols) {
        let ones: u32 = row.iter().zip(&packed).map(|(a, b)| (a & b).count_ones()).sum();
        word[c] = (ones & 1) as u8;
    }
    Ok(BitBlock::from_vec_unchecked(word))
}
