//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use shortlink::conv::{conv_encode, ConvCodeSpec};
use shortlink::polar::polar_transform;
use shortlink::RandomStream;

fn f(a: f64, b: f64) -> f64 {
    a.signum() * b.signum() * a.abs().min(b.abs())
}

/// Decision LLR of `u[i]` given the channel LLRs and the earlier bits,
/// written directly from the recursive structure of `x = u F^{(x)n}`.
pub fn polar_tree_llr(y: &[f64], u: &[u8], i: usize) -> f64 {
    if y.len() == 1 {
        return y[0];
    }
    let h = y.len() / 2;
    if i < h {
        let ya: Vec<f64> = (0..h).map(|j| f(y[j], y[j + h])).collect();
        polar_tree_llr(&ya, u, i)
    } else {
        let mut va = u[..h].to_vec();
        polar_transform(&mut va);
        let yb: Vec<f64> = (0..h)
            .map(|j| y[j + h] + if va[j] == 0 { y[j] } else { -y[j] })
            .collect();
        polar_tree_llr(&yb, &u[h..], i - h)
    }
}

/// Path metric of a complete `u`: the sum of |LLR| over decisions that
/// disagree with the LLR sign.
pub fn polar_tree_metric(y: &[f64], u: &[u8]) -> f64 {
    (0..u.len())
        .map(|i| {
            let l = polar_tree_llr(y, u, i);
            if (l < 0.0) != (u[i] == 1) {
                l.abs()
            } else {
                0.0
            }
        })
        .sum()
}

/// BPSK over AWGN with variance `sigma2`, returned as channel LLRs.
pub fn noisy_llr(codeword: &[u8], sigma2: f64, rng: &mut RandomStream) -> Vec<f64> {
    codeword
        .iter()
        .map(|&c| {
            let x = 1.0 - 2.0 * f64::from(c);
            2.0 * (x + sigma2.sqrt() * rng.normal()) / sigma2
        })
        .collect()
}

/// Every `k`-bit message with its terminated CC codeword.
pub fn cc_codebook(k: usize) -> Vec<(Vec<u8>, Vec<u8>)> {
    let spec = ConvCodeSpec::default();
    (0..1u32 << k)
        .map(|m| {
            let msg: Vec<u8> = (0..k).map(|i| ((m >> i) & 1) as u8).collect();
            let code = conv_encode(&msg, &spec).into_vec();
            (msg, code)
        })
        .collect()
}

/// Maximum-likelihood message: the codeword with the largest correlation.
pub fn ml_decode<'a>(codebook: &'a [(Vec<u8>, Vec<u8>)], llr: &[f64]) -> &'a [u8] {
    let corr = |code: &[u8]| -> f64 { llr.iter().zip(code).map(|(l, &c)| if c == 0 { *l } else { -*l }).sum() };
    &codebook
        .iter()
        .max_by(|a, b| corr(&a.1).total_cmp(&corr(&b.1)))
        .unwrap()
        .0
}

pub fn xor(a: &[u8], b: &[u8]) -> Vec<u8> {
    a.iter().zip(b).map(|(x, y)| x ^ y).collect()
}
