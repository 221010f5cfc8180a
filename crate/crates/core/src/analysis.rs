//! Finite-blocklength normal approximation and packet latency models.

use std::f64::consts::{LN_2, LOG2_E, PI, SQRT_2};
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Gaussian tail probability `P(Z > x)`.
pub fn qfunc(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// Inverse of [`qfunc`] on (0, 1).
pub fn qfunc_inv(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid("p", format!("{p} is outside (0, 1)")));
    }
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if qfunc(mid) > p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    // Newton polish; the density is Q'(x) = -phi(x).
    for _ in 0..3 {
        let pdf = (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
        if pdf < 1e-300 {
            break;
        }
        let step = (qfunc(x) - p) / pdf;
        if !step.is_finite() {
            break;
        }
        x += step;
    }
    Ok(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelKind {
    /// Complex AWGN with Gaussian input.
    GaussianInputComplex,
    /// Real AWGN with equiprobable antipodal input.
    BiawgnReal,
}

impl ChannelKind {
    pub const ALL: [ChannelKind; 2] = [ChannelKind::GaussianInputComplex, ChannelKind::BiawgnReal];

    pub fn name(self) -> &'static str {
        match self {
            ChannelKind::GaussianInputComplex => "gaussian",
            ChannelKind::BiawgnReal => "biawgn",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

impl std::fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

const HERMITE_NODES: usize = 100;

/// Gauss-Hermite nodes and weights for the weight `exp(-x^2)`.
fn hermite_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| gauss_hermite(HERMITE_NODES))
}

/// Newton iteration on the orthonormal Hermite recurrence.
fn gauss_hermite(n: usize) -> Vec<(f64, f64)> {
    let pim4 = PI.powf(-0.25);
    let mut rule = vec![(0.0, 0.0); n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    let mut z = 0.0;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * rule[0].0,
            3 => 1.91 * z - 0.91 * rule[1].0,
            _ => 2.0 * z - rule[i - 2].0,
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-14 * z.abs().max(1.0) {
                break;
            }
        }
        let w = 2.0 / (pp * pp);
        rule[i] = (z, w);
        rule[n - 1 - i] = (-z, w);
    }
    rule
}

/// `E[f(L)]` for `L ~ N(mean, var)`.
fn gaussian_expectation(mean: f64, var: f64, f: impl Fn(f64) -> f64) -> f64 {
    let s = (2.0 * var).sqrt();
    hermite_rule().iter().map(|&(x, w)| w * f(mean + s * x)).sum::<f64>() / PI.sqrt()
}

/// `log2(1 + exp(-l))` without overflow.
fn log2_one_plus_exp_neg(l: f64) -> f64 {
    ((-l).max(0.0) + (-l.abs()).exp().ln_1p()) * LOG2_E
}

/// Information density of the binary-input channel as a function of the
/// channel LLR given the transmitted symbol.
fn biawgn_density(l: f64) -> f64 {
    1.0 - log2_one_plus_exp_neg(l)
}

fn check_snr(snr: f64) -> Result<()> {
    if snr > 0.0 && snr.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("snr", format!("{snr} is not a positive finite value")))
    }
}

/// Bits per channel use. For the binary-input channel the LLR given the
/// transmitted symbol is `N(2 snr, 4 snr)`.
pub fn capacity(snr: f64, kind: ChannelKind) -> Result<f64> {
    check_snr(snr)?;
    Ok(match kind {
        ChannelKind::GaussianInputComplex => snr.ln_1p() / LN_2,
        ChannelKind::BiawgnReal => gaussian_expectation(2.0 * snr, 4.0 * snr, biawgn_density),
    })
}

/// Channel dispersion in bits squared per channel use.
pub fn dispersion(snr: f64, kind: ChannelKind) -> Result<f64> {
    check_snr(snr)?;
    Ok(match kind {
        ChannelKind::GaussianInputComplex => {
            snr / 2.0 * (snr + 2.0) / ((snr + 1.0) * (snr + 1.0)) * LOG2_E * LOG2_E
        }
        ChannelKind::BiawgnReal => {
            let c = capacity(snr, kind)?;
            gaussian_expectation(2.0 * snr, 4.0 * snr, |l| {
                let d = biawgn_density(l) - c;
                d * d
            })
        }
    })
}

fn check_query(n: usize, eps: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("n", "blocklength must be at least 1"));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid("per", format!("{eps} is outside (0, 1)")));
    }
    Ok(())
}

/// `R* = C - sqrt(V/n) Q^-1(eps) + log2(n) / (2n)`.
pub fn normal_approx_rate(n: usize, eps: f64, snr: f64, kind: ChannelKind) -> Result<f64> {
    check_query(n, eps)?;
    let c = capacity(snr, kind)?;
    let v = dispersion(snr, kind)?;
    let nf = n as f64;
    Ok(c - (v / nf).sqrt() * qfunc_inv(eps)? + nf.log2() / (2.0 * nf))
}

/// Packet error probability at which `k` bits fit in `n` channel uses,
/// from the same expansion. Clamped to the open unit interval.
pub fn normal_approx_per(n: usize, k: usize, snr: f64, kind: ChannelKind) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("n", "blocklength must be at least 1"));
    }
    let c = capacity(snr, kind)?;
    let v = dispersion(snr, kind)?;
    let nf = n as f64;
    let rate = k as f64 / nf;
    let eps = qfunc((c - rate + nf.log2() / (2.0 * nf)) * (nf / v).sqrt());
    Ok(eps.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON))
}

const MAX_BLOCKLENGTH: usize = 1 << 40;

/// Smallest `n` whose normal-approximation rate reaches `fraction` of
/// capacity, assuming the fraction grows with `n`.
pub fn min_blocklength(fraction: f64, eps: f64, snr: f64, kind: ChannelKind) -> Result<usize> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid("fraction", format!("{fraction} is outside (0, 1)")));
    }
    check_query(1, eps)?;
    let c = capacity(snr, kind)?;
    let reaches = |n: usize| -> Result<bool> { Ok(normal_approx_rate(n, eps, snr, kind)? / c >= fraction) };
    if reaches(1)? {
        return Ok(1);
    }
    let mut hi = 2;
    while !reaches(hi)? {
        if hi >= MAX_BLOCKLENGTH {
            return Err(Error::invalid(
                "fraction",
                format!("{fraction} of capacity is not reached below n = {MAX_BLOCKLENGTH}"),
            ));
        }
        hi *= 2;
    }
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if reaches(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// One row of the bound curve CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundPoint {
    pub kind: ChannelKind,
    pub n: usize,
    pub rate: f64,
    pub fraction: f64,
    pub per: f64,
}

pub fn bound_curve(ns: impl IntoIterator<Item = usize>, eps: f64, snr: f64, kind: ChannelKind) -> Result<Vec<BoundPoint>> {
    let c = capacity(snr, kind)?;
    ns.into_iter()
        .map(|n| {
            let rate = normal_approx_rate(n, eps, snr, kind)?;
            Ok(BoundPoint {
                kind,
                n,
                rate,
                fraction: rate / c,
                per: eps,
            })
        })
        .collect()
}

pub const BOUND_CSV_HEADER: &str = "kind,n,rate,fraction,per";

impl BoundPoint {
    pub fn csv_row(&self) -> String {
        format!("{},{},{},{},{}", self.kind, self.n, self.rate, self.fraction, self.per)
    }
}

/// `T = L / (2 B S)` seconds for `l` bits over `b_hz` at `s` bits per
/// channel use.
pub fn eq1_latency(l: f64, b_hz: f64, s: f64) -> Result<f64> {
    for (name, v) in [("payload", l), ("bandwidth", b_hz), ("spectral efficiency", s)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::invalid(name, format!("{v} is not positive")));
        }
    }
    Ok(l / (2.0 * b_hz * s))
}

/// OFDM numerology of an IEEE 802.11 mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StandardRow {
    pub name: &'static str,
    pub bandwidth_mhz: u32,
    pub n_fft: u32,
    pub n_ds: u32,
    pub n_cp: u32,
    /// Preamble and header symbols.
    pub n_ps: u32,
}

pub const STANDARD_ROWS: [StandardRow; 5] = [
    StandardRow { name: "IEEE 802.11a/g", bandwidth_mhz: 20, n_fft: 64, n_ds: 48, n_cp: 16, n_ps: 5 },
    StandardRow { name: "IEEE 802.11n", bandwidth_mhz: 20, n_fft: 64, n_ds: 52, n_cp: 16, n_ps: 7 },
    StandardRow { name: "IEEE 802.11n", bandwidth_mhz: 40, n_fft: 128, n_ds: 108, n_cp: 32, n_ps: 7 },
    StandardRow { name: "IEEE 802.11ac", bandwidth_mhz: 80, n_fft: 256, n_ds: 234, n_cp: 64, n_ps: 10 },
    StandardRow { name: "IEEE 802.11ac", bandwidth_mhz: 160, n_fft: 512, n_ds: 468, n_cp: 128, n_ps: 10 },
];

/// Service and tail bits added to every PSDU.
pub const SERVICE_TAIL_BITS: u32 = 22;

impl StandardRow {
    /// Symbol duration in microseconds, cyclic prefix included.
    pub fn symbol_us(&self) -> f64 {
        f64::from(self.n_fft + self.n_cp) / f64::from(self.bandwidth_mhz)
    }

    pub fn data_symbols(&self, payload_bits: u32) -> u32 {
        (payload_bits + SERVICE_TAIL_BITS).div_ceil(self.n_ds)
    }
}

/// Uncoded single-stream BPSK packet duration in microseconds.
pub fn packet_duration_80211(row: &StandardRow, payload_bits: u32) -> f64 {
    f64::from(row.n_ps + row.data_symbols(payload_bits)) * row.symbol_us()
}
