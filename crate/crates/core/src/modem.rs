//! Gray-mapped BPSK / QPSK / 16-QAM / 64-QAM mapping and soft demapping.
//!
//! Square constellations are built from two independent PAM axes. The first
//! half of each symbol's bits drives the in-phase axis, the second half the
//! quadrature axis. Per axis, the level tables are the 802.11a Gray tables
//! mirrored so that a leading 0 bit maps to a positive amplitude; this keeps
//! BPSK at 0 -> +1, consistent with the LLR sign convention.

use num_complex::Complex64;

use crate::bits::{BitBlock, LlrVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModulationScheme {
    Bpsk,
    Qpsk,
    Qam16,
    Qam64,
}

/// 2-bit axis pattern (MSB first) -> unnormalized amplitude.
const PAM4: [f64; 4] = [3.0, 1.0, -3.0, -1.0];
/// 3-bit axis pattern (MSB first) -> unnormalized amplitude.
const PAM8: [f64; 8] = [7.0, 5.0, 1.0, 3.0, -7.0, -5.0, -1.0, -3.0];

impl ModulationScheme {
    pub const ALL: [ModulationScheme; 4] = [
        ModulationScheme::Bpsk,
        ModulationScheme::Qpsk,
        ModulationScheme::Qam16,
        ModulationScheme::Qam64,
    ];

    pub fn bits_per_symbol(self) -> usize {
        match self {
            ModulationScheme::Bpsk => 1,
            ModulationScheme::Qpsk => 2,
            ModulationScheme::Qam16 => 4,
            ModulationScheme::Qam64 => 6,
        }
    }

    /// Scale giving unit average symbol energy.
    pub fn normalization(self) -> f64 {
        match self {
            ModulationScheme::Bpsk => 1.0,
            ModulationScheme::Qpsk => std::f64::consts::FRAC_1_SQRT_2,
            ModulationScheme::Qam16 => 1.0 / 10f64.sqrt(),
            ModulationScheme::Qam64 => 1.0 / 42f64.sqrt(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModulationScheme::Bpsk => "bpsk",
            ModulationScheme::Qpsk => "qpsk",
            ModulationScheme::Qam16 => "qam16",
            ModulationScheme::Qam64 => "qam64",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "bpsk" => Some(ModulationScheme::Bpsk),
            "qpsk" => Some(ModulationScheme::Qpsk),
            "qam16" | "16qam" => Some(ModulationScheme::Qam16),
            "qam64" | "64qam" => Some(ModulationScheme::Qam64),
            _ => None,
        }
    }

    /// Bits carried per real axis (BPSK uses only the in-phase axis).
    fn axis_bits(self) -> usize {
        match self {
            ModulationScheme::Bpsk => 1,
            other => other.bits_per_symbol() / 2,
        }
    }

    /// Unnormalized amplitude table indexed by the axis bit pattern.
    fn axis_levels(self) -> &'static [f64] {
        match self.axis_bits() {
            1 => &[1.0, -1.0],
            2 => &PAM4,
            _ => &PAM8,
        }
    }

    /// Maps one symbol's worth of bits.
    pub fn map(self, bits: &[u8]) -> Complex64 {
        debug_assert_eq!(bits.len(), self.bits_per_symbol());
        let scale = self.normalization();
        let levels = self.axis_levels();
        let axis = |chunk: &[u8]| levels[chunk.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize)];
        match self {
            ModulationScheme::Bpsk => Complex64::new(levels[bits[0] as usize], 0.0),
            _ => {
                let half = self.axis_bits();
                Complex64::new(axis(&bits[..half]) * scale, axis(&bits[half..]) * scale)
            }
        }
    }

    /// Every constellation point with its bit label, in label order.
    pub fn constellation(self) -> Vec<(BitBlock, Complex64)> {
        let b = self.bits_per_symbol();
        (0..1usize << b)
            .map(|label| {
                let bits: Vec<u8> = (0..b).rev().map(|i| ((label >> i) & 1) as u8).collect();
                let point = self.map(&bits);
                (BitBlock::from_vec_unchecked(bits), point)
            })
            .collect()
    }
}

impl std::fmt::Display for ModulationScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

pub fn modulate(bits: &[u8], scheme: ModulationScheme) -> Result<Vec<Complex64>> {
    let b = scheme.bits_per_symbol();
    if bits.len() % b != 0 {
        return Err(Error::invalid(
            "bits",
            format!("length {} is not a multiple of {b}", bits.len()),
        ));
    }
    Ok(bits.chunks_exact(b).map(|c| scheme.map(c)).collect())
}

/// Soft demapping with noise variance `noise_var` per real dimension.
///
/// BPSK and QPSK produce exact LLRs; 16/64-QAM use the max-log rule
/// `(min_{s: bit=1} |y - s|^2 - min_{s: bit=0} |y - s|^2) / (2 sigma^2)`,
/// evaluated per axis.
pub fn demodulate(symbols: &[Complex64], scheme: ModulationScheme, noise_var: f64) -> Result<LlrVector> {
    if !(noise_var > 0.0) {
        return Err(Error::invalid("noise_var", format!("{noise_var} is not positive")));
    }
    let mut out = Vec::with_capacity(symbols.len() * scheme.bits_per_symbol());
    let inv = 1.0 / noise_var;
    match scheme {
        ModulationScheme::Bpsk => out.extend(symbols.iter().map(|y| 2.0 * y.re * inv)),
        ModulationScheme::Qpsk => {
            let s = scheme.normalization();
            for y in symbols {
                out.push(2.0 * s * y.re * inv);
                out.push(2.0 * s * y.im * inv);
            }
        }
        _ => {
            let scale = scheme.normalization();
            let levels: Vec<f64> = scheme.axis_levels().iter().map(|a| a * scale).collect();
            let nbits = scheme.axis_bits();
            for y in symbols {
                axis_maxlog(y.re, &levels, nbits, inv, &mut out);
                axis_maxlog(y.im, &levels, nbits, inv, &mut out);
            }
        }
    }
    Ok(LlrVector::new(out))
}

fn axis_maxlog(y: f64, levels: &[f64], nbits: usize, inv_noise_var: f64, out: &mut Vec<f64>) {
    for bit in 0..nbits {
        let shift = nbits - 1 - bit;
        let mut best = [f64::INFINITY; 2];
        for (label, &a) in levels.iter().enumerate() {
            let d = (y - a) * (y - a);
            let v = (label >> shift) & 1;
            if d < best[v] {
                best[v] = d;
            }
        }
        out.push((best[1] - best[0]) * 0.5 * inv_noise_var);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::hard_decision;
    use crate::rng::RandomStream;

    #[test]
    fn bpsk_mapping() {
        let s = modulate(&[0, 1, 0], ModulationScheme::Bpsk).unwrap();
        assert_eq!(s, vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0)]);
    }

    #[test]
    fn qpsk_zero_symbol() {
        let s = modulate(&[0, 0], ModulationScheme::Qpsk).unwrap()[0];
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s - Complex64::new(r, r)).norm() < 1e-15);
    }

    #[test]
    fn unit_average_energy() {
        for scheme in ModulationScheme::ALL {
            let pts = scheme.constellation();
            let e = pts.iter().map(|(_, p)| p.norm_sqr()).sum::<f64>() / pts.len() as f64;
            assert!((e - 1.0).abs() < 1e-12, "{scheme}: {e}");
        }
    }

    #[test]
    fn gray_neighbors_differ_in_one_bit() {
        for scheme in ModulationScheme::ALL {
            let pts = scheme.constellation();
            let dmin = pts
                .iter()
                .enumerate()
                .flat_map(|(i, a)| pts[i + 1..].iter().map(move |b| (a.1 - b.1).norm()))
                .fold(f64::INFINITY, f64::min);
            for (i, (la, pa)) in pts.iter().enumerate() {
                for (lb, pb) in &pts[i + 1..] {
                    if ((pa - pb).norm() - dmin).abs() < 1e-9 {
                        let diff = la.iter().zip(lb.iter()).filter(|(x, y)| x != y).count();
                        assert_eq!(diff, 1, "{scheme}: {la} vs {lb}");
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(modulate(&[0, 1, 1], ModulationScheme::Qpsk).is_err());
        assert!(demodulate(&[Complex64::new(1.0, 0.0)], ModulationScheme::Bpsk, 0.0).is_err());
    }

    #[test]
    fn bpsk_llr_formula() {
        let l = demodulate(&[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.3)], ModulationScheme::Bpsk, 0.5).unwrap();
        assert_eq!(&l[..], &[4.0, 0.0]);
    }

    /// Exact per-bit LLR by log-sum-exp over the whole constellation.
    fn exact_llrs(y: Complex64, scheme: ModulationScheme, noise_var: f64) -> Vec<f64> {
        let pts = scheme.constellation();
        (0..scheme.bits_per_symbol())
            .map(|bit| {
                let mut acc = [Vec::new(), Vec::new()];
                for (label, p) in &pts {
                    acc[label[bit] as usize].push(-(y - p).norm_sqr() / (2.0 * noise_var));
                }
                let lse = |v: &[f64]| {
                    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
                };
                lse(&acc[0]) - lse(&acc[1])
            })
            .collect()
    }

    #[test]
    fn maxlog_sign_agrees_with_exact() {
        let mut rng = RandomStream::new(17, 0);
        for scheme in [ModulationScheme::Qam16, ModulationScheme::Qam64] {
            let noise_var = 0.02;
            let mut checked = 0;
            for _ in 0..200 {
                let y = Complex64::new(rng.uniform() * 2.4 - 1.2, rng.uniform() * 2.4 - 1.2);
                let approx = demodulate(&[y], scheme, noise_var).unwrap();
                for (a, e) in approx.iter().zip(exact_llrs(y, scheme, noise_var)) {
                    if e.abs() > 0.5 {
                        assert_eq!(a.signum(), e.signum(), "{scheme} at {y}");
                        checked += 1;
                    }
                }
            }
            assert!(checked > 100);
        }
    }

    #[test]
    fn qpsk_llr_is_exact() {
        let mut rng = RandomStream::new(18, 0);
        for _ in 0..50 {
            let y = Complex64::new(rng.normal(), rng.normal());
            let got = demodulate(&[y], ModulationScheme::Qpsk, 0.7).unwrap();
            for (a, e) in got.iter().zip(exact_llrs(y, ModulationScheme::Qpsk, 0.7)) {
                assert!((a - e).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn low_noise_roundtrip() {
        let mut rng = RandomStream::new(19, 0);
        for scheme in ModulationScheme::ALL {
            for _ in 0..200 {
                let bits = rng.bits(48 * scheme.bits_per_symbol());
                let mut syms = modulate(&bits, scheme).unwrap();
                for s in syms.iter_mut() {
                    *s += Complex64::new(rng.normal(), rng.normal()) * 1e-2;
                }
                let llr = demodulate(&syms, scheme, 1e-4).unwrap();
                assert_eq!(hard_decision(&llr), bits);
            }
        }
    }
}
