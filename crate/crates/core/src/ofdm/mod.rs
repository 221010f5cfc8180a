//! OFDM symbol mapping, the block-coded and bit-coded transceiver pipelines,
//! and the framed 802.11a-style PPDU with packet detection.

mod frame;
mod pipeline;

pub use frame::{
    autocorrelation_metric, build_frame, decode_signal_field, detect_and_classify, detect_frame,
    long_training_symbol, ltf_samples, stf_samples, training_fixture_text, Detection,
    DetectorParams, ErrorClass, FrameOutcome, FrameReceiver, FrameTruth, SignalField, LTF_LEN,
    PREAMBLE_LEN, STF_LEN,
};
pub use pipeline::{
    receive_bit_coded, receive_block_coded, transmit_bit_coded, transmit_block_coded,
    PayloadCodec, PipelineEvent, Transceiver,
};

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::bits::BitBlock;
use crate::error::{Error, Result};

/// Pilot tones and their fixed polarity.
pub const PILOTS: [(i32, f64); 4] = [(-21, 1.0), (-7, 1.0), (7, 1.0), (21, -1.0)];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OfdmConfig {
    pub n_fft: usize,
    pub n_cp: usize,
    pub n_ds: usize,
    pub bandwidth_hz: f64,
}

impl Default for OfdmConfig {
    fn default() -> Self {
        OfdmConfig {
            n_fft: 64,
            n_cp: 16,
            n_ds: 48,
            bandwidth_hz: 20e6,
        }
    }
}

impl OfdmConfig {
    pub fn with_bandwidth_mhz(mhz: f64) -> Self {
        OfdmConfig {
            bandwidth_hz: mhz * 1e6,
            ..Self::default()
        }
    }

    pub fn symbol_len(&self) -> usize {
        self.n_fft + self.n_cp
    }

    /// Seconds per OFDM symbol, cyclic prefix included.
    pub fn symbol_duration(&self) -> f64 {
        self.symbol_len() as f64 / self.bandwidth_hz
    }

    /// Signed tone indices carrying data, ascending.
    pub fn data_tones(&self) -> Vec<i32> {
        (-26..=26)
            .filter(|&k| k != 0 && !PILOTS.iter().any(|&(p, _)| p == k))
            .collect()
    }

    fn bin(&self, tone: i32) -> usize {
        tone.rem_euclid(self.n_fft as i32) as usize
    }

    fn validate(&self) -> Result<()> {
        if self.n_fft != 64 || self.n_ds != 48 {
            return Err(Error::invalid(
                "ofdm",
                "only the 64-point, 48-data-tone layout is implemented",
            ));
        }
        if self.n_cp > self.n_fft || !(self.bandwidth_hz > 0.0) {
            return Err(Error::invalid("ofdm", "bad cyclic prefix or bandwidth"));
        }
        Ok(())
    }
}

/// Zero-pads to a whole number of OFDM symbols; returns the pad length.
pub fn add_padding_bits(coded: &[u8], n_ds: usize, bits_per_symbol: usize) -> (BitBlock, usize) {
    let per_symbol = n_ds * bits_per_symbol;
    let padded_len = coded.len().div_ceil(per_symbol) * per_symbol;
    let mut v = coded.to_vec();
    v.resize(padded_len, 0);
    (BitBlock::from_vec_unchecked(v), padded_len - coded.len())
}

pub fn remove_padding<T: Clone>(padded: &[T], pad_len: usize) -> Vec<T> {
    padded[..padded.len() - pad_len].to_vec()
}

/// Unitary (1/sqrt(N)) transforms plus the tone map for one configuration.
#[derive(Clone)]
pub struct OfdmEngine {
    cfg: OfdmConfig,
    data_bins: Vec<usize>,
    pilot_bins: Vec<(usize, f64)>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl std::fmt::Debug for OfdmEngine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OfdmEngine").field("cfg", &self.cfg).finish()
    }
}

impl OfdmEngine {
    pub fn new(cfg: OfdmConfig) -> Result<Self> {
        cfg.validate()?;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(cfg.n_fft);
        let inverse = planner.plan_fft_inverse(cfg.n_fft);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Ok(OfdmEngine {
            data_bins: cfg.data_tones().into_iter().map(|k| cfg.bin(k)).collect(),
            pilot_bins: PILOTS.iter().map(|&(k, v)| (cfg.bin(k), v)).collect(),
            cfg,
            forward,
            inverse,
            buf: vec![Complex64::default(); cfg.n_fft],
            scratch: vec![Complex64::default(); scratch_len],
        })
    }

    pub fn config(&self) -> &OfdmConfig {
        &self.cfg
    }

    /// Unitary inverse transform of a full frequency-domain vector, with the
    /// cyclic prefix prepended.
    pub fn synthesize(&mut self, freq: &[Complex64], out: &mut Vec<Complex64>) {
        let n = self.cfg.n_fft;
        self.buf.copy_from_slice(freq);
        self.inverse.process_with_scratch(&mut self.buf, &mut self.scratch);
        let scale = 1.0 / (n as f64).sqrt();
        self.buf.iter_mut().for_each(|x| *x *= scale);
        out.extend_from_slice(&self.buf[n - self.cfg.n_cp..]);
        out.extend_from_slice(&self.buf);
    }

    /// One OFDM symbol from exactly `n_ds` data values.
    pub fn modulate_symbol(&mut self, data: &[Complex64], out: &mut Vec<Complex64>) {
        debug_assert_eq!(data.len(), self.cfg.n_ds);
        let mut freq = vec![Complex64::default(); self.cfg.n_fft];
        for (&bin, &d) in self.data_bins.iter().zip(data) {
            freq[bin] = d;
        }
        for &(bin, v) in &self.pilot_bins {
            freq[bin] = Complex64::new(v, 0.0);
        }
        self.synthesize(&freq, out);
    }

    /// Drops the cyclic prefix of one received symbol and returns its full
    /// unitary spectrum in `self.buf`.
    fn analyze(&mut self, symbol: &[Complex64]) -> &[Complex64] {
        self.buf.copy_from_slice(&symbol[self.cfg.n_cp..]);
        self.forward.process_with_scratch(&mut self.buf, &mut self.scratch);
        let scale = 1.0 / (self.cfg.n_fft as f64).sqrt();
        self.buf.iter_mut().for_each(|x| *x *= scale);
        &self.buf
    }

    /// Data-tone values of one received symbol (`n_fft + n_cp` samples).
    pub fn demodulate_symbol(&mut self, symbol: &[Complex64], out: &mut Vec<Complex64>) {
        debug_assert_eq!(symbol.len(), self.cfg.symbol_len());
        let bins = std::mem::take(&mut self.data_bins);
        let spectrum = self.analyze(symbol);
        out.extend(bins.iter().map(|&b| spectrum[b]));
        self.data_bins = bins;
    }

    pub fn modulate(&mut self, symbols: &[Complex64]) -> Result<Vec<Complex64>> {
        let n_ds = self.cfg.n_ds;
        if symbols.len() % n_ds != 0 {
            return Err(Error::invalid(
                "symbols",
                format!("{} values do not fill whole OFDM symbols of {n_ds}", symbols.len()),
            ));
        }
        let mut out = Vec::with_capacity(symbols.len() / n_ds * self.cfg.symbol_len());
        for chunk in symbols.chunks_exact(n_ds) {
            self.modulate_symbol(chunk, &mut out);
        }
        Ok(out)
    }

    pub fn demodulate(&mut self, wf: &[Complex64]) -> Result<Vec<Complex64>> {
        let len = self.cfg.symbol_len();
        if wf.len() % len != 0 {
            return Err(Error::invalid(
                "waveform",
                format!("{} samples is not a multiple of {len}", wf.len()),
            ));
        }
        let mut out = Vec::with_capacity(wf.len() / len * self.cfg.n_ds);
        for sym in wf.chunks_exact(len) {
            self.demodulate_symbol(sym, &mut out);
        }
        Ok(out)
    }
}

/// Maps `symbols` (a multiple of `n_ds` values) to time-domain OFDM symbols.
pub fn ofdm_modulate_symbols(symbols: &[Complex64], cfg: &OfdmConfig) -> Result<Vec<Complex64>> {
    OfdmEngine::new(*cfg)?.modulate(symbols)
}

/// Inverse of [`ofdm_modulate_symbols`]; pilots are discarded.
pub fn ofdm_demodulate_symbols(wf: &[Complex64], cfg: &OfdmConfig) -> Result<Vec<Complex64>> {
    OfdmEngine::new(*cfg)?.demodulate(wf)
}

/// Little-endian `f32` interleaved I/Q, the waveform dump format.
pub fn write_waveform_f32le<W: std::io::Write>(mut w: W, samples: &[Complex64]) -> std::io::Result<()> {
    let mut bytes = Vec::with_capacity(samples.len() * 8);
    for s in samples {
        bytes.extend_from_slice(&(s.re as f32).to_le_bytes());
        bytes.extend_from_slice(&(s.im as f32).to_le_bytes());
    }
    w.write_all(&bytes)
}
