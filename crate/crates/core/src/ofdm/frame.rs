use num_complex::Complex64;

use super::{OfdmConfig, OfdmEngine, Transceiver};
use crate::bits::{count_errors, parity, BitBlock, ErrorCount};
use crate::channel::awgn;
use crate::conv::{conv_encode, viterbi_decode, ConvCodeSpec};
use crate::error::{Error, Result};
use crate::modem::{demodulate, modulate, ModulationScheme};
use crate::rng::RandomStream;

pub const STF_LEN: usize = 160;
pub const LTF_LEN: usize = 160;
/// Training fields plus the SIGNAL symbol.
pub const PREAMBLE_LEN: usize = STF_LEN + LTF_LEN + 80;

const SIGNAL_BITS: usize = 18;

/// Short training tones -26..=26 in units of (1 + j), before scaling.
const STF_TONES: [i8; 53] = [
    0, 0, 1, 0, 0, 0, -1, 0, 0, 0, 1, 0, 0, 0, -1, 0, 0, 0, -1, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, -1, 0,
    0, 0, -1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0,
];

/// Long training tones -26..=26.
const LTF_TONES: [i8; 53] = [
    1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1, 0, 1, -1, -1,
    1, 1, -1, 1, -1, 1, -1, -1, -1, -1, -1, 1, 1, -1, -1, 1, -1, 1, -1, 1, 1, 1, 1,
];

fn training_symbol(tones: &[i8; 53], value: Complex64) -> Vec<Complex64> {
    let mut freq = vec![Complex64::default(); 64];
    for (i, &t) in tones.iter().enumerate() {
        let k = i as i32 - 26;
        freq[k.rem_euclid(64) as usize] = value * f64::from(t);
    }
    let mut engine = OfdmEngine::new(OfdmConfig {
        n_cp: 0,
        ..OfdmConfig::default()
    })
    .expect("default layout");
    let mut out = Vec::with_capacity(64);
    engine.synthesize(&freq, &mut out);
    out
}

/// Ten repetitions of the 16-sample short training pattern.
pub fn stf_samples() -> Vec<Complex64> {
    let scale = (13.0f64 / 6.0).sqrt();
    let period = training_symbol(&STF_TONES, Complex64::new(scale, scale));
    (0..STF_LEN).map(|i| period[i % 64]).collect()
}

/// One 64-sample long training symbol.
pub fn long_training_symbol() -> Vec<Complex64> {
    training_symbol(&LTF_TONES, Complex64::new(1.0, 0.0))
}

/// 32-sample guard interval followed by two long training symbols.
pub fn ltf_samples() -> Vec<Complex64> {
    let sym = long_training_symbol();
    let mut out = sym[32..].to_vec();
    out.extend_from_slice(&sym);
    out.extend_from_slice(&sym);
    out
}

/// Training sequences as `field index re im` lines.
pub fn training_fixture_text() -> String {
    let mut s = String::from("# field index re im\n");
    for (name, samples) in [("stf", stf_samples()), ("ltf", ltf_samples())] {
        for (i, x) in samples.iter().enumerate() {
            s.push_str(&format!("{name} {i} {} {}\n", x.re, x.im));
        }
    }
    s
}

/// The 24-bit SIGNAL field: rate, reserved, length, parity and tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignalField {
    pub rate: u8,
    /// Payload length in octets.
    pub length: u16,
}

impl SignalField {
    pub fn for_payload(scheme: ModulationScheme, message_bits: usize) -> Result<Self> {
        let length = message_bits.div_ceil(8);
        if length >= 1 << 12 {
            return Err(Error::invalid("length", format!("{length} octets do not fit in 12 bits")));
        }
        Ok(SignalField {
            rate: Self::rate_code(scheme),
            length: length as u16,
        })
    }

    fn rate_code(scheme: ModulationScheme) -> u8 {
        match scheme {
            ModulationScheme::Bpsk => 0b1101,
            ModulationScheme::Qpsk => 0b0101,
            ModulationScheme::Qam16 => 0b1001,
            ModulationScheme::Qam64 => 0b0001,
        }
    }

    /// All 24 bits in transmission order, rate bits R1..R4 first.
    pub fn to_bits(&self) -> [u8; 24] {
        let mut b = [0u8; 24];
        for i in 0..4 {
            b[i] = (self.rate >> (3 - i)) & 1;
        }
        for i in 0..12 {
            b[5 + i] = ((self.length >> i) & 1) as u8;
        }
        b[17] = parity(&b[..17]);
        b
    }

    /// Parses the first 18 bits; any trailing bits must be the zero tail.
    /// `None` when parity, the reserved bit, the rate code or the tail is
    /// invalid.
    pub fn from_bits(bits: &[u8]) -> Option<Self> {
        if bits.len() < SIGNAL_BITS || bits[SIGNAL_BITS..].iter().any(|&b| b != 0) {
            return None;
        }
        if parity(&bits[..SIGNAL_BITS]) != 0 || bits[4] != 0 {
            return None;
        }
        let rate = bits[..4].iter().fold(0u8, |acc, &b| (acc << 1) | b);
        if !ModulationScheme::ALL.iter().any(|&s| Self::rate_code(s) == rate) {
            return None;
        }
        let length = (0..12).fold(0u16, |acc, i| acc | (u16::from(bits[5 + i]) << i));
        Some(SignalField { rate, length })
    }

    fn tones(&self) -> Vec<Complex64> {
        let coded = conv_encode(&self.to_bits()[..SIGNAL_BITS], &ConvCodeSpec::default());
        modulate(&coded, ModulationScheme::Bpsk).expect("one bit per symbol")
    }
}

/// Decodes the SIGNAL symbol (80 samples, CP included).
pub fn decode_signal_field(symbol: &[Complex64], sigma2: f64, engine: &mut OfdmEngine) -> Result<Option<SignalField>> {
    Error::check_len(engine.config().symbol_len(), symbol.len())?;
    let mut tones = Vec::with_capacity(48);
    engine.demodulate_symbol(symbol, &mut tones);
    let llr = demodulate(&tones, ModulationScheme::Bpsk, sigma2)?;
    let bits = viterbi_decode(&llr, SIGNAL_BITS, &ConvCodeSpec::default())?;
    Ok(SignalField::from_bits(&bits))
}

/// Preamble, SIGNAL symbol and payload.
pub fn build_frame(payload_wf: &[Complex64], signal: &SignalField, engine: &mut OfdmEngine) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(PREAMBLE_LEN + payload_wf.len());
    out.extend(stf_samples());
    out.extend(ltf_samples());
    engine.modulate_symbol(&signal.tones(), &mut out);
    out.extend_from_slice(payload_wf);
    out
}

/// Packet detector settings.
///
/// Detection fires where the lag-16 normalized autocorrelation over
/// `window` samples stays at or above `threshold` for `min_run`
/// consecutive offsets. Timing then comes from the peak of the
/// cross-correlation with both long training symbols, searched from
/// `search_back` samples before to `search_ahead` samples after the
/// trigger.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorParams {
    pub window: usize,
    pub threshold: f64,
    pub min_run: usize,
    pub search_back: usize,
    pub search_ahead: usize,
    /// Largest timing error still counted as a detection.
    pub timing_tolerance: usize,
}

impl Default for DetectorParams {
    fn default() -> Self {
        DetectorParams {
            window: 96,
            threshold: 0.25,
            min_run: 32,
            search_back: 32,
            search_ahead: 160,
            timing_tolerance: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    /// First offset of the autocorrelation run.
    pub trigger: usize,
    /// Estimated first sample of the frame.
    pub start: usize,
}

/// Normalized lag-16 autocorrelation at every offset with a full window.
pub fn autocorrelation_metric(rx: &[Complex64], window: usize) -> Vec<f64> {
    const LAG: usize = 16;
    if window == 0 || rx.len() < window + LAG {
        return Vec::new();
    }
    let count = rx.len() - window - LAG + 1;
    let mut out = Vec::with_capacity(count);
    let mut p = Complex64::default();
    let (mut e1, mut e2) = (0.0, 0.0);
    for k in 0..window {
        p += rx[k] * rx[k + LAG].conj();
        e1 += rx[k].norm_sqr();
        e2 += rx[k + LAG].norm_sqr();
    }
    for d in 0..count {
        let denom = (e1 * e2).sqrt();
        out.push(if denom > 0.0 { p.norm() / denom } else { 0.0 });
        if d + 1 < count {
            let (a, b) = (d, d + window);
            p += rx[b] * rx[b + LAG].conj() - rx[a] * rx[a + LAG].conj();
            e1 += rx[b].norm_sqr() - rx[a].norm_sqr();
            e2 += rx[b + LAG].norm_sqr() - rx[a + LAG].norm_sqr();
        }
    }
    out
}

pub fn detect_frame(rx: &[Complex64], params: &DetectorParams) -> Option<Detection> {
    let metric = autocorrelation_metric(rx, params.window);
    let mut run = 0;
    let mut trigger = None;
    for (d, &m) in metric.iter().enumerate() {
        if m >= params.threshold {
            run += 1;
            if run >= params.min_run.max(1) {
                trigger = Some(d + 1 - run);
                break;
            }
        } else {
            run = 0;
        }
    }
    let trigger = trigger?;
    let ltf = long_training_symbol();
    let first = STF_LEN + 32;
    let lo = trigger.saturating_sub(params.search_back);
    let hi = (trigger + params.search_ahead).min(rx.len().checked_sub(first + 128)?);
    let corr = |at: usize| -> f64 {
        rx[at..at + 64]
            .iter()
            .zip(&ltf)
            .map(|(r, l)| r * l.conj())
            .sum::<Complex64>()
            .norm()
    };
    let mut best = (f64::NEG_INFINITY, lo);
    for s in lo..=hi {
        let c = corr(s + first) + corr(s + first + 64);
        if c > best.0 {
            best = (c, s);
        }
    }
    Some(Detection { trigger, start: best.1 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorClass {
    Detection,
    Signal,
    Data,
    None,
}

impl ErrorClass {
    pub fn name(self) -> &'static str {
        match self {
            ErrorClass::Detection => "DETECTION",
            ErrorClass::Signal => "SIGNAL",
            ErrorClass::Data => "DATA",
            ErrorClass::None => "NONE",
        }
    }
}

impl std::fmt::Display for ErrorClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// What the transmitter actually sent.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameTruth {
    pub start: usize,
    pub signal: SignalField,
    pub msg: BitBlock,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameOutcome {
    pub class: ErrorClass,
    /// Estimated minus true start, when a frame was detected.
    pub timing_offset: Option<isize>,
    /// Payload as delivered; all zeros when the frame was lost before the
    /// payload decoder.
    pub decoded: BitBlock,
    pub errors: ErrorCount,
}

/// Framed transmitter and receiver built around a payload [`Transceiver`].
#[derive(Debug)]
pub struct FrameReceiver {
    pub transceiver: Transceiver,
    pub params: DetectorParams,
    /// Idle samples before the frame in simulated records.
    pub lead: usize,
    /// Idle samples after the frame in simulated records.
    pub trail: usize,
}

impl FrameReceiver {
    pub fn new(transceiver: Transceiver, params: DetectorParams) -> Self {
        let n_cp = transceiver.config().n_cp;
        FrameReceiver {
            transceiver,
            params,
            lead: STF_LEN,
            trail: n_cp,
        }
    }

    /// Noiseless record (idle, frame, idle) and its ground truth.
    pub fn transmit(&mut self, msg: &BitBlock) -> Result<(Vec<Complex64>, FrameTruth)> {
        let signal = SignalField::for_payload(self.transceiver.scheme(), msg.len())?;
        let payload = self.transceiver.transmit(msg)?;
        let frame = build_frame(&payload, &signal, self.transceiver.engine_mut());
        let mut rx = vec![Complex64::default(); self.lead];
        rx.extend(frame);
        rx.resize(rx.len() + self.trail, Complex64::default());
        let truth = FrameTruth {
            start: self.lead,
            signal,
            msg: msg.clone(),
        };
        Ok((rx, truth))
    }

    /// Sends `msg` through AWGN with variance `sigma2` per dimension and
    /// classifies the result.
    pub fn simulate(&mut self, msg: &BitBlock, sigma2: f64, rng: &mut RandomStream) -> Result<FrameOutcome> {
        let (mut rx, truth) = self.transmit(msg)?;
        awgn(&mut rx, sigma2, rng);
        self.classify(&rx, sigma2, &truth)
    }

    pub fn classify(&mut self, rx: &[Complex64], sigma2: f64, truth: &FrameTruth) -> Result<FrameOutcome> {
        let k = truth.msg.len();
        let lost = |class, timing_offset| -> Result<FrameOutcome> {
            let decoded = BitBlock::zeros(k);
            let errors = count_errors(&truth.msg, &decoded)?;
            Ok(FrameOutcome {
                class,
                timing_offset,
                decoded,
                errors,
            })
        };
        let Some(det) = detect_frame(rx, &self.params) else {
            return lost(ErrorClass::Detection, None);
        };
        let offset = det.start as isize - truth.start as isize;
        if offset.unsigned_abs() > self.params.timing_tolerance {
            return lost(ErrorClass::Detection, Some(offset));
        }
        let sym_len = self.transceiver.config().symbol_len();
        let at = det.start + STF_LEN + LTF_LEN;
        let signal_wf = slice_padded(rx, at, sym_len);
        let signal = decode_signal_field(&signal_wf, sigma2, self.transceiver.engine_mut())?;
        if signal != Some(truth.signal) {
            return lost(ErrorClass::Signal, Some(offset));
        }
        let payload_len = self.transceiver.n_sym(k) * sym_len;
        let payload = slice_padded(rx, at + sym_len, payload_len);
        let decoded = self.transceiver.receive(&payload, sigma2, k)?;
        let errors = count_errors(&truth.msg, &decoded)?;
        let class = if errors.bit_errors > 0 {
            ErrorClass::Data
        } else {
            ErrorClass::None
        };
        Ok(FrameOutcome {
            class,
            timing_offset: Some(offset),
            decoded,
            errors,
        })
    }
}

fn slice_padded(x: &[Complex64], at: usize, len: usize) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = x.iter().skip(at).take(len).copied().collect();
    out.resize(len, Complex64::default());
    out
}

/// Detects, decodes and classifies one received record.
pub fn detect_and_classify(
    rx: &[Complex64],
    sigma2: f64,
    truth: &FrameTruth,
    transceiver: Transceiver,
    params: &DetectorParams,
) -> Result<ErrorClass> {
    let mut r = FrameReceiver::new(transceiver, *params);
    Ok(r.classify(rx, sigma2, truth)?.class)
}
