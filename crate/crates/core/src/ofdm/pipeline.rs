use std::sync::Arc;

use num_complex::Complex64;

use super::{add_padding_bits, OfdmConfig, OfdmEngine};
use crate::bits::{hard_decision, BitBlock};
use crate::conv::{conv_encode, viterbi_decode, ConvCodeSpec};
use crate::error::{Error, Result};
use crate::ldpc::{LdpcCodeSpec, LdpcDecoder};
use crate::modem::{demodulate, modulate, ModulationScheme};
use crate::polar::{PolarCodeSpec, PolarDecoder};

/// Payload forward error correction.
#[derive(Debug, Clone)]
pub enum PayloadCodec {
    Polar(Arc<PolarCodeSpec>),
    Ldpc(Arc<LdpcCodeSpec>),
    /// Bit-coded: each OFDM symbol carries its own terminated trellis.
    Conv(ConvCodeSpec),
    Uncoded,
}

impl PayloadCodec {
    pub fn name(&self) -> &'static str {
        match self {
            PayloadCodec::Polar(_) => "polar",
            PayloadCodec::Ldpc(_) => "ldpc",
            PayloadCodec::Conv(_) => "cc",
            PayloadCodec::Uncoded => "none",
        }
    }

    /// Block codecs encode the whole message in one call.
    pub fn is_block_coded(&self) -> bool {
        !matches!(self, PayloadCodec::Conv(_))
    }

    /// Fixed message length, if the codec has one.
    pub fn message_len(&self) -> Option<usize> {
        match self {
            PayloadCodec::Polar(s) => Some(s.k_msg()),
            PayloadCodec::Ldpc(s) => Some(s.k()),
            _ => None,
        }
    }

    fn check_message_len(&self, k: usize) -> Result<()> {
        match self.message_len() {
            Some(expected) => Error::check_len(expected, k),
            None => Ok(()),
        }
    }
}

/// Entries of the optional transceiver call log.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PipelineEvent {
    Encode,
    Modulate(usize),
    Demodulate(usize),
    Decode,
}

/// Payload transmitter and receiver for one codec and modulation.
///
/// Holds decoder scratch space, so each worker should own one.
#[derive(Debug)]
pub struct Transceiver {
    codec: PayloadCodec,
    scheme: ModulationScheme,
    engine: OfdmEngine,
    polar: PolarDecoder,
    ldpc: LdpcDecoder,
    encode_calls: usize,
    decode_calls: usize,
    events: Option<Vec<PipelineEvent>>,
    tones: Vec<Complex64>,
}

impl Transceiver {
    pub fn new(codec: PayloadCodec, scheme: ModulationScheme, cfg: OfdmConfig) -> Result<Self> {
        let t = Transceiver {
            codec,
            scheme,
            engine: OfdmEngine::new(cfg)?,
            polar: PolarDecoder::new(),
            ldpc: LdpcDecoder::new(),
            encode_calls: 0,
            decode_calls: 0,
            events: None,
            tones: Vec::new(),
        };
        if !t.codec.is_block_coded() && t.chunk_payload() == 0 {
            return Err(Error::invalid("ofdm", "symbol too small for a terminated trellis"));
        }
        Ok(t)
    }

    /// Records every encode, decode and per-symbol (de)modulation step.
    pub fn with_event_log(mut self) -> Self {
        self.events = Some(Vec::new());
        self
    }

    pub fn events(&self) -> &[PipelineEvent] {
        self.events.as_deref().unwrap_or(&[])
    }

    pub fn codec(&self) -> &PayloadCodec {
        &self.codec
    }

    pub fn scheme(&self) -> ModulationScheme {
        self.scheme
    }

    pub fn config(&self) -> &OfdmConfig {
        self.engine.config()
    }

    pub fn engine_mut(&mut self) -> &mut OfdmEngine {
        &mut self.engine
    }

    pub fn encode_calls(&self) -> usize {
        self.encode_calls
    }

    pub fn decode_calls(&self) -> usize {
        self.decode_calls
    }

    /// Encode plus decode calls since construction or the last reset.
    pub fn codec_calls(&self) -> usize {
        self.encode_calls + self.decode_calls
    }

    pub fn reset_counters(&mut self) {
        self.encode_calls = 0;
        self.decode_calls = 0;
        if let Some(ev) = &mut self.events {
            ev.clear();
        }
    }

    fn log(&mut self, e: PipelineEvent) {
        if let Some(ev) = &mut self.events {
            ev.push(e);
        }
    }

    fn bits_per_ofdm_symbol(&self) -> usize {
        self.config().n_ds * self.scheme.bits_per_symbol()
    }

    /// Message bits per OFDM symbol on the bit-coded path.
    pub fn chunk_payload(&self) -> usize {
        let memory = ConvCodeSpec::default().memory;
        (self.bits_per_ofdm_symbol() / 2).saturating_sub(memory)
    }

    /// Coded bits for a `k`-bit message, before padding.
    pub fn coded_len(&self, k: usize) -> usize {
        match &self.codec {
            PayloadCodec::Polar(s) => s.n(),
            PayloadCodec::Ldpc(s) => s.n(),
            PayloadCodec::Conv(s) => {
                let c = self.chunk_payload();
                let full = k / c;
                let rest = k % c;
                full * s.encoded_len(c) + if rest > 0 { s.encoded_len(rest) } else { 0 }
            }
            PayloadCodec::Uncoded => k,
        }
    }

    /// Message bits over coded bits; trellis tails and CRC count as
    /// redundancy, padding does not.
    pub fn code_rate(&self, k: usize) -> f64 {
        k as f64 / self.coded_len(k) as f64
    }

    pub fn n_sym(&self, k: usize) -> usize {
        match self.codec {
            PayloadCodec::Conv(_) => k.div_ceil(self.chunk_payload()),
            _ => self.coded_len(k).div_ceil(self.bits_per_ofdm_symbol()),
        }
    }

    /// Coded, padded and mapped data-tone values, `n_sym * n_ds` of them.
    pub fn encode_symbols(&mut self, msg: &[u8]) -> Result<Vec<Complex64>> {
        let mut out = Vec::with_capacity(self.n_sym(msg.len()) * self.config().n_ds);
        self.encode_with(msg, |_, tones| out.extend_from_slice(tones))?;
        Ok(out)
    }

    /// Full transmit chain: encode, pad, map, one OFDM symbol at a time.
    pub fn transmit(&mut self, msg: &[u8]) -> Result<Vec<Complex64>> {
        let mut wf = Vec::with_capacity(self.n_sym(msg.len()) * self.config().symbol_len());
        self.encode_with(msg, |engine, tones| engine.modulate_symbol(tones, &mut wf))?;
        Ok(wf)
    }

    fn encode_with<F>(&mut self, msg: &[u8], mut emit: F) -> Result<()>
    where
        F: FnMut(&mut OfdmEngine, &[Complex64]),
    {
        self.codec.check_message_len(msg.len())?;
        let n_ds = self.config().n_ds;
        let b = self.scheme.bits_per_symbol();
        if let PayloadCodec::Conv(spec) = self.codec {
            for (i, chunk) in msg.chunks(self.chunk_payload()).enumerate() {
                let coded = conv_encode(chunk, &spec);
                self.encode_calls += 1;
                self.log(PipelineEvent::Encode);
                let (padded, _) = add_padding_bits(&coded, n_ds, b);
                emit(&mut self.engine, &modulate(&padded, self.scheme)?);
                self.log(PipelineEvent::Modulate(i));
            }
            return Ok(());
        }
        let coded = match &self.codec {
            PayloadCodec::Polar(s) => s.encode_message(msg)?,
            PayloadCodec::Ldpc(s) => s.encode(msg)?,
            _ => BitBlock::from_vec_unchecked(msg.to_vec()),
        };
        self.encode_calls += 1;
        self.log(PipelineEvent::Encode);
        let (padded, _) = add_padding_bits(&coded, n_ds, b);
        let symbols = modulate(&padded, self.scheme)?;
        for (i, tones) in symbols.chunks_exact(n_ds).enumerate() {
            emit(&mut self.engine, tones);
            self.log(PipelineEvent::Modulate(i));
        }
        Ok(())
    }

    /// Decodes data-tone values produced by [`Transceiver::encode_symbols`]
    /// after subcarrier-level noise of variance `sigma2` per dimension.
    pub fn decode_symbols(&mut self, symbols: &[Complex64], sigma2: f64, k: usize) -> Result<BitBlock> {
        let n_ds = self.config().n_ds;
        Error::check_len(self.n_sym(k) * n_ds, symbols.len())?;
        self.decode_with(k, sigma2, |_, i, out| {
            out.extend_from_slice(&symbols[i * n_ds..(i + 1) * n_ds])
        })
    }

    /// Full receive chain on a payload-only waveform.
    pub fn receive(&mut self, wf: &[Complex64], sigma2: f64, k: usize) -> Result<BitBlock> {
        let len = self.config().symbol_len();
        Error::check_len(self.n_sym(k) * len, wf.len())?;
        self.decode_with(k, sigma2, |engine, i, out| {
            engine.demodulate_symbol(&wf[i * len..(i + 1) * len], out)
        })
    }

    fn decode_with<F>(&mut self, k: usize, sigma2: f64, mut fetch: F) -> Result<BitBlock>
    where
        F: FnMut(&mut OfdmEngine, usize, &mut Vec<Complex64>),
    {
        self.codec.check_message_len(k)?;
        let n_sym = self.n_sym(k);
        let mut tones = std::mem::take(&mut self.tones);
        tones.clear();
        let result = if let PayloadCodec::Conv(spec) = self.codec {
            let c = self.chunk_payload();
            let mut msg = Vec::with_capacity(k);
            for i in 0..n_sym {
                tones.clear();
                fetch(&mut self.engine, i, &mut tones);
                self.log(PipelineEvent::Demodulate(i));
                let len = c.min(k - i * c);
                let llr = demodulate(&tones, self.scheme, sigma2)?;
                let part = viterbi_decode(&llr[..spec.encoded_len(len)], len, &spec)?;
                self.decode_calls += 1;
                self.log(PipelineEvent::Decode);
                msg.extend_from_slice(&part);
            }
            Ok(BitBlock::from_vec_unchecked(msg))
        } else {
            for i in 0..n_sym {
                fetch(&mut self.engine, i, &mut tones);
                self.log(PipelineEvent::Demodulate(i));
            }
            let llr = demodulate(&tones, self.scheme, sigma2)?;
            let llr = &llr[..self.coded_len(k)];
            let decoded = match &self.codec {
                PayloadCodec::Polar(s) => self.polar.crc_scl(llr, s)?.0,
                PayloadCodec::Ldpc(s) => self.ldpc.decode(llr, s, s.max_iterations)?.decoded,
                _ => hard_decision(llr),
            };
            self.decode_calls += 1;
            self.log(PipelineEvent::Decode);
            Ok(decoded)
        };
        self.tones = tones;
        result
    }
}

fn block_transceiver(codec: &PayloadCodec, scheme: ModulationScheme, cfg: &OfdmConfig) -> Result<Transceiver> {
    if !codec.is_block_coded() {
        return Err(Error::invalid("codec", "the convolutional code uses the bit-coded path"));
    }
    Transceiver::new(codec.clone(), scheme, *cfg)
}

/// One encode call over the whole message; returns the waveform and the
/// number of codec calls made.
pub fn transmit_block_coded(
    msg: &[u8],
    codec: &PayloadCodec,
    scheme: ModulationScheme,
    cfg: &OfdmConfig,
) -> Result<(Vec<Complex64>, usize)> {
    let mut t = block_transceiver(codec, scheme, cfg)?;
    let wf = t.transmit(msg)?;
    Ok((wf, t.codec_calls()))
}

/// Convolutional encoding, one terminated call per OFDM symbol.
pub fn transmit_bit_coded(msg: &[u8], scheme: ModulationScheme, cfg: &OfdmConfig) -> Result<(Vec<Complex64>, usize)> {
    let mut t = Transceiver::new(PayloadCodec::Conv(ConvCodeSpec::default()), scheme, *cfg)?;
    let wf = t.transmit(msg)?;
    Ok((wf, t.codec_calls()))
}

pub fn receive_block_coded(
    wf: &[Complex64],
    sigma2: f64,
    k: usize,
    codec: &PayloadCodec,
    scheme: ModulationScheme,
    cfg: &OfdmConfig,
) -> Result<(BitBlock, usize)> {
    let mut t = block_transceiver(codec, scheme, cfg)?;
    let msg = t.receive(wf, sigma2, k)?;
    Ok((msg, t.codec_calls()))
}

pub fn receive_bit_coded(
    wf: &[Complex64],
    sigma2: f64,
    k: usize,
    scheme: ModulationScheme,
    cfg: &OfdmConfig,
) -> Result<(BitBlock, usize)> {
    let mut t = Transceiver::new(PayloadCodec::Conv(ConvCodeSpec::default()), scheme, *cfg)?;
    let msg = t.receive(wf, sigma2, k)?;
    Ok((msg, t.codec_calls()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ldpc::ldpc_construct;
    use crate::rng::RandomStream;

    fn polar(k: usize) -> PayloadCodec {
        PayloadCodec::Polar(Arc::new(PolarCodeSpec::for_message(k).unwrap()))
    }

    #[test]
    fn polar_symbol_counts() {
        let cfg = OfdmConfig::default();
        let t = Transceiver::new(polar(128), ModulationScheme::Bpsk, cfg).unwrap();
        assert_eq!(t.n_sym(128), 6);
        let t = Transceiver::new(polar(256), ModulationScheme::Bpsk, cfg).unwrap();
        assert_eq!((t.coded_len(256), t.n_sym(256)), (512, 11));
    }

    #[test]
    fn conv_chunking() {
        let cfg = OfdmConfig::default();
        let t = Transceiver::new(PayloadCodec::Conv(ConvCodeSpec::default()), ModulationScheme::Bpsk, cfg).unwrap();
        assert_eq!(t.chunk_payload(), 18);
        assert_eq!(t.n_sym(128), 8);
        assert_eq!(t.n_sym(18), 1);
        let msg = RandomStream::new(3, 0).bits(128);
        let (wf, calls) = transmit_bit_coded(&msg, ModulationScheme::Bpsk, &cfg).unwrap();
        assert_eq!((wf.len(), calls), (8 * 80, 8));
    }

    #[test]
    fn polar_call_count_and_order() {
        let cfg = OfdmConfig::default();
        let msg = RandomStream::new(4, 0).bits(128);
        let mut t = Transceiver::new(polar(128), ModulationScheme::Bpsk, cfg).unwrap().with_event_log();
        let wf = t.transmit(&msg).unwrap();
        assert_eq!(t.codec_calls(), 1);
        let back = t.receive(&wf, 0.01, 128).unwrap();
        assert_eq!(back, msg);
        assert_eq!(t.codec_calls(), 2);
        let ev = t.events();
        assert_eq!(ev[0], PipelineEvent::Encode);
        assert_eq!(*ev.last().unwrap(), PipelineEvent::Decode);
        assert_eq!(ev[ev.len() - 2], PipelineEvent::Demodulate(5));
    }

    #[test]
    fn conv_events_interleave() {
        let cfg = OfdmConfig::default();
        let msg = RandomStream::new(5, 0).bits(40);
        let mut t = Transceiver::new(PayloadCodec::Conv(ConvCodeSpec::default()), ModulationScheme::Bpsk, cfg)
            .unwrap()
            .with_event_log();
        let wf = t.transmit(&msg).unwrap();
        assert_eq!(t.receive(&wf, 0.01, 40).unwrap(), msg);
        use PipelineEvent::*;
        assert_eq!(
            t.events(),
            &[
                Encode, Modulate(0), Encode, Modulate(1), Encode, Modulate(2),
                Demodulate(0), Decode, Demodulate(1), Decode, Demodulate(2), Decode
            ]
        );
    }

    #[test]
    fn loopback_all_codecs() {
        let cfg = OfdmConfig::default();
        let ldpc = PayloadCodec::Ldpc(Arc::new(ldpc_construct(128, 1).unwrap()));
        let codecs = [polar(64), ldpc, PayloadCodec::Conv(ConvCodeSpec::default()), PayloadCodec::Uncoded];
        let mut rng = RandomStream::new(6, 0);
        for codec in codecs {
            for scheme in ModulationScheme::ALL {
                let mut t = Transceiver::new(codec.clone(), scheme, cfg).unwrap();
                let msg = rng.bits(64);
                let wf = t.transmit(&msg).unwrap();
                assert_eq!(wf.len(), t.n_sym(64) * 80);
                assert_eq!(t.receive(&wf, 1e-3, 64).unwrap(), msg, "{} {scheme}", codec.name());
                let sym = t.encode_symbols(&msg).unwrap();
                assert_eq!(t.decode_symbols(&sym, 1e-3, 64).unwrap(), msg);
            }
        }
    }

    #[test]
    fn wrong_lengths_rejected() {
        let cfg = OfdmConfig::default();
        let mut t = Transceiver::new(polar(64), ModulationScheme::Bpsk, cfg).unwrap();
        assert!(t.transmit(&[0; 63]).is_err());
        assert!(t.receive(&[Complex64::default(); 80], 1.0, 64).is_err());
        assert!(transmit_block_coded(&[0; 18], &PayloadCodec::Conv(ConvCodeSpec::default()), ModulationScheme::Bpsk, &cfg).is_err());
    }
}
