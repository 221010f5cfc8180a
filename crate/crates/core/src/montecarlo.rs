//! Deterministic, batch-parallel BER/PER simulation.
//!
//! A point is simulated in batches of [`BATCH_FRAMES`] frames. Batch `i` of
//! point `p` draws everything from `RandomStream(seed, p * 2^32 + i)`, and
//! counters are merged in batch order with the stopping rule checked after
//! each batch, so results do not depend on the number of workers.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use crate::bits::count_errors;
use crate::channel::{awgn, ebn0_to_sigma2};
use crate::conv::ConvCodeSpec;
use crate::error::{Error, Result};
use crate::ldpc::{ldpc_construct, DEFAULT_SEED as LDPC_SEED};
use crate::modem::ModulationScheme;
use crate::ofdm::{DetectorParams, ErrorClass, FrameReceiver, OfdmConfig, PayloadCodec, Transceiver};
use crate::polar::PolarCodeSpec;
use crate::rng::RandomStream;

pub const BATCH_FRAMES: u64 = 256;
pub const CODED_MESSAGE_LENGTHS: [usize; 4] = [64, 128, 256, 512];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CodeKind {
    Cc,
    Ldpc,
    Polar,
    None,
}

impl CodeKind {
    pub const ALL: [CodeKind; 4] = [CodeKind::Cc, CodeKind::Ldpc, CodeKind::Polar, CodeKind::None];

    pub fn name(self) -> &'static str {
        match self {
            CodeKind::Cc => "cc",
            CodeKind::Ldpc => "ldpc",
            CodeKind::Polar => "polar",
            CodeKind::None => "none",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }
}

impl std::fmt::Display for CodeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkConfig {
    pub code: CodeKind,
    pub k: usize,
    pub modulation: ModulationScheme,
    /// Preamble, SIGNAL field, packet detection and error classification.
    pub framed: bool,
    /// Unframed runs only: add noise to the time-domain waveform instead of
    /// the data tones.
    pub time_domain: bool,
    pub ofdm: OfdmConfig,
    pub ebn0_db: Vec<f64>,
    pub seed: u64,
    pub detector: DetectorParams,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig {
            code: CodeKind::Polar,
            k: 256,
            modulation: ModulationScheme::Bpsk,
            framed: false,
            time_domain: false,
            ofdm: OfdmConfig::default(),
            ebn0_db: Vec::new(),
            seed: 1,
            detector: DetectorParams::default(),
        }
    }
}

impl LinkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::invalid("k", "message length must be positive"));
        }
        if self.code != CodeKind::None && !CODED_MESSAGE_LENGTHS.contains(&self.k) {
            return Err(Error::invalid(
                "k",
                format!("{} is not one of {CODED_MESSAGE_LENGTHS:?}", self.k),
            ));
        }
        if self.ebn0_db.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("ebn0", "grid values must be finite"));
        }
        if self.ebn0_db.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("ebn0", "grid must be strictly increasing"));
        }
        Ok(())
    }

    pub fn build_codec(&self) -> Result<PayloadCodec> {
        Ok(match self.code {
            CodeKind::Polar => PayloadCodec::Polar(Arc::new(PolarCodeSpec::for_message(self.k)?)),
            CodeKind::Ldpc => PayloadCodec::Ldpc(Arc::new(ldpc_construct(2 * self.k, LDPC_SEED)?)),
            CodeKind::Cc => PayloadCodec::Conv(ConvCodeSpec::default()),
            CodeKind::None => PayloadCodec::Uncoded,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StoppingRule {
    pub max_frames: u64,
    pub min_bit_errors: u64,
    /// Also require this many frame errors before stopping early.
    pub min_frame_errors: u64,
}

impl Default for StoppingRule {
    fn default() -> Self {
        StoppingRule {
            max_frames: 1_000_000,
            min_bit_errors: 100,
            min_frame_errors: 0,
        }
    }
}

impl StoppingRule {
    pub fn validate(&self) -> Result<()> {
        if self.max_frames == 0 || self.min_bit_errors == 0 {
            return Err(Error::invalid("stopping rule", "max_frames and min_bit_errors must be positive"));
        }
        Ok(())
    }

    fn done(&self, c: &Counters) -> bool {
        c.frames >= self.max_frames
            || (c.bit_errors >= self.min_bit_errors && c.frame_errors >= self.min_frame_errors)
    }
}

/// Frame tallies per error class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClassTally {
    pub detection: u64,
    pub signal: u64,
    pub data: u64,
}

impl ClassTally {
    pub fn record(&mut self, class: ErrorClass) {
        match class {
            ErrorClass::Detection => self.detection += 1,
            ErrorClass::Signal => self.signal += 1,
            ErrorClass::Data => self.data += 1,
            ErrorClass::None => {}
        }
    }

    pub fn total(&self) -> u64 {
        self.detection + self.signal + self.data
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Counters {
    frames: u64,
    bits: u64,
    bit_errors: u64,
    frame_errors: u64,
    classes: ClassTally,
}

impl Counters {
    fn add(&mut self, o: &Counters) {
        self.frames += o.frames;
        self.bits += o.bits;
        self.bit_errors += o.bit_errors;
        self.frame_errors += o.frame_errors;
        self.classes.detection += o.classes.detection;
        self.classes.signal += o.classes.signal;
        self.classes.data += o.classes.data;
    }
}

/// 95% Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    const Z: f64 = 1.959_963_984_540_054;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimPoint {
    pub ebn0_db: f64,
    pub frames: u64,
    pub bits: u64,
    pub bit_errors: u64,
    pub frame_errors: u64,
    pub classes: ClassTally,
    pub elapsed_s: f64,
}

impl SimPoint {
    pub fn ber(&self) -> f64 {
        ratio(self.bit_errors, self.bits)
    }

    pub fn per(&self) -> f64 {
        ratio(self.frame_errors, self.frames)
    }

    pub fn ber_ci(&self) -> (f64, f64) {
        wilson_interval(self.bit_errors, self.bits)
    }

    pub fn per_ci(&self) -> (f64, f64) {
        wilson_interval(self.frame_errors, self.frames)
    }

    /// Class shares of the error frames; `None` without error frames.
    pub fn class_shares(&self) -> Option<[f64; 3]> {
        let total = self.classes.total();
        if total == 0 {
            return None;
        }
        let t = total as f64;
        Some([
            self.classes.detection as f64 / t,
            self.classes.signal as f64 / t,
            self.classes.data as f64 / t,
        ])
    }

    /// Counters only, for determinism comparisons.
    pub fn counters(&self) -> (u64, u64, u64, u64, ClassTally) {
        (self.frames, self.bits, self.bit_errors, self.frame_errors, self.classes)
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub code: CodeKind,
    pub k: usize,
    /// Coded bits before padding.
    pub n: usize,
    pub rate: f64,
    pub modulation: ModulationScheme,
    pub framed: bool,
    pub seed: u64,
    pub points: Vec<SimPoint>,
}

pub const CSV_HEADER: &str = "code,K,N,rate,mod,framed,ebn0_db,frames,bits,bit_errors,frame_errors,ber,per,\
ber_ci_lo,ber_ci_hi,per_ci_lo,per_ci_hi,pdet,serr,derr,seed,elapsed_s";

impl SimResult {
    pub fn csv_row(&self, p: &SimPoint) -> String {
        let (blo, bhi) = p.ber_ci();
        let (plo, phi) = p.per_ci();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.code,
            self.k,
            self.n,
            self.rate,
            self.modulation,
            self.framed,
            p.ebn0_db,
            p.frames,
            p.bits,
            p.bit_errors,
            p.frame_errors,
            p.ber(),
            p.per(),
            blo,
            bhi,
            plo,
            phi,
            p.classes.detection,
            p.classes.signal,
            p.classes.data,
            self.seed,
            p.elapsed_s
        )
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for p in &self.points {
            s.push_str(&self.csv_row(p));
            s.push('\n');
        }
        s
    }
}

/// Everything a batch needs, shared read-only between workers.
struct PointPlan<'a> {
    cfg: &'a LinkConfig,
    codec: &'a PayloadCodec,
    sigma2: f64,
    stream_base: u64,
}

impl PointPlan<'_> {
    fn run_batch(&self, batch: u64, frames: u64) -> Result<Counters> {
        let cfg = self.cfg;
        let mut rng = RandomStream::new(cfg.seed, self.stream_base + batch);
        let transceiver = Transceiver::new(self.codec.clone(), cfg.modulation, cfg.ofdm)?;
        let mut c = Counters::default();
        let k = cfg.k;
        if cfg.framed {
            let mut rx = FrameReceiver::new(transceiver, cfg.detector);
            for _ in 0..frames {
                let msg = rng.bits(k);
                let out = rx.simulate(&msg, self.sigma2, &mut rng)?;
                c.classes.record(out.class);
                c.tally(k, out.errors.bit_errors as u64, out.class != ErrorClass::None);
            }
        } else {
            let mut t = transceiver;
            for _ in 0..frames {
                let msg = rng.bits(k);
                let decoded = if cfg.time_domain {
                    let mut wf = t.transmit(&msg)?;
                    awgn(&mut wf, self.sigma2, &mut rng);
                    t.receive(&wf, self.sigma2, k)?
                } else {
                    let mut sym = t.encode_symbols(&msg)?;
                    awgn(&mut sym, self.sigma2, &mut rng);
                    t.decode_symbols(&sym, self.sigma2, k)?
                };
                let e = count_errors(&msg, &decoded)?;
                if e.frame_error {
                    c.classes.data += 1;
                }
                c.tally(k, e.bit_errors as u64, e.frame_error);
            }
        }
        Ok(c)
    }
}

impl Counters {
    fn tally(&mut self, k: usize, bit_errors: u64, frame_error: bool) {
        self.frames += 1;
        self.bits += k as u64;
        self.bit_errors += bit_errors;
        self.frame_errors += u64::from(frame_error);
    }
}

/// Simulation engine holding the constructed code and a worker pool.
pub struct Simulator {
    cfg: LinkConfig,
    codec: PayloadCodec,
    pool: Option<rayon::ThreadPool>,
    workers: usize,
}

impl std::fmt::Debug for Simulator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Simulator")
            .field("cfg", &self.cfg)
            .field("workers", &self.workers)
            .finish()
    }
}

impl Simulator {
    pub fn new(cfg: LinkConfig, workers: usize) -> Result<Self> {
        cfg.validate()?;
        let codec = cfg.build_codec()?;
        // Surface layout problems (e.g. a codec that does not fit the
        // symbol) before any simulation starts.
        Transceiver::new(codec.clone(), cfg.modulation, cfg.ofdm)?;
        let workers = workers.max(1);
        let pool = if workers > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build()
                    .map_err(|e| Error::invalid("workers", e.to_string()))?,
            )
        } else {
            None
        };
        Ok(Simulator {
            cfg,
            codec,
            pool,
            workers,
        })
    }

    pub fn config(&self) -> &LinkConfig {
        &self.cfg
    }

    pub fn codec(&self) -> &PayloadCodec {
        &self.codec
    }

    fn transceiver(&self) -> Result<Transceiver> {
        Transceiver::new(self.codec.clone(), self.cfg.modulation, self.cfg.ofdm)
    }

    pub fn code_rate(&self) -> Result<f64> {
        Ok(self.transceiver()?.code_rate(self.cfg.k))
    }

    pub fn run_point(&self, point_index: u64, ebn0_db: f64, stop: &StoppingRule) -> Result<SimPoint> {
        stop.validate()?;
        let started = Instant::now();
        let b = self.cfg.modulation.bits_per_symbol();
        let plan = PointPlan {
            cfg: &self.cfg,
            codec: &self.codec,
            sigma2: ebn0_to_sigma2(ebn0_db, self.code_rate()?, b)?,
            stream_base: point_index << 32,
        };
        let mut total = Counters::default();
        let mut next_batch = 0u64;
        'outer: while !stop.done(&total) {
            // Frames still allowed, assigned to batches in order.
            let remaining = stop.max_frames - total.frames;
            let round: Vec<(u64, u64)> = (0..self.workers as u64)
                .map(|j| {
                    let start = j * BATCH_FRAMES;
                    (next_batch + j, remaining.saturating_sub(start).min(BATCH_FRAMES))
                })
                .filter(|&(_, n)| n > 0)
                .collect();
            let results: Vec<Result<Counters>> = match &self.pool {
                Some(pool) => pool.install(|| {
                    round
                        .par_iter()
                        .map(|&(batch, n)| plan.run_batch(batch, n))
                        .collect()
                }),
                None => round.iter().map(|&(batch, n)| plan.run_batch(batch, n)).collect(),
            };
            for r in results {
                total.add(&r?);
                next_batch += 1;
                if stop.done(&total) {
                    break 'outer;
                }
            }
        }
        Ok(SimPoint {
            ebn0_db,
            frames: total.frames,
            bits: total.bits,
            bit_errors: total.bit_errors,
            frame_errors: total.frame_errors,
            classes: total.classes,
            elapsed_s: started.elapsed().as_secs_f64(),
        })
    }

    /// Runs every grid point; `on_point` sees each point as it completes.
    pub fn run_sweep_with(&self, stop: &StoppingRule, mut on_point: impl FnMut(&SimPoint)) -> Result<SimResult> {
        stop.validate()?;
        let t = self.transceiver()?;
        let mut points = Vec::with_capacity(self.cfg.ebn0_db.len());
        for (i, &eb) in self.cfg.ebn0_db.iter().enumerate() {
            let p = self.run_point(i as u64, eb, stop)?;
            on_point(&p);
            points.push(p);
        }
        Ok(SimResult {
            code: self.cfg.code,
            k: self.cfg.k,
            n: t.coded_len(self.cfg.k),
            rate: t.code_rate(self.cfg.k),
            modulation: self.cfg.modulation,
            framed: self.cfg.framed,
            seed: self.cfg.seed,
            points,
        })
    }

    pub fn run_sweep(&self, stop: &StoppingRule) -> Result<SimResult> {
        self.run_sweep_with(stop, |_| {})
    }
}

pub fn run_point(cfg: &LinkConfig, ebn0_db: f64, stop: &StoppingRule, workers: usize) -> Result<SimPoint> {
    Simulator::new(cfg.clone(), workers)?.run_point(0, ebn0_db, stop)
}

pub fn run_sweep(cfg: &LinkConfig, stop: &StoppingRule, workers: usize) -> Result<SimResult> {
    Simulator::new(cfg.clone(), workers)?.run_sweep(stop)
}

/// Parses `start:step:end` (inclusive) or a comma-separated list.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let num = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| Error::invalid("ebn0", format!("'{s}' is not a number")))
    };
    let parts: Vec<&str> = text.split(':').collect();
    let grid = match parts.as_slice() {
        [start, step, end] => {
            let (start, step, end) = (num(start)?, num(step)?, num(end)?);
            if !(step > 0.0) || end < start {
                return Err(Error::invalid("ebn0", "grid needs step > 0 and end >= start"));
            }
            let count = ((end - start) / step + 1e-9).floor() as usize + 1;
            (0..count)
                .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
                .collect()
        }
        [_] => text.split(',').map(num).collect::<Result<Vec<_>>>()?,
        _ => return Err(Error::invalid("ebn0", format!("'{text}' is neither start:step:end nor a list"))),
    };
    Ok(grid)
}
