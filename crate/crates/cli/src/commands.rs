use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use shortlink::analysis::{
    bound_curve, eq1_latency, packet_duration_80211, ChannelKind, BOUND_CSV_HEADER, STANDARD_ROWS,
};
use shortlink::channel::db_to_linear;
use shortlink::ldpc::ldpc_construct;
use shortlink::montecarlo::{SimResult, Simulator, CODED_MESSAGE_LENGTHS, CSV_HEADER};
use shortlink::ofdm::{write_waveform_f32le, FrameReceiver, PayloadCodec, Transceiver};
use shortlink::polar::PolarCodeSpec;
use shortlink::RandomStream;

use crate::config::{RawConfig, Resolved};
use crate::{BoundsArgs, CliError, LatencyArgs, RunArgs};

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn resolve(args: &RunArgs, classify: bool) -> Result<Resolved, CliError> {
    let mut raw = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
            RawConfig::parse(&text, &path.display().to_string())?
        }
        None => RawConfig::default(),
    };
    let flags: [(&'static str, &Option<String>); 11] = [
        ("code", &args.code),
        ("k", &args.k),
        ("mod", &args.modulation),
        ("ebn0", &args.ebn0),
        ("ebn0_step", &args.ebn0_step),
        ("frames_max", &args.frames_max),
        ("min_errors", &args.min_errors),
        ("seed", &args.seed),
        ("framed", &args.framed),
        ("bandwidth_mhz", &args.bandwidth_mhz),
        ("workers", &args.workers),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            raw.set(key, v);
        }
    }
    if classify {
        raw.set("framed", "true");
    }
    raw.resolve()
}

pub fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn construction_text(codec: &PayloadCodec) -> String {
    match codec {
        PayloadCodec::Polar(s) => s.frozen_set_text(),
        PayloadCodec::Ldpc(s) => s.matrix().to_alist(),
        PayloadCodec::Conv(s) => format!("cc K={} generators={:o},{:o}\n", s.constraint_length, s.generators[0], s.generators[1]),
        PayloadCodec::Uncoded => "uncoded\n".to_string(),
    }
}

fn manifest(r: &Resolved, sim: &Simulator, command: &str) -> Result<String, CliError> {
    let mut s = String::new();
    let _ = writeln!(s, "# shortlink {} {command}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "# rerun with: shortlink {command} --config <this file>");
    let _ = writeln!(s, "# code_rate = {}", sim.code_rate().map_err(runtime)?);
    let _ = writeln!(s, "# construction_sha256 = {}", sha256_hex(&construction_text(sim.codec())));
    if r.framed {
        let d = &sim.config().detector;
        let _ = writeln!(
            s,
            "# detector window = {} threshold = {} min_run = {} timing_tolerance = {}",
            d.window, d.threshold, d.min_run, d.timing_tolerance
        );
    }
    s.push_str(&r.to_config_text());
    Ok(s)
}

fn dump_waveform(path: &Path, sim: &Simulator) -> Result<(), CliError> {
    let cfg = sim.config();
    let t = Transceiver::new(sim.codec().clone(), cfg.modulation, cfg.ofdm).map_err(runtime)?;
    let msg = RandomStream::new(cfg.seed, u64::MAX).bits(cfg.k);
    let wf = if cfg.framed {
        FrameReceiver::new(t, cfg.detector).transmit(&msg).map_err(runtime)?.0
    } else {
        let mut t = t;
        t.transmit(&msg).map_err(runtime)?
    };
    let file = fs::File::create(path)?;
    write_waveform_f32le(std::io::BufWriter::new(file), &wf)?;
    Ok(())
}

fn share(count: u64, total: u64) -> String {
    if total == 0 {
        String::new()
    } else {
        (count as f64 / total as f64).to_string()
    }
}

fn csv(result: &SimResult, classify: bool) -> String {
    if !classify {
        return result.to_csv();
    }
    let mut s = format!("{CSV_HEADER},pdet_share,serr_share,derr_share\n");
    for p in &result.points {
        let c = &p.classes;
        let total = c.total();
        let _ = writeln!(
            s,
            "{},{},{},{}",
            result.csv_row(p),
            share(c.detection, total),
            share(c.signal, total),
            share(c.data, total)
        );
    }
    s
}

fn sidecar(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest");
    PathBuf::from(name)
}

pub fn sweep(args: RunArgs, classify: bool) -> Result<(), CliError> {
    let r = resolve(&args, classify)?;
    let sim = Simulator::new(r.link_config(), r.workers).map_err(usage)?;
    let stop = r.stopping_rule();
    stop.validate().map_err(usage)?;
    let command = if classify { "classify" } else { "sweep" };
    let manifest = manifest(&r, &sim, command)?;
    if let Some(path) = &args.dump_waveform {
        dump_waveform(path, &sim)?;
    }
    let result = sim.run_sweep(&stop).map_err(runtime)?;
    let text = csv(&result, classify);
    match &args.out {
        Some(out) => {
            fs::write(out, text)?;
            fs::write(args.manifest.clone().unwrap_or_else(|| sidecar(out)), manifest)?;
        }
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            match &args.manifest {
                Some(path) => fs::write(path, manifest)?,
                None => eprint!("{manifest}"),
            }
        }
    }
    Ok(())
}

fn parse_n_range(text: &str) -> Result<Vec<usize>, CliError> {
    let bad = || usage(format!("--n-range: '{text}' is not start:end or start:step:end with positive integers"));
    let nums: Vec<usize> = text
        .split(':')
        .map(|p| p.trim().parse::<usize>().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    let (start, step, end) = match nums.as_slice() {
        [a, b] => (*a, 1, *b),
        [a, s, b] => (*a, *s, *b),
        _ => return Err(bad()),
    };
    if start == 0 || step == 0 || end < start {
        return Err(bad());
    }
    Ok((start..=end).step_by(step).collect())
}

pub fn bounds(args: BoundsArgs) -> Result<(), CliError> {
    let kinds: Vec<ChannelKind> = match args.kind.as_str() {
        "all" => ChannelKind::ALL.to_vec(),
        k => vec![ChannelKind::from_name(k)
            .ok_or_else(|| usage(format!("--kind: '{k}' is not one of gaussian, biawgn, all")))?],
    };
    if !(args.per > 0.0 && args.per < 1.0) {
        return Err(usage(format!("--per: {} is outside (0, 1)", args.per)));
    }
    if !args.snr_db.is_finite() {
        return Err(usage("--snr-db must be finite"));
    }
    let ns = parse_n_range(&args.n_range)?;
    let snr = db_to_linear(args.snr_db);
    let mut s = format!("{BOUND_CSV_HEADER}\n");
    for kind in kinds {
        for p in bound_curve(ns.iter().copied(), args.per, snr, kind).map_err(usage)? {
            s.push_str(&p.csv_row());
            s.push('\n');
        }
    }
    match &args.out {
        Some(path) => fs::write(path, s)?,
        None => std::io::stdout().write_all(s.as_bytes())?,
    }
    Ok(())
}

pub fn latency(args: LatencyArgs) -> Result<(), CliError> {
    if args.payload == 0 || args.payload > u64::from(u32::MAX / 2) {
        return Err(usage("--payload must be a positive number of bits"));
    }
    let mut out = String::new();
    if args.eq1 {
        if args.bandwidth.is_empty() {
            return Err(usage("--bandwidth needs at least one value"));
        }
        let _ = writeln!(out, "{:>10}  {:>8}  {:>12}", "B (MHz)", "S", "T (us)");
        for &b in &args.bandwidth {
            let t = eq1_latency(args.payload as f64, b * 1e6, args.efficiency).map_err(usage)?;
            let _ = writeln!(out, "{b:>10}  {:>8}  {:>12}", args.efficiency, t * 1e6);
        }
    } else {
        let rows: Vec<_> = STANDARD_ROWS
            .iter()
            .filter(|r| args.standard == "all" || r.name.contains(args.standard.as_str()))
            .collect();
        if rows.is_empty() {
            return Err(usage(format!("--standard: no row matches '{}'", args.standard)));
        }
        let _ = writeln!(
            out,
            "{:<16}{:>8}{:>7}{:>6}{:>6}{:>6}{:>12}",
            "standard", "B(MHz)", "N_FFT", "N_ds", "N_cp", "N_ps", "T_pkt(us)"
        );
        for r in rows {
            let _ = writeln!(
                out,
                "{:<16}{:>8}{:>7}{:>6}{:>6}{:>6}{:>12}",
                r.name,
                r.bandwidth_mhz,
                r.n_fft,
                r.n_ds,
                r.n_cp,
                r.n_ps,
                packet_duration_80211(r, args.payload as u32)
            );
        }
    }
    print!("{out}");
    Ok(())
}

pub fn codes() -> Result<(), CliError> {
    let mut out = String::new();
    let _ = writeln!(out, "{:<6}{:>6}{:>6}{:>8}  construction sha256", "code", "K", "N", "rate");
    for k in CODED_MESSAGE_LENGTHS {
        let spec = PolarCodeSpec::for_message(k).map_err(runtime)?;
        let codec = PayloadCodec::Polar(std::sync::Arc::new(spec));
        let _ = writeln!(out, "{:<6}{k:>6}{:>6}{:>8}  {}", "polar", 2 * k, 0.5, sha256_hex(&construction_text(&codec)));
    }
    for k in CODED_MESSAGE_LENGTHS {
        let spec = ldpc_construct(2 * k, shortlink::ldpc::DEFAULT_SEED).map_err(runtime)?;
        let codec = PayloadCodec::Ldpc(std::sync::Arc::new(spec));
        let _ = writeln!(out, "{:<6}{k:>6}{:>6}{:>8}  {}", "ldpc", 2 * k, 0.5, sha256_hex(&construction_text(&codec)));
    }
    let cc = PayloadCodec::Conv(shortlink::conv::ConvCodeSpec::default());
    let _ = writeln!(out, "{:<6}{:>6}{:>6}{:>8}  {}", "cc", "any", "-", 0.5, sha256_hex(&construction_text(&cc)));
    print!("{out}");
    Ok(())
}
