//! `key = value` run configuration shared by `sweep` and `classify`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use shortlink::modem::ModulationScheme;
use shortlink::montecarlo::{parse_grid, CodeKind, LinkConfig, StoppingRule};
use shortlink::ofdm::OfdmConfig;

use crate::CliError;

pub const KEYS: [&str; 11] = [
    "code",
    "k",
    "mod",
    "ebn0",
    "ebn0_step",
    "frames_max",
    "min_errors",
    "seed",
    "framed",
    "bandwidth_mhz",
    "workers",
];

/// Raw values keyed by name, each remembering where it came from.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    values: BTreeMap<&'static str, (String, String)>,
}

impl RawConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let mut cfg = RawConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = format!("{origin}:{}", i + 1);
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Usage(format!("{at}: expected 'key = value', got '{line}'")));
            };
            let key = key.trim();
            let Some(&known) = KEYS.iter().find(|&&k| k == key) else {
                return Err(CliError::Usage(format!(
                    "{at}: unknown key '{key}' (known keys: {})",
                    KEYS.join(", ")
                )));
            };
            cfg.values.insert(known, (value.trim().to_string(), at));
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &'static str, value: impl ToString) {
        self.values.insert(key, (value.to_string(), format!("--{}", key.replace('_', "-"))));
    }

    fn get(&self, key: &str) -> Option<&(String, String)> {
        self.values.get(key)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &'static str, default: T, what: &str) -> Result<T, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some((v, at)) => v
                .parse()
                .map_err(|_| CliError::Usage(format!("{at}: key '{key}': '{v}' is not {what}"))),
        }
    }

    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let code = match self.get("code") {
            None => CodeKind::Polar,
            Some((v, at)) => CodeKind::from_name(v).ok_or_else(|| {
                let allowed: Vec<_> = CodeKind::ALL.iter().map(|c| c.name()).collect();
                CliError::Usage(format!("{at}: key 'code': '{v}' is not one of {}", allowed.join(", ")))
            })?,
        };
        let modulation = match self.get("mod") {
            None => ModulationScheme::Bpsk,
            Some((v, at)) => ModulationScheme::from_name(v).ok_or_else(|| {
                let allowed: Vec<_> = ModulationScheme::ALL.iter().map(|m| m.name()).collect();
                CliError::Usage(format!("{at}: key 'mod': '{v}' is not one of {}", allowed.join(", ")))
            })?,
        };
        let (grid_text, grid_at) = self
            .get("ebn0")
            .cloned()
            .unwrap_or_else(|| (DEFAULT_GRID.to_string(), "default".to_string()));
        let grid_text = match self.get("ebn0_step") {
            Some((step, at)) => {
                let parts: Vec<&str> = grid_text.split(':').collect();
                match parts.as_slice() {
                    [start, end] => format!("{start}:{step}:{end}"),
                    _ => {
                        return Err(CliError::Usage(format!(
                            "{at}: key 'ebn0_step' needs ebn0 given as start:end"
                        )))
                    }
                }
            }
            None => grid_text,
        };
        let ebn0 = parse_grid(&grid_text).map_err(|e| CliError::Usage(format!("{grid_at}: key 'ebn0': {e}")))?;
        let framed = match self.get("framed") {
            None => false,
            Some((v, at)) => parse_bool(v)
                .ok_or_else(|| CliError::Usage(format!("{at}: key 'framed': '{v}' is not true or false")))?,
        };
        let r = Resolved {
            code,
            k: self.parsed("k", 256usize, "a positive integer")?,
            modulation,
            ebn0,
            ebn0_text: grid_text,
            frames_max: self.parsed("frames_max", DEFAULT_FRAMES_MAX, "a positive integer")?,
            min_errors: self.parsed("min_errors", DEFAULT_MIN_ERRORS, "a positive integer")?,
            seed: self.parsed("seed", 1u64, "an unsigned integer")?,
            framed,
            bandwidth_mhz: self.parsed("bandwidth_mhz", 20.0f64, "a number")?,
            workers: self.parsed("workers", 1usize, "a positive integer")?,
        };
        if r.workers == 0 {
            return Err(CliError::Usage("key 'workers': must be at least 1".into()));
        }
        if !(r.bandwidth_mhz > 0.0 && r.bandwidth_mhz.is_finite()) {
            return Err(CliError::Usage("key 'bandwidth_mhz': must be positive".into()));
        }
        Ok(r)
    }
}

fn parse_bool(v: &str) -> Option<bool> {
    match v {
        "true" | "1" | "yes" => Some(true),
        "false" | "0" | "no" => Some(false),
        _ => None,
    }
}

pub const DEFAULT_GRID: &str = "0:0.5:4";
pub const DEFAULT_FRAMES_MAX: u64 = 1_000_000;
pub const DEFAULT_MIN_ERRORS: u64 = 100;

/// Fully resolved run parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub code: CodeKind,
    pub k: usize,
    pub modulation: ModulationScheme,
    pub ebn0: Vec<f64>,
    pub ebn0_text: String,
    pub frames_max: u64,
    pub min_errors: u64,
    pub seed: u64,
    pub framed: bool,
    pub bandwidth_mhz: f64,
    pub workers: usize,
}

impl Resolved {
    pub fn link_config(&self) -> LinkConfig {
        LinkConfig {
            code: self.code,
            k: self.k,
            modulation: self.modulation,
            framed: self.framed,
            ofdm: OfdmConfig::with_bandwidth_mhz(self.bandwidth_mhz),
            ebn0_db: self.ebn0.clone(),
            seed: self.seed,
            ..LinkConfig::default()
        }
    }

    pub fn stopping_rule(&self) -> StoppingRule {
        StoppingRule {
            max_frames: self.frames_max,
            min_bit_errors: self.min_errors,
            min_frame_errors: 0,
        }
    }

    /// Config-file text that reproduces this run.
    pub fn to_config_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "code = {}", self.code);
        let _ = writeln!(s, "k = {}", self.k);
        let _ = writeln!(s, "mod = {}", self.modulation);
        let _ = writeln!(s, "ebn0 = {}", self.ebn0_text);
        let _ = writeln!(s, "frames_max = {}", self.frames_max);
        let _ = writeln!(s, "min_errors = {}", self.min_errors);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "framed = {}", self.framed);
        let _ = writeln!(s, "bandwidth_mhz = {}", self.bandwidth_mhz);
        let _ = writeln!(s, "workers = {}", self.workers);
        s
    }
}
