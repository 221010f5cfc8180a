//! AWGN channel and Eb/N0 bookkeeping.
//!
//! Symbols have unit average energy, so Es/N0 = 1 / (2 sigma^2) with sigma^2
//! the noise variance per real dimension. Eb is energy per delivered message
//! bit, hence Es/N0 = R_c * b * Eb/N0 where R_c = message bits / coded bits.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rng::RandomStream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrPoint {
    pub ebn0_db: f64,
    pub code_rate: f64,
    pub bits_per_symbol: usize,
}

impl SnrPoint {
    pub fn new(ebn0_db: f64, code_rate: f64, bits_per_symbol: usize) -> Result<Self> {
        if !(code_rate > 0.0 && code_rate <= 1.0) {
            return Err(Error::invalid("code_rate", format!("{code_rate} not in (0, 1]")));
        }
        if bits_per_symbol == 0 {
            return Err(Error::invalid("bits_per_symbol", "must be at least 1"));
        }
        if !ebn0_db.is_finite() {
            return Err(Error::invalid("ebn0_db", "must be finite"));
        }
        Ok(SnrPoint {
            ebn0_db,
            code_rate,
            bits_per_symbol,
        })
    }

    /// Linear Es/N0.
    pub fn es_n0(&self) -> f64 {
        self.code_rate * self.bits_per_symbol as f64 * db_to_linear(self.ebn0_db)
    }

    /// Noise variance per real dimension.
    pub fn sigma2(&self) -> f64 {
        1.0 / (2.0 * self.es_n0())
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn ebn0_to_sigma2(ebn0_db: f64, code_rate: f64, bits_per_symbol: usize) -> Result<f64> {
    Ok(SnrPoint::new(ebn0_db, code_rate, bits_per_symbol)?.sigma2())
}

/// Adds complex white Gaussian noise with variance `sigma2` per real
/// dimension, drawing I then Q for each sample in order.
pub fn awgn(samples: &mut [Complex64], sigma2: f64, rng: &mut RandomStream) {
    let sigma = sigma2.sqrt();
    for s in samples {
        let re = rng.normal();
        let im = rng.normal();
        s.re += sigma * re;
        s.im += sigma * im;
    }
}
