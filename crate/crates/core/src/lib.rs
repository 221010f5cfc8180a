//! Link-level simulation of short-packet OFDM transmission with polar,
//! LDPC and convolutional forward error correction over AWGN.

pub mod analysis;
pub mod bits;
pub mod channel;
pub mod conv;
pub mod error;
pub mod ldpc;
pub mod modem;
pub mod montecarlo;
pub mod ofdm;
pub mod polar;
pub mod rng;

pub use bits::{count_errors, hard_decision, BitBlock, ErrorCount, LlrVector};
pub use error::{Error, Result};
pub use rng::RandomStream;

pub use num_complex::Complex64;
