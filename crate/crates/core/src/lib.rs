//! Link-level simulation of multicarrier waveforms.
//!
//! The crate covers five transceivers (CP-OFDM, FBMC/OQAM, RB-filtered OFDM,
//! UFMC and filtered OFDM) behind a common [`waveforms::Modem`] contract,
//! the impairment chain they are exercised through ([`channel`]), a coded
//! link with one-tap equalization ([`link`]) and the measurements used to
//! compare them ([`metrics`]).
//!
//! Transform convention used everywhere: the forward DFT is unnormalized and
//! the inverse DFT carries the `1/N` factor.

// `!(x > 0.0)` is used on purpose to reject NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod dsp;
pub mod error;
pub mod link;
pub mod metrics;
pub mod seed;
pub mod waveforms;

pub use error::{Error, Result};

/// Complex sample type used throughout the crate.
pub type C64 = num_complex::Complex64;
