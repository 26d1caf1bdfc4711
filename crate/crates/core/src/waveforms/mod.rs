//! Modulators and demodulators for the five candidate waveforms.
//!
//! Every transmitter takes a [`QamGrid`] (used subcarriers x multicarrier
//! symbols) and returns a unit-average-power [`ComplexSignal`] at
//! `fft_size * subcarrier_spacing`. Receivers undo the waveform's own
//! filtering and timing so that, over an ideal channel, [`Modem::demodulate`]
//! returns the transmitted grid. Channel equalization is left to
//! [`crate::link::equalize_one_tap`].

mod config;
mod fbmc;
mod ofdm;
mod rbfofdm;
mod ufmc;

use std::fmt::Debug;

use ndarray::Array2;
use rand::Rng;

use crate::dsp::ComplexSignal;
use crate::error::{config, Result};
use crate::link::{equalize_one_tap, Equalized, EqualizerScheme, Modulation};
use crate::C64;

pub use config::{default_cp_len, FilterParams, WaveformConfig, WaveformKind};
pub use fbmc::FbmcModem;
pub use ofdm::{CpOfdmModem, FOfdmModem};
pub use rbfofdm::RbfOfdmModem;
pub use ufmc::UfmcModem;

/// Transmit symbols, `symbols[[k, m]]` for subcarrier `k` and symbol `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct QamGrid {
    pub symbols: Array2<C64>,
    pub modulation: Modulation,
}

impl QamGrid {
    pub fn new(symbols: Array2<C64>, modulation: Modulation) -> Self {
        Self { symbols, modulation }
    }

    /// Uniformly drawn constellation points.
    pub fn random<R: Rng + ?Sized>(k: usize, m: usize, modulation: Modulation, rng: &mut R) -> Self {
        let points = modulation.constellation();
        let symbols = Array2::from_shape_simple_fn((k, m), || points[rng.random_range(0..points.len())]);
        Self { symbols, modulation }
    }

    pub fn n_subcarriers(&self) -> usize {
        self.symbols.nrows()
    }

    pub fn n_symbols(&self) -> usize {
        self.symbols.ncols()
    }
}

/// Receiver output ahead of channel equalization.
#[derive(Debug, Clone, PartialEq)]
pub struct DemodGrid {
    pub symbols: Array2<C64>,
    /// Noise variance multiplier per subcarrier relative to CP-OFDM
    /// reception at the same per-sample noise level.
    pub per_bin_noise_scale: Vec<f64>,
}

/// Common transceiver contract.
pub trait Modem: Debug + Send + Sync {
    fn config(&self) -> &WaveformConfig;

    /// Transmit length of a frame of `n_symbols` multicarrier symbols.
    fn frame_len(&self, n_symbols: usize) -> usize;

    /// Inverse of [`Modem::frame_len`]; framing error if `len` is not a
    /// valid frame length.
    fn symbols_in(&self, len: usize) -> Result<usize>;

    fn modulate(&self, grid: &QamGrid) -> Result<ComplexSignal>;

    fn demodulate(&self, signal: &ComplexSignal) -> Result<DemodGrid>;

    /// Transmit-timeline sample instants at which the channel seen by each
    /// CSI column is taken: one per symbol, or per half symbol for FBMC.
    fn csi_instants(&self, n_symbols: usize) -> Vec<f64>;

    /// Demodulation followed by one-tap equalization with `csi` of shape
    /// `K x csi_instants(M).len()`. `noise_var` is the per-subcarrier noise
    /// variance of CP-OFDM reception.
    fn demodulate_equalized(
        &self,
        signal: &ComplexSignal,
        csi: &Array2<C64>,
        scheme: EqualizerScheme,
        noise_var: f64,
    ) -> Result<Equalized> {
        let grid = self.demodulate(signal)?;
        equalize_one_tap(&grid, csi, scheme, noise_var)
    }
}

/// Builds the transceiver selected by `cfg.kind`.
pub fn build_modem(cfg: &WaveformConfig) -> Result<Box<dyn Modem>> {
    cfg.validate()?;
    Ok(match cfg.kind {
        WaveformKind::Cpofdm => Box::new(CpOfdmModem::new(cfg)?),
        WaveformKind::Fbmc => Box::new(FbmcModem::new(cfg)?),
        WaveformKind::Rbfofdm => Box::new(RbfOfdmModem::new(cfg)?),
        WaveformKind::Ufmc => Box::new(UfmcModem::new(cfg)?),
        WaveformKind::Fofdm => Box::new(FOfdmModem::new(cfg)?),
    })
}

pub(crate) fn check_grid(grid: &QamGrid, cfg: &WaveformConfig) -> Result<()> {
    if grid.n_subcarriers() != cfg.used_subcarriers {
        return config(format!(
            "grid has {} subcarriers, configuration uses {}",
            grid.n_subcarriers(),
            cfg.used_subcarriers
        ));
    }
    if grid.n_symbols() == 0 {
        return config("grid has no symbols");
    }
    Ok(())
}

fn expect_kind(cfg: &WaveformConfig, kind: WaveformKind) -> Result<()> {
    if cfg.kind != kind {
        return config(format!("configuration is for {}, not {kind}", cfg.kind));
    }
    Ok(())
}

macro_rules! free_pair {
    ($modulate:ident, $demodulate:ident, $kind:expr, $modem:ty) => {
        pub fn $modulate(grid: &QamGrid, cfg: &WaveformConfig) -> Result<ComplexSignal> {
            expect_kind(cfg, $kind)?;
            <$modem>::new(cfg)?.modulate(grid)
        }

        pub fn $demodulate(signal: &ComplexSignal, cfg: &WaveformConfig) -> Result<DemodGrid> {
            expect_kind(cfg, $kind)?;
            <$modem>::new(cfg)?.demodulate(signal)
        }
    };
}

free_pair!(modulate_cpofdm, demodulate_cpofdm, WaveformKind::Cpofdm, CpOfdmModem);
free_pair!(modulate_fbmc, demodulate_fbmc, WaveformKind::Fbmc, FbmcModem);
free_pair!(
    modulate_rbfofdm,
    demodulate_rbfofdm,
    WaveformKind::Rbfofdm,
    RbfOfdmModem
);
free_pair!(modulate_ufmc, demodulate_ufmc, WaveformKind::Ufmc, UfmcModem);
free_pair!(modulate_fofdm, demodulate_fofdm, WaveformKind::Fofdm, FOfdmModem);

/// Sum of squared errors over the sum of squared references, in dB.
/// Test helper shared by the modem unit tests.
#[cfg(test)]
pub(crate) fn grid_evm_db(rx: &Array2<C64>, tx: &Array2<C64>) -> f64 {
    let err: f64 = rx.iter().zip(tx).map(|(a, b)| (a - b).norm_sqr()).sum();
    let refp: f64 = tx.iter().map(|b| b.norm_sqr()).sum();
    10.0 * (err / refp).log10()
}
