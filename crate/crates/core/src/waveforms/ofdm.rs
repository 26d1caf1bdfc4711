use std::f64::consts::PI;

use ndarray::Array2;

use super::{check_grid, DemodGrid, Modem, QamGrid, WaveformConfig};
use crate::dsp::{convolve, design_windowed_sinc, ComplexSignal, FftPlan, FilterTaps};
use crate::error::{framing, Result};
use crate::C64;

/// CP-OFDM symbol mapping shared with F-OFDM.
#[derive(Debug, Clone)]
pub(crate) struct OfdmCore {
    pub n: usize,
    pub cp: usize,
    pub bins: Vec<i64>,
    pub index: Vec<usize>,
    pub plan: FftPlan,
}

impl OfdmCore {
    pub fn new(cfg: &WaveformConfig) -> Self {
        let bins = cfg.bins();
        Self {
            n: cfg.fft_size,
            cp: cfg.cp_len,
            index: bins.iter().map(|&b| cfg.bin_index(b)).collect(),
            bins,
            plan: FftPlan::new(cfg.fft_size),
        }
    }

    pub fn symbol_len(&self) -> usize {
        self.n + self.cp
    }

    /// `x = IFFT(X) * N / sqrt(K)` per symbol with the last `cp` samples
    /// prepended.
    pub fn modulate(&self, grid: &QamGrid) -> Vec<C64> {
        let (n, cp) = (self.n, self.cp);
        let scale = n as f64 / (self.bins.len() as f64).sqrt();
        let mut out = Vec::with_capacity(grid.n_symbols() * self.symbol_len());
        let mut buf = vec![C64::new(0.0, 0.0); n];
        for col in grid.symbols.columns() {
            buf.iter_mut().for_each(|b| *b = C64::new(0.0, 0.0));
            for (&i, &s) in self.index.iter().zip(col) {
                buf[i] = s * scale;
            }
            self.plan.inverse(&mut buf);
            out.extend_from_slice(&buf[n - cp..]);
            out.extend_from_slice(&buf);
        }
        out
    }

    /// FFT windows of `N` samples starting at `start(m)`, scaled by
    /// `sqrt(K)/N`.
    pub fn demodulate(&self, samples: &[C64], n_symbols: usize, start: impl Fn(usize) -> usize) -> Array2<C64> {
        let k = self.bins.len();
        let scale = (k as f64).sqrt() / self.n as f64;
        let mut out = Array2::zeros((k, n_symbols));
        let mut buf = vec![C64::new(0.0, 0.0); self.n];
        for m in 0..n_symbols {
            let s = start(m);
            buf.copy_from_slice(&samples[s..s + self.n]);
            self.plan.forward(&mut buf);
            for (row, &i) in self.index.iter().enumerate() {
                out[[row, m]] = buf[i] * scale;
            }
        }
        out
    }
}

/// Cyclic-prefix OFDM.
#[derive(Debug, Clone)]
pub struct CpOfdmModem {
    cfg: WaveformConfig,
    core: OfdmCore,
}

impl CpOfdmModem {
    pub fn new(cfg: &WaveformConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg: cfg.clone(),
            core: OfdmCore::new(cfg),
        })
    }
}

impl Modem for CpOfdmModem {
    fn config(&self) -> &WaveformConfig {
        &self.cfg
    }

    fn frame_len(&self, n_symbols: usize) -> usize {
        n_symbols * self.core.symbol_len()
    }

    fn symbols_in(&self, len: usize) -> Result<usize> {
        let sym = self.core.symbol_len();
        if len == 0 || len % sym != 0 {
            return framing(format!(
                "{len} samples is not a whole number of {sym}-sample CP-OFDM symbols"
            ));
        }
        Ok(len / sym)
    }

    fn modulate(&self, grid: &QamGrid) -> Result<ComplexSignal> {
        check_grid(grid, &self.cfg)?;
        ComplexSignal::new(self.core.modulate(grid), self.cfg.sample_rate())
    }

    fn demodulate(&self, signal: &ComplexSignal) -> Result<DemodGrid> {
        let m = self.symbols_in(signal.len())?;
        let sym = self.core.symbol_len();
        let cp = self.core.cp;
        Ok(DemodGrid {
            symbols: self.core.demodulate(&signal.samples, m, |i| i * sym + cp),
            per_bin_noise_scale: vec![1.0; self.cfg.used_subcarriers],
        })
    }

    fn csi_instants(&self, n_symbols: usize) -> Vec<f64> {
        let sym = self.core.symbol_len() as f64;
        let mid = (self.core.cp + self.core.n / 2) as f64;
        (0..n_symbols).map(|m| m as f64 * sym + mid).collect()
    }
}

/// CP-OFDM followed by one band filter over the whole allocation, with the
/// same filter at the receiver.
///
/// The receive FFT window is advanced by half the CP so that the combined
/// filter's pre- and post-cursors both fall partly inside the CP.
#[derive(Debug, Clone)]
pub struct FOfdmModem {
    cfg: WaveformConfig,
    core: OfdmCore,
    filter: FilterTaps,
    tx_scale: f64,
    advance: usize,
    /// Per used subcarrier: `tx_scale * F_tx * F_rx * timing ramp`.
    response: Vec<C64>,
}

impl FOfdmModem {
    pub fn new(cfg: &WaveformConfig) -> Result<Self> {
        cfg.validate()?;
        let core = OfdmCore::new(cfg);
        let n = cfg.fft_size as f64;
        let lo = *core.bins.iter().min().expect("non-empty allocation") as f64;
        let hi = *core.bins.iter().max().expect("non-empty allocation") as f64;
        let center = 0.5 * (lo + hi);
        let half_width = 0.5 * (hi - lo) + 0.5 + cfg.filters.fofdm_tone_offset;
        let filter = design_windowed_sinc(
            half_width * cfg.subcarrier_spacing,
            cfg.fofdm_length(),
            cfg.sample_rate(),
            cfg.filters.fofdm_window,
        )?
        .modulated(center / n);
        let gains: Vec<C64> = core.bins.iter().map(|&b| filter.response(b as f64 / n)).collect();
        let tx_scale = (core.bins.len() as f64 / gains.iter().map(|g| g.norm_sqr()).sum::<f64>()).sqrt();
        let advance = cfg.cp_len / 2;
        let response = core
            .bins
            .iter()
            .zip(&gains)
            .map(|(&b, g)| {
                // Rx filter is the matched (conjugate-reversed) Tx filter.
                tx_scale * g * g.conj() * C64::from_polar(1.0, -2.0 * PI * b as f64 * advance as f64 / n)
            })
            .collect();
        Ok(Self {
            cfg: cfg.clone(),
            core,
            filter,
            tx_scale,
            advance,
            response,
        })
    }

    pub fn filter(&self) -> &FilterTaps {
        &self.filter
    }

    fn matched(&self) -> FilterTaps {
        FilterTaps {
            taps: self.filter.taps.iter().rev().map(|t| t.conj()).collect(),
            nominal_delay: self.filter.nominal_delay,
        }
    }

    fn tail(&self) -> usize {
        self.filter.len() - 1
    }
}

impl Modem for FOfdmModem {
    fn config(&self) -> &WaveformConfig {
        &self.cfg
    }

    fn frame_len(&self, n_symbols: usize) -> usize {
        n_symbols * self.core.symbol_len() + self.tail()
    }

    fn symbols_in(&self, len: usize) -> Result<usize> {
        let sym = self.core.symbol_len();
        match len.checked_sub(self.tail()) {
            Some(body) if body > 0 && body % sym == 0 => Ok(body / sym),
            _ => framing(format!("{len} samples is not {sym}*M + {} for any M >= 1", self.tail())),
        }
    }

    fn modulate(&self, grid: &QamGrid) -> Result<ComplexSignal> {
        check_grid(grid, &self.cfg)?;
        let x = ComplexSignal::new(self.core.modulate(grid), self.cfg.sample_rate())?;
        Ok(convolve(&x, &self.filter)?.scaled(C64::new(self.tx_scale, 0.0)))
    }

    fn demodulate(&self, signal: &ComplexSignal) -> Result<DemodGrid> {
        let m = self.symbols_in(signal.len())?;
        let y = convolve(signal, &self.matched())?;
        let sym = self.core.symbol_len();
        // Tx and Rx group delays add up to the filter length minus one.
        let offset = self.core.cp + self.tail() - self.advance;
        let mut grid = self.core.demodulate(&y.samples, m, |i| i * sym + offset);
        for (mut row, r) in grid.rows_mut().into_iter().zip(&self.response) {
            row.iter_mut().for_each(|z| *z /= r);
        }
        Ok(DemodGrid {
            symbols: grid,
            per_bin_noise_scale: vec![1.0; self.cfg.used_subcarriers],
        })
    }

    fn csi_instants(&self, n_symbols: usize) -> Vec<f64> {
        let sym = self.core.symbol_len() as f64;
        let mid = (self.core.cp + self.core.n / 2) as f64 + self.filter.nominal_delay - self.advance as f64;
        (0..n_symbols).map(|m| m as f64 * sym + mid).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::Modulation;
    use crate::waveforms::{grid_evm_db, WaveformKind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid(cfg: &WaveformConfig, m: usize, seed: u64) -> QamGrid {
        QamGrid::random(
            cfg.used_subcarriers,
            m,
            Modulation::Qpsk,
            &mut ChaCha8Rng::seed_from_u64(seed),
        )
    }

    #[test]
    fn single_bin_toy_frame() {
        let mut cfg = WaveformConfig::new(WaveformKind::Cpofdm, 64, vec![0]).unwrap();
        cfg.fft_size = 8;
        cfg.rb_size = 1;
        cfg.used_subcarriers = 1;
        cfg.cp_len = 2;
        cfg.dc_guard = false;
        assert_eq!(cfg.bins(), vec![0]);
        let modem = CpOfdmModem::new(&cfg).unwrap();
        let g = QamGrid::new(Array2::from_elem((1, 1), C64::new(1.0, 0.0)), Modulation::Qpsk);
        let x = modem.modulate(&g).unwrap();
        assert_eq!(x.len(), 10);
        let mag0 = x.samples[0].norm();
        assert!(x.samples.iter().all(|s| (s.norm() - mag0).abs() < 1e-12));
        assert_eq!(&x.samples[..2], &x.samples[8..]);
    }

    #[test]
    fn lte_frame_length() {
        let cfg = WaveformConfig::lte(WaveformKind::Cpofdm);
        let x = CpOfdmModem::new(&cfg).unwrap().modulate(&grid(&cfg, 14, 1)).unwrap();
        assert_eq!(x.len(), 15344);
    }

    #[test]
    fn cpofdm_loopback_and_delay_tolerance() {
        let cfg = WaveformConfig::lte(WaveformKind::Cpofdm);
        let modem = CpOfdmModem::new(&cfg).unwrap();
        let g = grid(&cfg, 14, 2);
        let x = modem.modulate(&g).unwrap();
        let y = modem.demodulate(&x).unwrap();
        assert!(grid_evm_db(&y.symbols, &g.symbols) < -100.0);

        let d = 40;
        let mut delayed = vec![C64::new(0.0, 0.0); d];
        delayed.extend_from_slice(&x.samples[..x.len() - d]);
        let y = modem
            .demodulate(&ComplexSignal::new(delayed, x.sample_rate).unwrap())
            .unwrap();
        for (k, &b) in cfg.bins().iter().enumerate() {
            let ramp = C64::from_polar(1.0, -2.0 * PI * (b * d as i64) as f64 / 1024.0);
            for m in 0..14 {
                assert!((y.symbols[[k, m]] - g.symbols[[k, m]] * ramp).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn fofdm_loopback() {
        let cfg = WaveformConfig::lte(WaveformKind::Fofdm);
        let modem = FOfdmModem::new(&cfg).unwrap();
        assert!(modem.filter().is_symmetric(1e-12));
        let g = grid(&cfg, 28, 3);
        let x = modem.modulate(&g).unwrap();
        assert_eq!(x.len(), modem.frame_len(28));
        let y = modem.demodulate(&x).unwrap();
        let evm = grid_evm_db(&y.symbols, &g.symbols);
        assert!(evm < -35.0, "{evm}");
    }

    #[test]
    fn framing_errors() {
        let cfg = WaveformConfig::lte(WaveformKind::Fofdm);
        let f = FOfdmModem::new(&cfg).unwrap();
        assert!(f.demodulate(&ComplexSignal::zeros(1000, 1.0)).is_err());
        let c = CpOfdmModem::new(&cfg.with_kind(WaveformKind::Cpofdm)).unwrap();
        assert!(c.demodulate(&ComplexSignal::zeros(1097, 1.0)).is_err());
    }
}
