use std::f64::consts::PI;

use ndarray::Array2;

use super::{check_grid, DemodGrid, Modem, QamGrid, WaveformConfig};
use crate::dsp::{convolve, design_chebyshev_window, ComplexSignal, FftPlan, FilterTaps};
use crate::error::{framing, Result};
use crate::C64;

struct SubBand {
    /// Rows of the grid carried by this sub-band.
    rows: std::ops::Range<usize>,
    filter: FilterTaps,
}

impl std::fmt::Debug for SubBand {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SubBand").field("rows", &self.rows).finish()
    }
}

/// Universal filtered multicarrier: one Dolph-Chebyshev filtered OFDM
/// symbol per RB, no CP, blocks of `N + L_f - 1` samples back to back.
///
/// Reception zero-pads each block to `2N`, transforms and keeps the even
/// bins, which collects noise over `N + L_f - 1` samples instead of `N`.
#[derive(Debug)]
pub struct UfmcModem {
    cfg: WaveformConfig,
    bins: Vec<i64>,
    sub_bands: Vec<SubBand>,
    plan: FftPlan,
    plan2: FftPlan,
    /// Filter response `Σ f[n] e^{-j2πbn/N}` per used subcarrier.
    response: Vec<C64>,
}

impl UfmcModem {
    pub fn new(cfg: &WaveformConfig) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.fft_size;
        let lf = cfg.ufmc_length();
        let window = design_chebyshev_window(lf, cfg.filters.ufmc_atten_db)?;
        let mut sub_bands = Vec::new();
        let mut response = Vec::new();
        let mut row = 0;
        for rb in cfg.rb_bins() {
            let center = rb.iter().sum::<i64>() as f64 / rb.len() as f64;
            let f = window.modulated(center / n as f64);
            let raw: Vec<C64> = rb.iter().map(|&b| block_response(&f.taps, b, n)).collect();
            let mean_gain = raw.iter().map(|r| r.norm_sqr()).sum::<f64>() / raw.len() as f64;
            let norm = 1.0 / mean_gain.sqrt();
            response.extend(raw.iter().map(|r| r * norm));
            sub_bands.push(SubBand {
                rows: row..row + rb.len(),
                filter: f.scaled(norm),
            });
            row += rb.len();
        }
        Ok(Self {
            cfg: cfg.clone(),
            bins: cfg.bins(),
            sub_bands,
            plan: FftPlan::new(n),
            plan2: FftPlan::new(2 * n),
            response,
        })
    }

    pub fn filter_len(&self) -> usize {
        self.cfg.ufmc_length()
    }

    pub fn block_len(&self) -> usize {
        self.cfg.fft_size + self.filter_len() - 1
    }

    /// Noise variance multiplier of 2N-point reception, `1 + L_f/N`.
    pub fn noise_scale(&self) -> f64 {
        1.0 + self.filter_len() as f64 / self.cfg.fft_size as f64
    }

    /// Even-bin 2N-point transform of each block, scaled by `sqrt(K)/N`,
    /// without removing the sub-band filter response.
    pub fn receive_raw(&self, signal: &ComplexSignal) -> Result<Array2<C64>> {
        let m = self.symbols_in(signal.len())?;
        let n = self.cfg.fft_size;
        let blk = self.block_len();
        let scale = (self.bins.len() as f64).sqrt() / n as f64;
        let mut out = Array2::zeros((self.bins.len(), m));
        let mut buf = vec![C64::new(0.0, 0.0); 2 * n];
        for i in 0..m {
            buf.iter_mut().for_each(|b| *b = C64::new(0.0, 0.0));
            buf[..blk].copy_from_slice(&signal.samples[i * blk..(i + 1) * blk]);
            self.plan2.forward(&mut buf);
            for (row, &b) in self.bins.iter().enumerate() {
                out[[row, i]] = buf[(2 * b).rem_euclid(2 * n as i64) as usize] * scale;
            }
        }
        Ok(out)
    }
}

fn block_response(taps: &[C64], bin: i64, n: usize) -> C64 {
    taps.iter()
        .enumerate()
        .map(|(t, &f)| f * C64::from_polar(1.0, -2.0 * PI * (bin * t as i64) as f64 / n as f64))
        .sum()
}

impl Modem for UfmcModem {
    fn config(&self) -> &WaveformConfig {
        &self.cfg
    }

    fn frame_len(&self, n_symbols: usize) -> usize {
        n_symbols * self.block_len()
    }

    fn symbols_in(&self, len: usize) -> Result<usize> {
        let blk = self.block_len();
        if len == 0 || len % blk != 0 {
            return framing(format!(
                "{len} samples is not a whole number of {blk}-sample UFMC blocks"
            ));
        }
        Ok(len / blk)
    }

    fn modulate(&self, grid: &QamGrid) -> Result<ComplexSignal> {
        check_grid(grid, &self.cfg)?;
        let n = self.cfg.fft_size;
        let rate = self.cfg.sample_rate();
        let scale = n as f64 / (self.bins.len() as f64).sqrt();
        let blk = self.block_len();
        let mut out = vec![C64::new(0.0, 0.0); grid.n_symbols() * blk];
        let mut buf = vec![C64::new(0.0, 0.0); n];
        for (m, col) in grid.symbols.columns().into_iter().enumerate() {
            let block = &mut out[m * blk..(m + 1) * blk];
            for sb in &self.sub_bands {
                buf.iter_mut().for_each(|b| *b = C64::new(0.0, 0.0));
                for row in sb.rows.clone() {
                    buf[self.cfg.bin_index(self.bins[row])] = col[row] * scale;
                }
                self.plan.inverse(&mut buf);
                let y = convolve(&ComplexSignal::new(buf.clone(), rate)?, &sb.filter)?;
                block.iter_mut().zip(&y.samples).for_each(|(o, s)| *o += s);
            }
        }
        ComplexSignal::new(out, rate)
    }

    fn demodulate(&self, signal: &ComplexSignal) -> Result<DemodGrid> {
        let mut grid = self.receive_raw(signal)?;
        for (mut row, r) in grid.rows_mut().into_iter().zip(&self.response) {
            row.iter_mut().for_each(|z| *z /= r);
        }
        Ok(DemodGrid {
            symbols: grid,
            per_bin_noise_scale: vec![self.noise_scale(); self.cfg.used_subcarriers],
        })
    }

    fn csi_instants(&self, n_symbols: usize) -> Vec<f64> {
        let blk = self.block_len() as f64;
        (0..n_symbols).map(|m| (m as f64 + 0.5) * blk).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::Modulation;
    use crate::waveforms::{grid_evm_db, WaveformKind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn lte_block_length() {
        let m = UfmcModem::new(&WaveformConfig::lte(WaveformKind::Ufmc)).unwrap();
        assert_eq!(m.block_len(), 1096);
        assert!((m.noise_scale() - (1.0 + 73.0 / 1024.0)).abs() < 1e-15);
    }

    #[test]
    fn loopback() {
        let cfg = WaveformConfig::lte(WaveformKind::Ufmc);
        let modem = UfmcModem::new(&cfg).unwrap();
        let g = QamGrid::random(36, 14, Modulation::Qam16, &mut ChaCha8Rng::seed_from_u64(5));
        let y = modem.demodulate(&modem.modulate(&g).unwrap()).unwrap();
        assert!(grid_evm_db(&y.symbols, &g.symbols) < -40.0);
    }

    #[test]
    fn even_bins_match_direct_correlation() {
        // One-symbol toy: N=32 with a 5-tap filter.
        let mut cfg = WaveformConfig::new(WaveformKind::Ufmc, 32, vec![0]).unwrap();
        cfg.cp_len = 4;
        let modem = UfmcModem::new(&cfg).unwrap();
        let g = QamGrid::random(12, 1, Modulation::Qpsk, &mut ChaCha8Rng::seed_from_u64(8));
        let x = modem.modulate(&g).unwrap();
        let raw = modem.receive_raw(&x).unwrap();
        let k = 12f64;
        for (row, &b) in cfg.bins().iter().enumerate() {
            // correlate the block with subcarrier b over its full length
            let direct: C64 = x
                .samples
                .iter()
                .enumerate()
                .map(|(t, s)| s * C64::from_polar(1.0, -2.0 * PI * (b * t as i64) as f64 / 32.0))
                .sum::<C64>()
                * k.sqrt()
                / 32.0;
            assert!((raw[[row, 0]] - direct).norm() < 1e-12);
        }
    }
}
