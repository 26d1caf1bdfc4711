use std::f64::consts::PI;

use ndarray::Array2;

use super::{check_grid, DemodGrid, Modem, QamGrid, WaveformConfig};
use crate::dsp::{design_windowed_sinc, ComplexSignal, FftPlan, FilterTaps, Window};
use crate::error::{framing, Result};
use crate::C64;

#[derive(Debug, Clone)]
struct RbChain {
    rows: std::ops::Range<usize>,
    /// Integer part of the RB center; the frequency shift applied after
    /// filtering.
    shift: i64,
    /// Bin of each subcarrier in the small transform, relative to `shift`.
    small_bins: Vec<i64>,
    /// Interpolator (scaled by the upsampling factor) convolved with the
    /// RB filter.
    tx_taps: Vec<C64>,
    /// Interpolator convolved with the matched RB filter.
    rx_taps: Vec<C64>,
}

/// Resource-block filtered OFDM.
///
/// Each RB is a small CP-OFDM signal (`rbf_small_fft` points) that is
/// upsampled to the full rate, filtered by its own band filter and shifted
/// to the RB position. The receiver mirrors the chain per RB and advances
/// the small FFT window by one reduced-rate sample into the CP.
#[derive(Debug)]
pub struct RbfOfdmModem {
    cfg: WaveformConfig,
    small: usize,
    cp: usize,
    up: usize,
    chains: Vec<RbChain>,
    /// Group delay of one pass through `tx_taps`, full-rate samples.
    delay: usize,
    tail: usize,
    tx_scale: f64,
    advance: usize,
    plan: FftPlan,
    response: Vec<C64>,
}

// Reduced-rate samples by which the receive window moves into the CP.
const ADVANCE: usize = 1;

impl RbfOfdmModem {
    pub fn new(cfg: &WaveformConfig) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.fft_size;
        let small = cfg.filters.rbf_small_fft;
        let up = n / small;
        let fs = cfg.sample_rate();
        let df = cfg.subcarrier_spacing;
        let antialias = if up > 1 {
            design_windowed_sinc(
                small as f64 / 2.0 * df,
                cfg.filters.rbf_antialias_taps_per_phase * up + 1,
                fs,
                Window::Hann,
            )?
        } else {
            FilterTaps::identity()
        };
        let base = design_windowed_sinc(
            cfg.filters.rbf_cutoff_spacings * df,
            cfg.rbf_filter_length(),
            fs,
            Window::Hann,
        )?;
        let delay = antialias.delay_samples() + base.delay_samples();
        let k = cfg.used_subcarriers;
        let advance = ADVANCE.min(cfg.rbf_cp_len());

        let mut chains = Vec::new();
        let mut gains = Vec::new();
        let mut row = 0;
        for rb in cfg.rb_bins() {
            let center = rb.iter().sum::<i64>() as f64 / rb.len() as f64;
            let shift = center.floor() as i64;
            let filt = base.modulated((center - shift as f64) / n as f64);
            let small_bins: Vec<i64> = rb.iter().map(|b| b - shift).collect();
            if small_bins.iter().any(|s| s.unsigned_abs() as usize >= small / 2) {
                return crate::error::config(format!("RB {rb:?} does not fit a {small}-point transform"));
            }
            for &s in &small_bins {
                let f = s as f64 / n as f64;
                let a = antialias.response(f);
                let h = filt.response(f);
                gains.push((a * a.conj() * h * h.conj(), s));
            }
            let tx_taps = crate::dsp::convolve_slices(&antialias.scaled(up as f64).taps, &filt.taps);
            let matched: Vec<C64> = filt.taps.iter().rev().map(|t| t.conj()).collect();
            let rx_taps = crate::dsp::convolve_slices(&antialias.taps, &matched);
            chains.push(RbChain {
                rows: row..row + rb.len(),
                shift,
                small_bins,
                tx_taps,
                rx_taps,
            });
            row += rb.len();
        }
        // Tx power per subcarrier is |A·H|²; normalize to unit average.
        let tx_power: f64 = gains.iter().map(|(g, _)| g.norm()).sum::<f64>() / k as f64;
        let tx_scale = 1.0 / tx_power.sqrt();
        let response = gains
            .iter()
            .map(|&(g, s)| tx_scale * g * C64::from_polar(1.0, -2.0 * PI * s as f64 * advance as f64 / small as f64))
            .collect();
        let tail = chains[0].tx_taps.len() - 1;
        Ok(Self {
            cfg: cfg.clone(),
            small,
            cp: cfg.rbf_cp_len(),
            up,
            chains,
            delay,
            tail,
            tx_scale,
            advance,
            plan: FftPlan::new(small),
            response,
        })
    }

    fn low_rate_symbol(&self) -> usize {
        self.small + self.cp
    }

    fn shift_phasor(&self, shift: i64, sign: f64) -> impl Fn(usize) -> C64 + '_ {
        let n = self.cfg.fft_size as i64;
        move |t: usize| {
            let phase = (shift * t as i64).rem_euclid(n) as f64 / n as f64;
            C64::from_polar(1.0, sign * 2.0 * PI * phase)
        }
    }
}

impl Modem for RbfOfdmModem {
    fn config(&self) -> &WaveformConfig {
        &self.cfg
    }

    fn frame_len(&self, n_symbols: usize) -> usize {
        n_symbols * self.low_rate_symbol() * self.up + self.tail
    }

    fn symbols_in(&self, len: usize) -> Result<usize> {
        let sym = self.low_rate_symbol() * self.up;
        match len.checked_sub(self.tail) {
            Some(body) if body > 0 && body % sym == 0 => Ok(body / sym),
            _ => framing(format!("{len} samples is not {sym}*M + {} for any M >= 1", self.tail)),
        }
    }

    fn modulate(&self, grid: &QamGrid) -> Result<ComplexSignal> {
        check_grid(grid, &self.cfg)?;
        let m = grid.n_symbols();
        let scale = self.small as f64 / (self.cfg.used_subcarriers as f64).sqrt() * self.tx_scale;
        let mut out = vec![C64::new(0.0, 0.0); self.frame_len(m)];
        let mut buf = vec![C64::new(0.0, 0.0); self.small];
        let mut rb_out = vec![C64::new(0.0, 0.0); out.len()];
        for chain in &self.chains {
            rb_out.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
            for (i, col) in grid.symbols.columns().into_iter().enumerate() {
                buf.iter_mut().for_each(|b| *b = C64::new(0.0, 0.0));
                for (row, &s) in chain.rows.clone().zip(&chain.small_bins) {
                    buf[s.rem_euclid(self.small as i64) as usize] = col[row] * scale;
                }
                self.plan.inverse(&mut buf);
                // zero-stuffed low-rate sample j lands at full-rate index j*up
                let first = i * self.low_rate_symbol();
                let body = buf[self.small - self.cp..].iter().chain(buf.iter());
                for (j, &x) in body.enumerate() {
                    let at = (first + j) * self.up;
                    for (o, &h) in rb_out[at..at + chain.tx_taps.len()].iter_mut().zip(&chain.tx_taps) {
                        *o += x * h;
                    }
                }
            }
            let rot = self.shift_phasor(chain.shift, 1.0);
            for (t, (o, v)) in out.iter_mut().zip(&rb_out).enumerate() {
                *o += v * rot(t);
            }
        }
        ComplexSignal::new(out, self.cfg.sample_rate())
    }

    fn demodulate(&self, signal: &ComplexSignal) -> Result<DemodGrid> {
        let m = self.symbols_in(signal.len())?;
        let k = self.cfg.used_subcarriers;
        let low_len = m * self.low_rate_symbol();
        let scale = (k as f64).sqrt() / self.small as f64;
        let mut grid = Array2::zeros((k, m));
        let mut shifted = vec![C64::new(0.0, 0.0); signal.len()];
        let mut low = vec![C64::new(0.0, 0.0); low_len];
        let mut buf = vec![C64::new(0.0, 0.0); self.small];
        for chain in &self.chains {
            let rot = self.shift_phasor(chain.shift, -1.0);
            for (t, (s, y)) in shifted.iter_mut().zip(&signal.samples).enumerate() {
                *s = y * rot(t);
            }
            // Only the decimated outputs of the receive filter are needed:
            // full-rate output index 2*delay + j*up for low-rate sample j.
            let h = &chain.rx_taps;
            for (j, l) in low.iter_mut().enumerate() {
                let at = 2 * self.delay + j * self.up;
                let lo = (at + 1).saturating_sub(h.len());
                *l = (lo..=at.min(shifted.len() - 1)).map(|t| shifted[t] * h[at - t]).sum();
            }
            for i in 0..m {
                let start = i * self.low_rate_symbol() + self.cp - self.advance;
                buf.copy_from_slice(&low[start..start + self.small]);
                self.plan.forward(&mut buf);
                for (row, &s) in chain.rows.clone().zip(&chain.small_bins) {
                    grid[[row, i]] = buf[s.rem_euclid(self.small as i64) as usize] * scale / self.response[row];
                }
            }
        }
        Ok(DemodGrid {
            symbols: grid,
            per_bin_noise_scale: vec![1.0; k],
        })
    }

    fn csi_instants(&self, n_symbols: usize) -> Vec<f64> {
        let sym = (self.low_rate_symbol() * self.up) as f64;
        let mid = ((self.cp - self.advance) * self.up) as f64 + (self.small * self.up) as f64 / 2.0 + self.delay as f64;
        (0..n_symbols).map(|m| m as f64 * sym + mid).collect()
    }
}
