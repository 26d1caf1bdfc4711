use ndarray::Array2;

use super::{check_grid, DemodGrid, Modem, QamGrid, WaveformConfig};
use crate::dsp::{design_phydyas_prototype, ComplexSignal, FftPlan};
use crate::error::{framing, Result};
use crate::link::{Equalized, EqualizerScheme};
use crate::C64;

const OVERLAP: usize = 4;

/// FBMC with offset-QAM staggering and the PHYDYAS prototype.
///
/// Real and imaginary parts of each QAM symbol go out on consecutive half
/// symbols (`N/2` samples apart) with phase `j^(k+n)`, where `k` is the
/// signed subcarrier bin and `n` the half-symbol index. The full pulse
/// tail is transmitted, so a frame of `M` symbols is
/// `(2M-1)N/2 + 4N - 1` samples long.
///
/// Synthesis and analysis use the polyphase identity: per half symbol one
/// `N`-point transform, then the prototype applied to the periodically
/// extended (or folded) block.
#[derive(Debug)]
pub struct FbmcModem {
    cfg: WaveformConfig,
    bins: Vec<i64>,
    index: Vec<usize>,
    prototype: Vec<f64>,
    plan: FftPlan,
}

/// `j^e` for integer `e`.
fn j_pow(e: i64) -> C64 {
    match e.rem_euclid(4) {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

impl FbmcModem {
    pub fn new(cfg: &WaveformConfig) -> Result<Self> {
        cfg.validate()?;
        let prototype = design_phydyas_prototype(OVERLAP, cfg.fft_size)?.real_taps();
        let bins = cfg.bins();
        Ok(Self {
            cfg: cfg.clone(),
            index: bins.iter().map(|&b| cfg.bin_index(b)).collect(),
            bins,
            prototype,
            plan: FftPlan::new(cfg.fft_size),
        })
    }

    pub fn prototype(&self) -> &[f64] {
        &self.prototype
    }

    fn half(&self) -> usize {
        self.cfg.fft_size / 2
    }

    /// Prototype group delay, `2N - 1` samples.
    fn delay(&self) -> usize {
        (self.prototype.len() - 1) / 2
    }

    /// OQAM phase of subcarrier row `row` at half symbol `n`.
    pub fn phase(&self, row: usize, n: usize) -> C64 {
        j_pow(self.bins[row] + n as i64)
    }

    /// Matched-filter outputs per subcarrier and half symbol, de-rotated by
    /// the OQAM phase but before taking real parts. Shape `K x 2M`.
    pub fn analysis(&self, signal: &ComplexSignal) -> Result<Array2<C64>> {
        let m = self.symbols_in(signal.len())?;
        let n = self.cfg.fft_size;
        let k = self.bins.len();
        let d = self.delay();
        let scale = (k as f64).sqrt() / n as f64;
        let mut out = Array2::zeros((k, 2 * m));
        let mut fold = vec![C64::new(0.0, 0.0); n];
        for h in 0..2 * m {
            fold.iter_mut().for_each(|f| *f = C64::new(0.0, 0.0));
            let seg = &signal.samples[h * self.half()..h * self.half() + self.prototype.len()];
            for (t, (&y, &g)) in seg.iter().zip(&self.prototype).enumerate() {
                fold[(t + n - d % n) % n] += y * g;
            }
            self.plan.forward(&mut fold);
            for (row, &i) in self.index.iter().enumerate() {
                out[[row, h]] = fold[i] * self.phase(row, h).conj() * scale;
            }
        }
        Ok(out)
    }
}

fn pair_real_parts(z: &Array2<C64>) -> Array2<C64> {
    let (k, h) = z.dim();
    Array2::from_shape_fn((k, h / 2), |(r, m)| C64::new(z[[r, 2 * m]].re, z[[r, 2 * m + 1]].re))
}

impl Modem for FbmcModem {
    fn config(&self) -> &WaveformConfig {
        &self.cfg
    }

    fn frame_len(&self, n_symbols: usize) -> usize {
        (2 * n_symbols - 1) * self.half() + self.prototype.len()
    }

    fn symbols_in(&self, len: usize) -> Result<usize> {
        let half = self.half();
        let fail = || {
            framing(format!(
                "{len} samples is not (2M-1)*{half} + {} for any M >= 1",
                self.prototype.len()
            ))
        };
        match len.checked_sub(self.prototype.len()) {
            Some(rest) if rest % half == 0 && (rest / half) % 2 == 1 => Ok((rest / half).div_ceil(2)),
            _ => fail(),
        }
    }

    fn modulate(&self, grid: &QamGrid) -> Result<ComplexSignal> {
        check_grid(grid, &self.cfg)?;
        let n = self.cfg.fft_size;
        let m = grid.n_symbols();
        let d = self.delay();
        let scale = n as f64 / (self.bins.len() as f64).sqrt();
        let mut out = vec![C64::new(0.0, 0.0); self.frame_len(m)];
        let mut buf = vec![C64::new(0.0, 0.0); n];
        for h in 0..2 * m {
            buf.iter_mut().for_each(|b| *b = C64::new(0.0, 0.0));
            for (row, &i) in self.index.iter().enumerate() {
                let s = grid.symbols[[row, h / 2]];
                let a = if h % 2 == 0 { s.re } else { s.im };
                buf[i] = self.phase(row, h) * a * scale;
            }
            self.plan.inverse(&mut buf);
            let seg = &mut out[h * self.half()..h * self.half() + self.prototype.len()];
            for (t, (o, &g)) in seg.iter_mut().zip(&self.prototype).enumerate() {
                *o += buf[(t + n - d % n) % n] * g;
            }
        }
        ComplexSignal::new(out, self.cfg.sample_rate())
    }

    fn demodulate(&self, signal: &ComplexSignal) -> Result<DemodGrid> {
        Ok(DemodGrid {
            symbols: pair_real_parts(&self.analysis(signal)?),
            per_bin_noise_scale: vec![1.0; self.cfg.used_subcarriers],
        })
    }

    fn csi_instants(&self, n_symbols: usize) -> Vec<f64> {
        (0..2 * n_symbols)
            .map(|h| (h * self.half() + self.delay()) as f64)
            .collect()
    }

    /// Equalizes every half-symbol output with its own channel coefficient
    /// before the real part is taken; otherwise the channel phase would
    /// rotate the imaginary intrinsic interference into the data.
    fn demodulate_equalized(
        &self,
        signal: &ComplexSignal,
        csi: &Array2<C64>,
        _scheme: EqualizerScheme,
        noise_var: f64,
    ) -> Result<Equalized> {
        let z = self.analysis(signal)?;
        if csi.dim() != z.dim() {
            return crate::error::config(format!("CSI shape {:?} does not match {:?}", csi.dim(), z.dim()));
        }
        // The unbiased MMSE and ZF estimates coincide for a single tap.
        let (k, h) = z.dim();
        let mut re = Array2::<f64>::zeros((k, h));
        let mut var = Array2::<f64>::zeros((k, h));
        for ((r, c), zc) in z.indexed_iter() {
            let hc = csi[[r, c]];
            if hc.norm() < crate::link::ERASURE_THRESHOLD {
                var[[r, c]] = f64::INFINITY;
            } else {
                re[[r, c]] = (zc / hc).re;
                var[[r, c]] = 0.5 * noise_var / hc.norm_sqr();
            }
        }
        let symbols = Array2::from_shape_fn((k, h / 2), |(r, m)| C64::new(re[[r, 2 * m]], re[[r, 2 * m + 1]]));
        let noise_var = Array2::from_shape_fn((k, h / 2), |(r, m)| var[[r, 2 * m]] + var[[r, 2 * m + 1]]);
        Ok(Equalized {
            bias: Array2::ones((k, h / 2)),
            symbols,
            noise_var,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::Modulation;
    use crate::waveforms::{grid_evm_db, WaveformKind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn small_cfg() -> WaveformConfig {
        WaveformConfig::new(WaveformKind::Fbmc, 64, vec![0, 1]).unwrap()
    }

    #[test]
    fn polyphase_matches_direct_form() {
        let cfg = small_cfg();
        let modem = FbmcModem::new(&cfg).unwrap();
        let g = QamGrid::random(24, 3, Modulation::Qam16, &mut ChaCha8Rng::seed_from_u64(1));
        let x = modem.modulate(&g).unwrap();
        let n = 64.0;
        let p = modem.prototype();
        let d = modem.delay() as f64;
        let k = 24f64;
        for t in 0..x.len() {
            let mut acc = C64::new(0.0, 0.0);
            for h in 0..6 {
                let start = h * 32;
                if t < start || t - start >= p.len() {
                    continue;
                }
                let tau = (t - start) as f64;
                for (row, &b) in cfg.bins().iter().enumerate() {
                    let s = g.symbols[[row, h / 2]];
                    let a = if h % 2 == 0 { s.re } else { s.im };
                    acc += modem.phase(row, h)
                        * a
                        * p[t - start]
                        * C64::from_polar(1.0, 2.0 * PI * b as f64 * (tau - d) / n);
                }
            }
            assert!((x.samples[t] - acc / k.sqrt()).norm() < 1e-9, "sample {t}");
        }
    }

    #[test]
    fn single_symbol_spans_four_intervals() {
        let cfg = small_cfg();
        let modem = FbmcModem::new(&cfg).unwrap();
        let mut sym = Array2::zeros((24, 1));
        sym[[5, 0]] = C64::new(1.0, 0.0);
        let x = modem.modulate(&QamGrid::new(sym, Modulation::Qpsk)).unwrap();
        // (2M-1)N/2 + 4N-1 with M=1
        assert_eq!(x.len(), 32 + 4 * 64 - 1);
        let nonzero: Vec<usize> = (0..x.len()).filter(|&t| x.samples[t].norm() > 1e-12).collect();
        assert!(nonzero.last().unwrap() - nonzero.first().unwrap() >= 4 * 64 - 3);
    }

    #[test]
    fn loopback_lte() {
        let cfg = WaveformConfig::lte(WaveformKind::Fbmc);
        let modem = FbmcModem::new(&cfg).unwrap();
        let g = QamGrid::random(36, 20, Modulation::Qam16, &mut ChaCha8Rng::seed_from_u64(2));
        let y = modem.demodulate(&modem.modulate(&g).unwrap()).unwrap();
        let evm = grid_evm_db(&y.symbols, &g.symbols);
        assert!(evm < -40.0, "{evm}");
    }

    #[test]
    fn intrinsic_interference_is_imaginary() {
        let cfg = WaveformConfig::lte(WaveformKind::Fbmc);
        let modem = FbmcModem::new(&cfg).unwrap();
        // only subcarrier 10 carries data; its neighbour 11 must see a
        // purely imaginary leak after de-rotation
        let mut sym = Array2::zeros((36, 6));
        for m in 0..6 {
            sym[[10, m]] = C64::new(0.7, -0.7);
        }
        let z = modem
            .analysis(&modem.modulate(&QamGrid::new(sym, Modulation::Qpsk)).unwrap())
            .unwrap();
        let leak_re: f64 = (0..12).map(|h| z[[11, h]].re.powi(2)).sum();
        let leak_im: f64 = (0..12).map(|h| z[[11, h]].im.powi(2)).sum();
        assert!(leak_im > 1e-3);
        assert!(10.0 * (leak_re / (0.49 * 12.0)).log10() < -40.0);
    }

    #[test]
    fn odd_framing_rejected() {
        let modem = FbmcModem::new(&small_cfg()).unwrap();
        assert_eq!(modem.symbols_in(255 + 32).unwrap(), 1);
        assert_eq!(modem.symbols_in(255 + 96).unwrap(), 2);
        assert!(modem.symbols_in(255).is_err());
        assert!(modem.symbols_in(255 + 64).is_err());
        assert!(modem.symbols_in(100).is_err());
    }
}
