use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{add_noise, apply_channel, ChannelRealization};
use crate::dsp::ComplexSignal;
use crate::error::{config, Result};
use crate::link::Modulation;
use crate::waveforms::{CpOfdmModem, Modem, QamGrid, WaveformConfig, WaveformKind};
use crate::C64;

/// `SINR = (L K / N² + 1/SNR)⁻¹` for an effective channel exceeding the CP
/// by `l` taps of unit total power.
pub fn sinr_analytical(l: usize, k: usize, n: usize, snr_linear: f64) -> f64 {
    let isi = l as f64 * k as f64 / (n as f64 * n as f64);
    1.0 / (isi + 1.0 / snr_linear)
}

/// SNR loss of UFMC reception, `10 lg(1 + L/N)` dB.
pub fn ufmc_snr_loss(l: usize, n: usize) -> f64 {
    10.0 * (1.0 + l as f64 / n as f64).log10()
}

/// Linear SNR from dB.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Monte-Carlo SINR of CP-OFDM when the channel extends `l` taps past the
/// CP.
///
/// The channel has `l` taps at delays `cp+1 ..= cp+l`, each of power `1/l`,
/// so the effective impulse response exceeds the CP by `l` taps with unit
/// total power. With `l = 0` a single unit tap inside the CP is used.
/// Returns dB.
pub fn sinr_monte_carlo(l: usize, cfg: &WaveformConfig, snr_db: f64, frames: usize, seed: u64) -> Result<f64> {
    let (delays, powers): (Vec<usize>, Vec<f64>) = if l == 0 {
        (vec![0], vec![1.0])
    } else {
        (1..=l).map(|j| (cfg.cp_len + j, 1.0 / l as f64)).unzip()
    };
    sinr_monte_carlo_taps(&delays, &powers, cfg, snr_db, frames, seed)
}

/// Monte-Carlo SINR of CP-OFDM over a static multipath channel.
///
/// Each frame draws fresh tap phases; magnitudes are `sqrt(powers)`. The
/// signal component per subcarrier is the exact in-window gain
/// `Σ h_j (N-e_j)/N e^{-j2πbd_j/N}`, with `e_j` the excess of delay `d_j`
/// over the CP; everything else at the FFT output (ISI, ICI and noise)
/// counts as interference. Interference is measured; signal power is taken
/// at its expectation `Σ p_j ((N-e_j)/N)²` per unit symbol, since the
/// in-band channel gain of a short profile fluctuates far more from frame
/// to frame than the quantities being compared. Returns dB.
pub fn sinr_monte_carlo_taps(
    delays: &[usize],
    powers: &[f64],
    cfg: &WaveformConfig,
    snr_db: f64,
    frames: usize,
    seed: u64,
) -> Result<f64> {
    if frames == 0 {
        return config("at least one frame is required");
    }
    if delays.is_empty() || delays.len() != powers.len() {
        return config("delays and powers must be non-empty and of equal length");
    }
    if powers.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return config("tap powers must be finite and non-negative");
    }
    let cfg = cfg.with_kind(WaveformKind::Cpofdm);
    let modem = CpOfdmModem::new(&cfg)?;
    let n = cfg.fft_size;
    let k = cfg.used_subcarriers;
    let m = 14;
    let bins = cfg.bins();
    let inside = |d: usize| n.saturating_sub(d.saturating_sub(cfg.cp_len)) as f64 / n as f64;
    let mean_gain: f64 = delays.iter().zip(powers).map(|(&d, p)| p * inside(d).powi(2)).sum();
    if !(mean_gain > 0.0) {
        return config("the channel has no power inside the FFT window");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sig, mut err) = (0.0, 0.0);
    for f in 0..frames {
        let grid = QamGrid::random(k, m, Modulation::Qpsk, &mut rng);
        let x = modem.modulate(&grid)?;
        let taps: Vec<C64> = powers
            .iter()
            .map(|p| C64::from_polar(p.sqrt(), rng.random_range(0.0..2.0 * PI)))
            .collect();
        let realization = ChannelRealization {
            delays: delays.to_vec(),
            taps: taps.iter().map(|&t| vec![t]).collect(),
            ..ChannelRealization::identity(x.len())
        };
        let y = apply_channel(&x, &realization)?;
        // per-subcarrier noise of 1/snr after demodulation
        let noise_var = n as f64 / (k as f64 * db_to_linear(snr_db));
        let y = add_noise(&y, noise_var, seed ^ (f as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))?;
        let rx = modem.demodulate(&ComplexSignal::new(y.samples, y.sample_rate)?)?;
        let gains: Vec<C64> = bins
            .iter()
            .map(|&b| {
                delays
                    .iter()
                    .zip(&taps)
                    .map(|(&d, &h)| h * inside(d) * C64::from_polar(1.0, -2.0 * PI * (b * d as i64) as f64 / n as f64))
                    .sum()
            })
            .collect();
        // skip the first symbol, whose predecessor is silence
        for c in 1..m {
            for (r, g) in gains.iter().enumerate() {
                let s = grid.symbols[[r, c]] * g;
                sig += grid.symbols[[r, c]].norm_sqr() * mean_gain;
                err += (rx.symbols[[r, c]] - s).norm_sqr();
            }
        }
    }
    Ok(10.0 * (sig / err).log10())
}
