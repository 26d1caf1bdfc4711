use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ChannelProfile;
use crate::dsp::ComplexSignal;
use crate::error::{config, Result};
use crate::C64;

/// Sinusoids per tap in the sum-of-sinusoids generator.
pub const SINUSOIDS_PER_TAP: usize = 32;
/// Largest Doppler phase advance, radians, between exactly evaluated
/// fading samples.
const MAX_KNOT_PHASE: f64 = 0.01;
const MAX_STRIDE: usize = 64;

/// One draw of the time-varying tapped delay line.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// Tap delays in samples.
    pub delays: Vec<usize>,
    /// `taps[l][n]`: coefficient of tap `l` at output sample `n`. A static
    /// channel stores a single value per tap.
    pub taps: Vec<Vec<C64>>,
    /// Number of output samples the realization covers.
    pub n_samples: usize,
    /// CFO as a fraction of the subcarrier spacing.
    pub cfo_fraction: f64,
    /// FFT size that defines the subcarrier spacing for the CFO.
    pub fft_size: usize,
    /// Hz
    pub doppler_hz: f64,
    pub seed: u64,
}

impl ChannelRealization {
    /// Unit tap at delay zero over `n_samples`.
    pub fn identity(n_samples: usize) -> Self {
        Self {
            delays: vec![0],
            taps: vec![vec![C64::new(1.0, 0.0)]],
            n_samples,
            cfo_fraction: 0.0,
            fft_size: 1,
            doppler_hz: 0.0,
            seed: 0,
        }
    }

    pub fn with_cfo(mut self, cfo_fraction: f64, fft_size: usize) -> Self {
        self.cfo_fraction = cfo_fraction;
        self.fft_size = fft_size.max(1);
        self
    }

    /// Coefficient of tap `l` at sample `n` (clamped to the covered span).
    pub fn tap(&self, l: usize, n: usize) -> C64 {
        let t = &self.taps[l];
        t[n.min(t.len() - 1)]
    }

    /// Frequency response at signed bin `bin` of an `fft_size`-point grid,
    /// sampled at instant `t` (in samples) and including the CFO phase
    /// accumulated up to `t`.
    pub fn frequency_response(&self, bin: i64, t: f64) -> C64 {
        let n = self.fft_size as f64;
        let idx = t.round().clamp(0.0, self.n_samples.saturating_sub(1) as f64) as usize;
        let h: C64 = self
            .delays
            .iter()
            .enumerate()
            .map(|(l, &d)| self.tap(l, idx) * C64::from_polar(1.0, -2.0 * PI * (bin * d as i64) as f64 / n))
            .sum();
        h * C64::from_polar(1.0, 2.0 * PI * self.cfo_fraction * t / n)
    }
}

/// Rayleigh taps with a Jakes Doppler spectrum from a sum of
/// [`SINUSOIDS_PER_TAP`] equal-power sinusoids with random arrival angles
/// and phases. `doppler_hz = 0` gives a block-fading (constant) draw.
pub fn sample_fading(
    profile: &ChannelProfile,
    doppler_hz: f64,
    sample_rate: f64,
    n_samples: usize,
    seed: u64,
) -> Result<ChannelRealization> {
    if doppler_hz.is_nan() || doppler_hz < 0.0 {
        return config(format!("Doppler must be non-negative, got {doppler_hz}"));
    }
    if !(sample_rate > 0.0) {
        return config("sample rate must be positive");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let powers = profile.linear_powers();
    let amp = 1.0 / (SINUSOIDS_PER_TAP as f64).sqrt();
    let steps = if doppler_hz == 0.0 { 1 } else { n_samples.max(1) };
    // The process is evaluated exactly every `stride` samples and linearly
    // interpolated in between; the stride keeps the largest phase step per
    // knot below MAX_KNOT_PHASE, where interpolation error is ~1e-5.
    let step_phase = 2.0 * PI * doppler_hz / sample_rate;
    let stride = if step_phase > 0.0 {
        ((MAX_KNOT_PHASE / step_phase).floor() as usize).clamp(1, MAX_STRIDE)
    } else {
        1
    };
    let knots = (steps - 1).div_ceil(stride) + 1;
    let taps = powers
        .iter()
        .map(|&p| {
            let mut phasors = Vec::with_capacity(SINUSOIDS_PER_TAP);
            let mut rotors = Vec::with_capacity(SINUSOIDS_PER_TAP);
            for _ in 0..SINUSOIDS_PER_TAP {
                let alpha = rng.random_range(0.0..2.0 * PI);
                let phi = rng.random_range(0.0..2.0 * PI);
                phasors.push(C64::from_polar(amp * p.sqrt(), phi));
                rotors.push(C64::from_polar(1.0, step_phase * stride as f64 * alpha.cos()));
            }
            let mut values = Vec::with_capacity(knots);
            for k in 0..knots {
                values.push(phasors.iter().sum::<C64>());
                for (z, r) in phasors.iter_mut().zip(&rotors) {
                    *z *= r;
                }
                // keep the recurrence from drifting in magnitude
                if k % 4096 == 4095 {
                    let target = amp * p.sqrt();
                    phasors.iter_mut().for_each(|z| *z *= target / z.norm());
                }
            }
            if stride == 1 {
                return values;
            }
            (0..steps)
                .map(|n| {
                    let (k, r) = (n / stride, n % stride);
                    if r == 0 {
                        values[k]
                    } else {
                        let w = r as f64 / stride as f64;
                        values[k] * (1.0 - w) + values[k + 1] * w
                    }
                })
                .collect()
        })
        .collect();
    Ok(ChannelRealization {
        delays: profile.delays_in_samples(sample_rate),
        taps,
        n_samples,
        cfo_fraction: 0.0,
        fft_size: 1,
        doppler_hz,
        seed,
    })
}

/// Time-varying convolution `y[n] = Σ_l h_l[n] x[n - d_l]` followed by the
/// CFO rotation `e^{j2π ε n / N}`. The output has the input's length.
pub fn apply_channel(signal: &ComplexSignal, realization: &ChannelRealization) -> Result<ComplexSignal> {
    if realization.n_samples < signal.len() {
        return config(format!(
            "realization covers {} samples, signal has {}",
            realization.n_samples,
            signal.len()
        ));
    }
    let x = &signal.samples;
    let mut y = vec![C64::new(0.0, 0.0); x.len()];
    for (l, &d) in realization.delays.iter().enumerate() {
        let taps = &realization.taps[l];
        if taps.len() == 1 {
            let h = taps[0];
            for (o, &s) in y.iter_mut().skip(d).zip(x) {
                *o += h * s;
            }
        } else {
            for (n, o) in y.iter_mut().enumerate().skip(d) {
                *o += taps[n] * x[n - d];
            }
        }
    }
    if realization.cfo_fraction != 0.0 {
        let w = 2.0 * PI * realization.cfo_fraction / realization.fft_size as f64;
        for (i, o) in y.iter_mut().enumerate() {
            *o *= C64::from_polar(1.0, w * i as f64);
        }
    }
    ComplexSignal::new(y, signal.sample_rate)
}
