//! Impairments applied between transmitter and receiver: tapped-delay-line
//! Rayleigh fading, carrier frequency offset, PA compression and AWGN.

mod fading;
mod pa;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dsp::ComplexSignal;
use crate::error::{config, Result};
use crate::C64;

pub use fading::{apply_channel, sample_fading, ChannelRealization};
pub use pa::{apply_pa, PaKind, PaModel};

/// Speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Power-delay profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelProfile {
    pub name: String,
    /// seconds
    pub tap_delays: Vec<f64>,
    /// dB, average power per tap
    pub tap_powers_db: Vec<f64>,
}

impl ChannelProfile {
    pub fn new(name: impl Into<String>, tap_delays: Vec<f64>, tap_powers_db: Vec<f64>) -> Result<Self> {
        if tap_delays.is_empty() || tap_delays.len() != tap_powers_db.len() {
            return config("a profile needs matching, non-empty delay and power lists");
        }
        if tap_delays[0] < 0.0 || tap_delays.windows(2).any(|w| w[1] <= w[0]) {
            return config("tap delays must be non-negative and strictly increasing");
        }
        Ok(Self {
            name: name.into(),
            tap_delays,
            tap_powers_db,
        })
    }

    /// Same profile scaled to unit total power.
    pub fn normalized(&self) -> Self {
        let total: f64 = self.tap_powers_db.iter().map(|p| 10f64.powf(p / 10.0)).sum();
        let offset = 10.0 * total.log10();
        Self {
            name: self.name.clone(),
            tap_delays: self.tap_delays.clone(),
            tap_powers_db: self.tap_powers_db.iter().map(|p| p - offset).collect(),
        }
    }

    pub fn linear_powers(&self) -> Vec<f64> {
        self.tap_powers_db.iter().map(|p| 10f64.powf(p / 10.0)).collect()
    }

    pub fn max_delay(&self) -> f64 {
        *self.tap_delays.last().expect("profile has taps")
    }

    /// Delays rounded to the nearest sample at `sample_rate`.
    pub fn delays_in_samples(&self, sample_rate: f64) -> Vec<usize> {
        self.tap_delays
            .iter()
            .map(|d| (d * sample_rate).round() as usize)
            .collect()
    }
}

/// Extended Typical Urban profile (9 taps, 5 µs), unit total power.
pub fn etu_profile() -> ChannelProfile {
    ChannelProfile::new(
        "ETU",
        [0.0, 50.0, 120.0, 200.0, 230.0, 500.0, 1600.0, 2300.0, 5000.0]
            .iter()
            .map(|ns| ns * 1e-9)
            .collect(),
        vec![-1.0, -1.0, -1.0, 0.0, 0.0, 0.0, -3.0, -5.0, -7.0],
    )
    .expect("ETU definition is valid")
    .normalized()
}

/// Single unit tap: the AWGN-only channel.
pub fn flat_profile() -> ChannelProfile {
    ChannelProfile::new("flat", vec![0.0], vec![0.0]).expect("flat profile is valid")
}

/// Maximum Doppler shift `v f_c / c` for a speed in km/h.
pub fn doppler_from_speed(speed_kmh: f64, carrier_hz: f64) -> f64 {
    speed_kmh / 3.6 * carrier_hz / SPEED_OF_LIGHT
}

/// Adds circularly-symmetric Gaussian noise of total variance `noise_var`
/// per sample.
pub fn add_noise(signal: &ComplexSignal, noise_var: f64, seed: u64) -> Result<ComplexSignal> {
    if noise_var.is_nan() || noise_var < 0.0 {
        return config(format!("noise variance must be non-negative, got {noise_var}"));
    }
    if noise_var == 0.0 {
        return Ok(signal.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = (noise_var / 2.0).sqrt();
    let samples = signal
        .samples
        .iter()
        .map(|s| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            s + C64::new(re, im) * sigma
        })
        .collect();
    ComplexSignal::new(samples, signal.sample_rate)
}

/// AWGN at `snr_db` relative to the signal's mean power over its nonzero
/// samples. `f64::INFINITY` passes the signal through.
pub fn awgn(signal: &ComplexSignal, snr_db: f64, seed: u64) -> Result<ComplexSignal> {
    if snr_db == f64::INFINITY {
        return Ok(signal.clone());
    }
    if snr_db.is_nan() {
        return config("SNR is NaN");
    }
    add_noise(signal, signal.occupied_power() / 10f64.powf(snr_db / 10.0), seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn etu_definition() {
        let p = etu_profile();
        assert_eq!(p.tap_delays.len(), 9);
        assert!((p.max_delay() - 5e-6).abs() < 1e-18);
        assert!((p.linear_powers().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(p.delays_in_samples(15.36e6).last(), Some(&77));
    }

    #[test]
    fn profile_validation() {
        assert!(ChannelProfile::new("x", vec![0.0, 0.0], vec![0.0, 0.0]).is_err());
        assert!(ChannelProfile::new("x", vec![-1.0], vec![0.0]).is_err());
        assert!(ChannelProfile::new("x", vec![0.0], vec![]).is_err());
    }

    #[test]
    fn doppler_conversion() {
        assert!((doppler_from_speed(120.0, 2e9) - 222.4).abs() < 0.05);
        assert_eq!(doppler_from_speed(0.0, 2e9), 0.0);
        assert!((doppler_from_speed(60.0, 2e9) - 111.2).abs() < 0.05);
    }

    #[test]
    fn awgn_power_and_determinism() {
        let x = ComplexSignal::new(vec![C64::new(1.0, 0.0); 200_000], 1.0).unwrap();
        let y = awgn(&x, 0.0, 5).unwrap();
        let noise: f64 = y.samples.iter().map(|s| (s - 1.0).norm_sqr()).sum::<f64>() / x.len() as f64;
        assert!((noise - 1.0).abs() < 0.02);
        assert_eq!(awgn(&x, 0.0, 5).unwrap(), y);
        assert_eq!(awgn(&x, f64::INFINITY, 5).unwrap(), x);
    }
}
