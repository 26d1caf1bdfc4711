use std::f64::consts::PI;

use crate::error::{config, Result};
use crate::C64;

/// Complex baseband samples at a fixed sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSignal {
    pub samples: Vec<C64>,
    /// Hz
    pub sample_rate: f64,
}

impl ComplexSignal {
    pub fn new(samples: Vec<C64>, sample_rate: f64) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return config(format!("sample rate must be positive, got {sample_rate}"));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn zeros(len: usize, sample_rate: f64) -> Self {
        Self {
            samples: vec![C64::new(0.0, 0.0); len],
            sample_rate,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Σ|x[n]|²
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum()
    }

    /// Mean power over all samples (0 for an empty signal).
    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            0.0
        } else {
            self.energy() / self.samples.len() as f64
        }
    }

    /// Mean power over the samples that carry any energy.
    pub fn occupied_power(&self) -> f64 {
        let (sum, count) = self
            .samples
            .iter()
            .map(|s| s.norm_sqr())
            .filter(|p| *p > 0.0)
            .fold((0.0, 0usize), |(s, c), p| (s + p, c + 1));
        if count == 0 {
            0.0
        } else {
            sum / count as f64
        }
    }

    pub fn scaled(&self, gain: C64) -> Self {
        Self {
            samples: self.samples.iter().map(|s| s * gain).collect(),
            sample_rate: self.sample_rate,
        }
    }
}

/// FIR coefficients plus the group delay used to align filtered signals.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterTaps {
    pub taps: Vec<C64>,
    /// samples
    pub nominal_delay: f64,
}

impl FilterTaps {
    /// Linear-phase real taps; the delay is the midpoint.
    pub fn from_real(taps: &[f64]) -> Self {
        let nominal_delay = (taps.len() as f64 - 1.0) / 2.0;
        Self {
            taps: taps.iter().map(|&t| C64::new(t, 0.0)).collect(),
            nominal_delay,
        }
    }

    pub fn identity() -> Self {
        Self::from_real(&[1.0])
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// Integer alignment delay.
    pub fn delay_samples(&self) -> usize {
        self.nominal_delay.round().max(0.0) as usize
    }

    /// `taps[i] == taps[len-1-i]` within `rel_tol` of the largest tap.
    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        let peak = self.taps.iter().map(|t| t.norm()).fold(0.0, f64::max);
        let n = self.taps.len();
        (0..n / 2).all(|i| (self.taps[i] - self.taps[n - 1 - i]).norm() <= rel_tol * peak.max(1e-300))
    }

    /// Frequency response at `freq` (cycles/sample) referenced to the
    /// nominal delay, so a symmetric real filter has a real response.
    pub fn response(&self, freq: f64) -> C64 {
        self.taps
            .iter()
            .enumerate()
            .map(|(n, &h)| h * C64::from_polar(1.0, -2.0 * PI * freq * (n as f64 - self.nominal_delay)))
            .sum()
    }

    /// Shifts the passband by `freq` cycles/sample, keeping the phase
    /// reference at the nominal delay.
    pub fn modulated(&self, freq: f64) -> Self {
        let taps = self
            .taps
            .iter()
            .enumerate()
            .map(|(n, &h)| h * C64::from_polar(1.0, 2.0 * PI * freq * (n as f64 - self.nominal_delay)))
            .collect();
        Self {
            taps,
            nominal_delay: self.nominal_delay,
        }
    }

    pub fn scaled(&self, gain: f64) -> Self {
        Self {
            taps: self.taps.iter().map(|t| t * gain).collect(),
            nominal_delay: self.nominal_delay,
        }
    }

    /// Σ taps
    pub fn dc_gain(&self) -> C64 {
        self.taps.iter().sum()
    }

    /// Real parts, for designs known to be real.
    pub fn real_taps(&self) -> Vec<f64> {
        self.taps.iter().map(|t| t.re).collect()
    }
}
