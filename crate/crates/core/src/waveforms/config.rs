use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dsp::Window;
use crate::error::{config, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveformKind {
    Cpofdm,
    Fbmc,
    Rbfofdm,
    Ufmc,
    Fofdm,
}

impl WaveformKind {
    pub const ALL: [WaveformKind; 5] = [
        WaveformKind::Cpofdm,
        WaveformKind::Fbmc,
        WaveformKind::Rbfofdm,
        WaveformKind::Ufmc,
        WaveformKind::Fofdm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WaveformKind::Cpofdm => "cpofdm",
            WaveformKind::Fbmc => "fbmc",
            WaveformKind::Rbfofdm => "rbfofdm",
            WaveformKind::Ufmc => "ufmc",
            WaveformKind::Fofdm => "fofdm",
        }
    }

    /// Everything except CP-OFDM.
    pub fn is_filtered(self) -> bool {
        self != WaveformKind::Cpofdm
    }
}

impl fmt::Display for WaveformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WaveformKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        WaveformKind::ALL
            .into_iter()
            .find(|k| k.name() == s.to_ascii_lowercase())
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown waveform '{s}', expected one of: cpofdm, fbmc, rbfofdm, ufmc, fofdm"
                ))
            })
    }
}

/// Per-waveform filter settings. Lengths left as `None` are derived from
/// the FFT size (see the `*_length` accessors on [`WaveformConfig`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterParams {
    /// Default `N/2 + 1`.
    pub fofdm_length: Option<usize>,
    /// Passband extension beyond the outermost used subcarrier, in spacings.
    pub fofdm_tone_offset: f64,
    pub fofdm_window: Window,
    /// Default `cp_len + 1`.
    pub ufmc_length: Option<usize>,
    pub ufmc_atten_db: f64,
    /// Per-RB transform size.
    pub rbf_small_fft: usize,
    /// Full-rate RB filter length, default 145 at N=1024 scaled with N.
    pub rbf_filter_length: Option<usize>,
    /// RB filter cutoff measured from the RB center, in spacings.
    pub rbf_cutoff_spacings: f64,
    /// Interpolation filter length is `rbf_antialias_taps_per_phase * up + 1`.
    pub rbf_antialias_taps_per_phase: usize,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            fofdm_length: None,
            fofdm_tone_offset: 2.5,
            fofdm_window: Window::Hann,
            ufmc_length: None,
            ufmc_atten_db: 40.0,
            rbf_small_fft: 32,
            rbf_filter_length: None,
            rbf_cutoff_spacings: 8.5,
            rbf_antialias_taps_per_phase: 8,
        }
    }
}

/// Numerology and allocation shared by all waveforms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveformConfig {
    pub kind: WaveformKind,
    pub fft_size: usize,
    pub used_subcarriers: usize,
    /// Hz
    pub subcarrier_spacing: f64,
    pub cp_len: usize,
    pub rb_size: usize,
    pub rb_allocation: Vec<usize>,
    /// Skip the DC bin when mapping subcarriers.
    pub dc_guard: bool,
    pub filters: FilterParams,
}

/// LTE normal CP (non-first symbol) scaled to `fft_size`.
pub fn default_cp_len(fft_size: usize) -> usize {
    ((72 * fft_size) as f64 / 1024.0).round() as usize
}

fn odd_at_least_one(x: f64) -> usize {
    let n = x.round().max(1.0) as usize;
    if n % 2 == 0 {
        n + 1
    } else {
        n
    }
}

impl WaveformConfig {
    /// 15 kHz spacing, 12-subcarrier RBs, LTE CP and default filters.
    pub fn new(kind: WaveformKind, fft_size: usize, rb_allocation: Vec<usize>) -> Result<Self> {
        let cfg = Self {
            kind,
            fft_size,
            used_subcarriers: 12 * rb_allocation.len(),
            subcarrier_spacing: 15e3,
            cp_len: default_cp_len(fft_size),
            rb_size: 12,
            rb_allocation,
            dc_guard: true,
            filters: FilterParams::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// 1024-point FFT at 15.36 MHz with three RBs (36 subcarriers).
    pub fn lte(kind: WaveformKind) -> Self {
        Self::new(kind, 1024, vec![0, 1, 2]).expect("LTE numerology is valid")
    }

    pub fn with_kind(&self, kind: WaveformKind) -> Self {
        Self { kind, ..self.clone() }
    }

    /// Hz
    pub fn sample_rate(&self) -> f64 {
        self.fft_size as f64 * self.subcarrier_spacing
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.fft_size;
        if !crate::dsp::is_power_of_two(n) || n < 8 {
            return config(format!("fft_size must be a power of two >= 8, got {n}"));
        }
        if self.rb_size == 0 {
            return config("rb_size must be positive");
        }
        if self.rb_allocation.is_empty() {
            return config("rb_allocation is empty");
        }
        let mut sorted = self.rb_allocation.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.rb_allocation.len() {
            return config("rb_allocation contains duplicate RBs");
        }
        if self.used_subcarriers != self.rb_size * self.rb_allocation.len() {
            return config(format!(
                "used_subcarriers {} != rb_size {} x {} allocated RBs",
                self.used_subcarriers,
                self.rb_size,
                self.rb_allocation.len()
            ));
        }
        if self.used_subcarriers > n {
            return config("more used subcarriers than FFT bins");
        }
        if self.cp_len >= n {
            return config(format!("cp_len {} must be below fft_size {n}", self.cp_len));
        }
        if !(self.subcarrier_spacing.is_finite() && self.subcarrier_spacing > 0.0) {
            return config("subcarrier_spacing must be positive");
        }
        let max_bin = self.bins().iter().map(|b| b.abs()).max().unwrap_or(0);
        if max_bin >= (n / 2) as i64 {
            return config(format!("allocated RBs reach bin {max_bin}, outside the {n}-point band"));
        }
        let f = &self.filters;
        if self.fofdm_length() % 2 == 0 {
            return config("filters.fofdm_length must be odd");
        }
        if f.fofdm_tone_offset < 0.0 {
            return config("filters.fofdm_tone_offset must be non-negative");
        }
        if self.ufmc_length() >= n || self.ufmc_length() == 0 {
            return config(format!("filters.ufmc_length must lie in [1, {n})"));
        }
        if !(20.0..=120.0).contains(&f.ufmc_atten_db) {
            return config("filters.ufmc_atten_db must lie in [20, 120]");
        }
        if self.kind == WaveformKind::Rbfofdm {
            let nr = f.rbf_small_fft;
            if nr == 0 || n % nr != 0 || !crate::dsp::is_power_of_two(nr) {
                return config(format!(
                    "filters.rbf_small_fft {nr} must be a power of two dividing {n}"
                ));
            }
            if nr <= self.rb_size {
                return config("filters.rbf_small_fft must exceed rb_size");
            }
            if self.rbf_filter_length() % 2 == 0 {
                return config("filters.rbf_filter_length must be odd");
            }
            if f.rbf_antialias_taps_per_phase == 0 {
                return config("filters.rbf_antialias_taps_per_phase must be positive");
            }
            if f.rbf_cutoff_spacings <= 0.0 {
                return config("filters.rbf_cutoff_spacings must be positive");
            }
        }
        Ok(())
    }

    /// Signed FFT bin of each used subcarrier in grid order.
    ///
    /// The allocated RBs are laid out on a band of `rb_size * (max_rb + 1)`
    /// slots centered on DC; with `dc_guard` the DC bin is skipped by moving
    /// the upper half up by one.
    pub fn bins(&self) -> Vec<i64> {
        self.rb_bins().into_iter().flatten().collect()
    }

    /// Bins grouped per allocated RB, in ascending RB order.
    pub fn rb_bins(&self) -> Vec<Vec<i64>> {
        let mut rbs = self.rb_allocation.clone();
        rbs.sort_unstable();
        let span = (self.rb_size * (rbs.last().copied().unwrap_or(0) + 1)) as i64;
        rbs.iter()
            .map(|&rb| {
                (0..self.rb_size)
                    .map(|s| {
                        let f = (rb * self.rb_size + s) as i64 - span / 2;
                        if self.dc_guard && f >= 0 {
                            f + 1
                        } else {
                            f
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Outer edges of the allocation in Hz, half a spacing beyond the
    /// outermost used subcarriers.
    pub fn band_edges_hz(&self) -> (f64, f64) {
        let bins = self.bins();
        let lo = bins.iter().min().copied().unwrap_or(0) as f64 - 0.5;
        let hi = bins.iter().max().copied().unwrap_or(0) as f64 + 0.5;
        (lo * self.subcarrier_spacing, hi * self.subcarrier_spacing)
    }

    /// Index of a signed bin in an `fft_size` buffer.
    pub fn bin_index(&self, bin: i64) -> usize {
        bin.rem_euclid(self.fft_size as i64) as usize
    }

    pub fn fofdm_length(&self) -> usize {
        self.filters.fofdm_length.unwrap_or(self.fft_size / 2 + 1)
    }

    pub fn ufmc_length(&self) -> usize {
        self.filters.ufmc_length.unwrap_or(self.cp_len + 1)
    }

    pub fn rbf_filter_length(&self) -> usize {
        self.filters
            .rbf_filter_length
            .unwrap_or_else(|| odd_at_least_one(145.0 * self.fft_size as f64 / 1024.0))
    }

    /// Per-RB CP at the reduced rate.
    pub fn rbf_cp_len(&self) -> usize {
        (self.cp_len as f64 * self.filters.rbf_small_fft as f64 / self.fft_size as f64).round() as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lte_numerology() {
        let c = WaveformConfig::lte(WaveformKind::Cpofdm);
        assert_eq!(c.cp_len, 72);
        assert_eq!(c.used_subcarriers, 36);
        assert!((c.sample_rate() - 15.36e6).abs() < 1e-6);
        assert_eq!(c.fofdm_length(), 513);
        assert_eq!(c.ufmc_length(), 73);
        assert_eq!(c.rbf_filter_length(), 145);
        assert_eq!(c.rbf_cp_len(), 2);
    }

    #[test]
    fn centered_mapping_skips_dc() {
        let c = WaveformConfig::lte(WaveformKind::Cpofdm);
        let bins = c.bins();
        assert_eq!(bins.first(), Some(&-18));
        assert_eq!(bins.last(), Some(&18));
        assert!(!bins.contains(&0));
        let gap = WaveformConfig::new(WaveformKind::Fofdm, 1024, vec![2, 0]).unwrap();
        assert_eq!(gap.rb_bins()[0], (-18..=-7).collect::<Vec<_>>());
        assert_eq!(gap.rb_bins()[1], (7..=18).collect::<Vec<_>>());
    }

    #[test]
    fn scaled_defaults() {
        let c = WaveformConfig::new(WaveformKind::Rbfofdm, 256, vec![0, 1, 2]).unwrap();
        assert_eq!(c.cp_len, 18);
        assert_eq!(c.rbf_filter_length(), 37);
        assert_eq!(c.ufmc_length(), 19);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(WaveformConfig::new(WaveformKind::Cpofdm, 1000, vec![0]).is_err());
        assert!(WaveformConfig::new(WaveformKind::Cpofdm, 64, vec![0, 0]).is_err());
        assert!(WaveformConfig::new(WaveformKind::Cpofdm, 64, vec![]).is_err());
        // 6 RBs need bins up to 37 > 32
        assert!(WaveformConfig::new(WaveformKind::Cpofdm, 64, vec![5]).is_err());
        let mut c = WaveformConfig::lte(WaveformKind::Ufmc);
        c.filters.ufmc_length = Some(1024);
        assert!(c.validate().is_err());
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("FBMC".parse::<WaveformKind>().unwrap(), WaveformKind::Fbmc);
        let err = "gfdm".parse::<WaveformKind>().unwrap_err().to_string();
        for k in WaveformKind::ALL {
            assert!(err.contains(k.name()));
        }
    }
}
