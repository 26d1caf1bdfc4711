//! Scenario files: schema, defaults, validation and the bundled set.
//!
//! A scenario is a TOML document. Top-level keys:
//!
//! | key | default | meaning |
//! |---|---|---|
//! | `name` | required | identifier written to every CSV row |
//! | `description` | `""` | free text |
//! | `experiment` | required | `psd` or `bler` |
//! | `waveforms` | required | any of `cpofdm`, `fbmc`, `rbfofdm`, `ufmc`, `fofdm` |
//! | `modulations` | `["qpsk"]` | `qpsk`, `16qam` |
//! | `channel` | `awgn` | `awgn` or `etu` |
//! | `equalizer` | `mmse` | `mmse` or `zf` |
//! | `master_seed` | `1` | root of every random stream |
//! | `carrier_hz` | `2e9` | used to turn speed into Doppler |
//!
//! Tables: `[numerology]` (`fft_size`, `rb_allocation`, `cp_len`,
//! `subcarrier_spacing`, `rb_size`, `symbols_per_block`), `[filters]`
//! (per-waveform filter knobs), `[pa]` (`kind`, `output_power_dbm`,
//! `saturation_power_dbm`, `smoothness`), `[sweep]` (`variable`, `values`),
//! `[fixed]` (`snr_db`, `cfo_fraction`, `speed_kmh`), `[stop]`
//! (`min_block_errors`, `max_blocks`), `[psd]` (`subframes`, `segment_len`,
//! `overlap`, `window`, `oob_window`) and `[desk]`, whose entries replace
//! the corresponding settings when desk scale is requested.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use wavebench_core::channel::PaModel;
use wavebench_core::dsp::{is_power_of_two, Window};
use wavebench_core::link::{ChannelModel, EqualizerScheme, LinkParams, Modulation};
use wavebench_core::metrics::{OobWindow, StopRule};
use wavebench_core::waveforms::{default_cp_len, FilterParams, WaveformConfig, WaveformKind};

use crate::error::{invalid, HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Psd,
    Bler,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Experiment::Psd => "psd",
            Experiment::Bler => "bler",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    SnrDb,
    CfoFraction,
    SpeedKmh,
    PaOutputDbm,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::SnrDb => "snr_db",
            SweepVariable::CfoFraction => "cfo_fraction",
            SweepVariable::SpeedKmh => "speed_kmh",
            SweepVariable::PaOutputDbm => "pa_output_dbm",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub variable: SweepVariable,
    // defaulted so a missing list is reported by validation with its path
    #[serde(default)]
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerology {
    pub fft_size: usize,
    pub rb_allocation: Vec<usize>,
    /// Default: LTE normal CP scaled to `fft_size`.
    pub cp_len: Option<usize>,
    /// Hz
    pub subcarrier_spacing: f64,
    pub rb_size: usize,
    pub symbols_per_block: usize,
}

impl Default for Numerology {
    fn default() -> Self {
        Self {
            fft_size: 1024,
            rb_allocation: vec![0, 1, 2],
            cp_len: None,
            subcarrier_spacing: 15e3,
            rb_size: 12,
            symbols_per_block: 14,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fixed {
    /// Required unless SNR is the swept variable. Absent in PSD runs.
    pub snr_db: Option<f64>,
    pub cfo_fraction: f64,
    pub speed_kmh: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsdSettings {
    /// Subframes of `symbols_per_block` symbols modulated back to back.
    pub subframes: usize,
    /// Default: 1024.
    pub segment_len: Option<usize>,
    pub overlap: f64,
    pub window: Window,
    pub oob_window: OobWindow,
}

impl Default for PsdSettings {
    fn default() -> Self {
        Self {
            subframes: 100,
            segment_len: None,
            overlap: 0.5,
            window: Window::Hann,
            oob_window: OobWindow::default(),
        }
    }
}

impl PsdSettings {
    pub fn segment_len(&self) -> usize {
        self.segment_len.unwrap_or(1024)
    }
}

/// Replacements applied by `--desk-scale`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeskOverrides {
    pub fft_size: Option<usize>,
    pub rb_allocation: Option<Vec<usize>>,
    pub sweep_values: Option<Vec<f64>>,
    pub stop: Option<StopRule>,
    pub psd_subframes: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub experiment: Experiment,
    pub waveforms: Vec<String>,
    #[serde(default = "default_modulations")]
    pub modulations: Vec<String>,
    #[serde(default)]
    pub channel: ChannelModel,
    #[serde(default)]
    pub equalizer: EqualizerScheme,
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    #[serde(default = "default_carrier")]
    pub carrier_hz: f64,
    #[serde(default)]
    pub numerology: Numerology,
    #[serde(default)]
    pub filters: FilterParams,
    #[serde(default)]
    pub pa: PaModel,
    pub sweep: Option<Sweep>,
    #[serde(default)]
    pub fixed: Fixed,
    #[serde(default)]
    pub stop: StopRule,
    #[serde(default)]
    pub psd: PsdSettings,
    pub desk: Option<DeskOverrides>,
}

fn default_modulations() -> Vec<String> {
    vec!["qpsk".into()]
}

fn default_seed() -> u64 {
    1
}

fn default_carrier() -> f64 {
    2e9
}

/// Scenario files compiled into the binary.
pub const BUNDLED: &[(&str, &str)] = &[
    ("fig3a_psd_linear", include_str!("../scenarios/fig3a_psd_linear.toml")),
    ("fig3b_psd_pa20", include_str!("../scenarios/fig3b_psd_pa20.toml")),
    ("fig3c_psd_pa25", include_str!("../scenarios/fig3c_psd_pa25.toml")),
    ("fig3d_psd_pa29", include_str!("../scenarios/fig3d_psd_pa29.toml")),
    ("fig3_psd_pa_sweep", include_str!("../scenarios/fig3_psd_pa_sweep.toml")),
    (
        "fofdm_noncontiguous",
        include_str!("../scenarios/fofdm_noncontiguous.toml"),
    ),
    ("fig4a_bler_snr", include_str!("../scenarios/fig4a_bler_snr.toml")),
    ("desk_awgn_snr", include_str!("../scenarios/desk_awgn_snr.toml")),
    ("fig4b_bler_cfo", include_str!("../scenarios/fig4b_bler_cfo.toml")),
    ("fig4c_bler_speed", include_str!("../scenarios/fig4c_bler_speed.toml")),
];

/// Parses and validates scenario text. `origin` labels error messages.
pub fn parse_scenario(text: &str, origin: &str) -> Result<Scenario> {
    let sc: Scenario = toml::from_str(text).map_err(|e| HarnessError::Parse {
        origin: origin.to_string(),
        message: e.to_string(),
    })?;
    sc.validate()?;
    Ok(sc)
}

/// Loads a scenario from a file path, or from the bundled set by name.
///
/// A name matches a bundled scenario exactly, or as a prefix that selects a
/// single one (`fig4a_bler` → `fig4a_bler_snr`); a name equal to the part
/// before the first `_` also matches (`fig3a` → `fig3a_psd_linear`).
pub fn load_scenario(path_or_name: &str) -> Result<Scenario> {
    let path = Path::new(path_or_name);
    if path.is_file() {
        let text = std::fs::read_to_string(path)?;
        return parse_scenario(&text, &path.display().to_string());
    }
    let (name, text) = find_bundled(path_or_name)?;
    parse_scenario(text, name)
}

fn find_bundled(query: &str) -> Result<(&'static str, &'static str)> {
    if let Some(hit) = BUNDLED.iter().find(|(n, _)| *n == query) {
        return Ok(*hit);
    }
    let stem_hits: Vec<_> = BUNDLED
        .iter()
        .filter(|(n, _)| n.split('_').next() == Some(query))
        .collect();
    if let [hit] = stem_hits.as_slice() {
        return Ok(**hit);
    }
    let prefix_hits: Vec<_> = BUNDLED.iter().filter(|(n, _)| n.starts_with(query)).collect();
    match prefix_hits.as_slice() {
        [hit] => Ok(**hit),
        [] => Err(HarnessError::UnknownScenario {
            query: query.to_string(),
            candidates: BUNDLED.iter().map(|(n, _)| n.to_string()).collect(),
        }),
        many => Err(HarnessError::UnknownScenario {
            query: query.to_string(),
            candidates: many.iter().map(|(n, _)| n.to_string()).collect(),
        }),
    }
}

impl Scenario {
    /// Applies desk overrides and a seed override, then revalidates.
    pub fn resolve(mut self, desk_scale: bool, seed: Option<u64>) -> Result<Self> {
        if desk_scale {
            if let Some(desk) = self.desk.take() {
                if let Some(n) = desk.fft_size {
                    self.numerology.fft_size = n;
                    // a CP pinned for the full-size FFT would not fit
                    if self.numerology.cp_len.is_some() {
                        self.numerology.cp_len = Some(default_cp_len(n));
                    }
                }
                if let Some(rbs) = desk.rb_allocation {
                    self.numerology.rb_allocation = rbs;
                }
                if let (Some(values), Some(sweep)) = (desk.sweep_values, self.sweep.as_mut()) {
                    sweep.values = values;
                }
                if let Some(stop) = desk.stop {
                    self.stop = stop;
                }
                if let Some(sf) = desk.psd_subframes {
                    self.psd.subframes = sf;
                }
            }
        }
        if let Some(s) = seed {
            self.master_seed = s;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return invalid("name", "must not be empty");
        }
        if self.waveforms.is_empty() {
            return invalid("waveforms", "must list at least one waveform");
        }
        for (i, w) in self.waveforms.iter().enumerate() {
            if let Err(e) = w.parse::<WaveformKind>() {
                return invalid(&format!("waveforms[{i}]"), &core_message(&e));
            }
        }
        if self.modulations.is_empty() {
            return invalid("modulations", "must list at least one modulation");
        }
        for (i, m) in self.modulations.iter().enumerate() {
            if let Err(e) = m.parse::<Modulation>() {
                return invalid(&format!("modulations[{i}]"), &core_message(&e));
            }
        }
        if !(self.carrier_hz.is_finite() && self.carrier_hz > 0.0) {
            return invalid("carrier_hz", "must be positive");
        }
        let num = &self.numerology;
        if !is_power_of_two(num.fft_size) || num.fft_size < 8 {
            return invalid("numerology.fft_size", "must be a power of two >= 8");
        }
        if num.symbols_per_block == 0 {
            return invalid("numerology.symbols_per_block", "must be positive");
        }
        for kind in self.waveform_kinds() {
            if let Err(e) = self.waveform_config(kind) {
                return invalid("numerology", &core_message(&e));
            }
        }
        if let Err(e) = self.pa.validate() {
            return invalid("pa", &core_message(&e));
        }
        if let Err(e) = self.stop.validate() {
            return invalid("stop", &core_message(&e));
        }
        self.validate_sweep()?;
        let f = &self.fixed;
        if let Some(snr) = f.snr_db {
            if snr.is_nan() {
                return invalid("fixed.snr_db", "must be a number");
            }
        }
        if !f.cfo_fraction.is_finite() {
            return invalid("fixed.cfo_fraction", "must be finite");
        }
        if !(f.speed_kmh.is_finite() && f.speed_kmh >= 0.0) {
            return invalid("fixed.speed_kmh", "must be finite and non-negative");
        }
        let psd = &self.psd;
        if psd.subframes == 0 {
            return invalid("psd.subframes", "must be positive");
        }
        if psd.segment_len() < 16 {
            return invalid("psd.segment_len", "must be at least 16");
        }
        if !(0.0..1.0).contains(&psd.overlap) {
            return invalid("psd.overlap", "must lie in [0, 1)");
        }
        let w = psd.oob_window;
        if !(w.start > 0.0 && w.stop > w.start) {
            return invalid("psd.oob_window", "needs 0 < start < stop");
        }
        Ok(())
    }

    fn validate_sweep(&self) -> Result<()> {
        let Some(sweep) = &self.sweep else {
            return match self.experiment {
                Experiment::Bler => invalid("sweep", "a BLER experiment needs a sweep"),
                Experiment::Psd => Ok(()),
            };
        };
        let allowed: &[SweepVariable] = match self.experiment {
            Experiment::Bler => &[
                SweepVariable::SnrDb,
                SweepVariable::CfoFraction,
                SweepVariable::SpeedKmh,
            ],
            Experiment::Psd => &[SweepVariable::PaOutputDbm],
        };
        if !allowed.contains(&sweep.variable) {
            let names: Vec<_> = allowed.iter().map(|v| v.name()).collect();
            return invalid(
                "sweep.variable",
                &format!(
                    "{} is not available in a {} experiment (use {})",
                    sweep.variable.name(),
                    self.experiment,
                    names.join(", ")
                ),
            );
        }
        if sweep.values.is_empty() {
            return invalid("sweep.values", "must list at least one value");
        }
        if let Some(i) = sweep.values.iter().position(|v| !v.is_finite()) {
            return invalid(&format!("sweep.values[{i}]"), "must be finite");
        }
        if sweep.variable == SweepVariable::SpeedKmh {
            if let Some(i) = sweep.values.iter().position(|v| *v < 0.0) {
                return invalid(&format!("sweep.values[{i}]"), "speed must be non-negative");
            }
        }
        if self.experiment == Experiment::Bler && sweep.variable != SweepVariable::SnrDb && self.fixed.snr_db.is_none()
        {
            return invalid("fixed.snr_db", "required when SNR is not swept");
        }
        if sweep.variable == SweepVariable::PaOutputDbm && self.pa.kind == wavebench_core::channel::PaKind::Ideal {
            return invalid("pa.kind", "sweeping the PA output power needs kind = \"rapp\"");
        }
        Ok(())
    }

    pub fn waveform_kinds(&self) -> Vec<WaveformKind> {
        self.waveforms.iter().filter_map(|w| w.parse().ok()).collect()
    }

    pub fn modulation_list(&self) -> Vec<Modulation> {
        self.modulations.iter().filter_map(|m| m.parse().ok()).collect()
    }

    pub fn waveform_config(&self, kind: WaveformKind) -> wavebench_core::Result<WaveformConfig> {
        let num = &self.numerology;
        let cfg = WaveformConfig {
            kind,
            fft_size: num.fft_size,
            used_subcarriers: num.rb_size * num.rb_allocation.len(),
            subcarrier_spacing: num.subcarrier_spacing,
            cp_len: num.cp_len.unwrap_or_else(|| default_cp_len(num.fft_size)),
            rb_size: num.rb_size,
            rb_allocation: num.rb_allocation.clone(),
            dc_guard: true,
            filters: self.filters.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sweep values, or a single `NaN` placeholder for an unswept PSD run.
    pub fn sweep_points(&self) -> Vec<f64> {
        self.sweep
            .as_ref()
            .map(|s| s.values.clone())
            .unwrap_or_else(|| vec![f64::NAN])
    }

    pub fn sweep_name(&self) -> &'static str {
        match &self.sweep {
            Some(s) => s.variable.name(),
            None => "none",
        }
    }

    /// Link settings and SNR for one BLER sweep value.
    pub fn link_point(&self, value: f64) -> (LinkParams, f64) {
        let var = self.sweep.as_ref().map(|s| s.variable);
        let pick = |v: SweepVariable, fixed: f64| if var == Some(v) { value } else { fixed };
        let snr = pick(SweepVariable::SnrDb, self.fixed.snr_db.unwrap_or(f64::INFINITY));
        let speed = pick(SweepVariable::SpeedKmh, self.fixed.speed_kmh);
        let params = LinkParams {
            channel: self.channel,
            doppler_hz: wavebench_core::channel::doppler_from_speed(speed, self.carrier_hz),
            cfo_fraction: pick(SweepVariable::CfoFraction, self.fixed.cfo_fraction),
            pa: self.pa,
            equalizer: self.equalizer,
            symbols_per_block: self.numerology.symbols_per_block,
        };
        (params, snr)
    }

    /// PA model for one PSD sweep value.
    pub fn pa_point(&self, value: f64) -> PaModel {
        let mut pa = self.pa;
        if self.sweep.as_ref().map(|s| s.variable) == Some(SweepVariable::PaOutputDbm) {
            pa.output_power_dbm = value;
        }
        pa
    }

    /// Canonical TOML of the resolved scenario.
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes")
    }
}

fn core_message(e: &wavebench_core::Error) -> String {
    match e {
        wavebench_core::Error::Config(m)
        | wavebench_core::Error::Framing(m)
        | wavebench_core::Error::Measurement(m) => m.clone(),
    }
}
