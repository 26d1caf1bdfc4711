use serde::{Deserialize, Serialize};

use crate::dsp::PsdEstimate;
use crate::error::{config, measurement, Result};

/// Offsets of the OOB measurement windows from each band edge, in
/// subcarrier spacings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OobWindow {
    pub start: f64,
    pub stop: f64,
}

impl Default for OobWindow {
    fn default() -> Self {
        Self {
            start: 10.0,
            stop: 50.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OobReport {
    /// dB, linear mean over the allocated band.
    pub inband_mean_db: f64,
    /// dB, below the lower edge.
    pub lower_oob_db: f64,
    /// dB, above the upper edge.
    pub upper_oob_db: f64,
    /// dB, linear mean over both windows.
    pub oob_mean_db: f64,
    /// `inband_mean_db - oob_mean_db`
    pub suppression_db: f64,
    pub window: OobWindow,
}

/// In-band versus out-of-band power of a PSD.
///
/// `band_edges` are the outer edges of the allocation in Hz. The OOB level
/// is read over `[hi + start·Δf, hi + stop·Δf]` and the mirror window below
/// `lo`, each window averaged in linear power and the two pooled.
pub fn measure_oob(psd: &PsdEstimate, band_edges: (f64, f64), window: OobWindow, spacing_hz: f64) -> Result<OobReport> {
    let (lo, hi) = band_edges;
    if !(lo < hi) {
        return config(format!("band edges must be increasing, got ({lo}, {hi})"));
    }
    if !(window.start > 0.0 && window.stop > window.start) {
        return config(format!("OOB window must satisfy 0 < start < stop, got {window:?}"));
    }
    if !(spacing_hz > 0.0) {
        return config("subcarrier spacing must be positive");
    }
    let (Some(&f_min), Some(&f_max)) = (psd.frequencies.first(), psd.frequencies.last()) else {
        return measurement("empty PSD");
    };
    let lower = (lo - window.stop * spacing_hz, lo - window.start * spacing_hz);
    let upper = (hi + window.start * spacing_hz, hi + window.stop * spacing_hz);
    if lower.0 < f_min || upper.1 > f_max {
        return measurement(format!(
            "OOB windows [{:.0}, {:.0}] Hz exceed the PSD span [{f_min:.0}, {f_max:.0}] Hz",
            lower.0, upper.1
        ));
    }
    let inband = psd.band_mean_db(lo, hi)?;
    let lower_db = psd.band_mean_db(lower.0, lower.1)?;
    let upper_db = psd.band_mean_db(upper.0, upper.1)?;
    let in_window = |f: f64| (f >= lower.0 && f <= lower.1) || (f >= upper.0 && f <= upper.1);
    let oob = psd.mean_db_where(in_window).expect("windows are non-empty");
    Ok(OobReport {
        inband_mean_db: inband,
        lower_oob_db: lower_db,
        upper_oob_db: upper_db,
        oob_mean_db: oob,
        suppression_db: inband - oob,
        window,
    })
}
