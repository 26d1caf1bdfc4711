//! Deterministic signal-processing primitives shared by every waveform.

mod conv;
mod fft;
mod filters;
mod psd;
mod signal;

pub(crate) use conv::convolve_slices;
pub use conv::{convolve, resample};
pub use fft::{dft, idft, is_power_of_two, FftPlan};
pub use filters::{design_chebyshev_window, design_phydyas_prototype, design_windowed_sinc, Window, PHYDYAS_K4_COEFFS};
pub use psd::{welch_psd, PsdEstimate, PSD_FLOOR_DB};
pub use signal::{ComplexSignal, FilterTaps};
