use std::f64::consts::PI;

use super::FilterTaps;
use crate::error::{config, Result};

/// Frequency-sampling coefficients of the overlap-4 PHYDYAS prototype.
///
/// `H1² + H3² = 1` and `H2 = 1/√2`, which makes the prototype near-perfect
/// reconstruction under OQAM.
pub const PHYDYAS_K4_COEFFS: [f64; 4] = [1.0, 0.971_960, std::f64::consts::FRAC_1_SQRT_2, 0.235_147];

/// Tapering windows used for filter design and spectral estimation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    Hann,
    Hamming,
    Rectangular,
}

impl Window {
    /// Symmetric window of `len` points.
    ///
    /// The Hann variant excludes the zero end points, `0.5 - 0.5cos(2π(n+1)/(len+1))`,
    /// so every tap of a short design contributes.
    pub fn symmetric(self, len: usize) -> Vec<f64> {
        (0..len)
            .map(|n| match self {
                Window::Rectangular => 1.0,
                Window::Hann => 0.5 - 0.5 * (2.0 * PI * (n as f64 + 1.0) / (len as f64 + 1.0)).cos(),
                Window::Hamming if len == 1 => 1.0,
                Window::Hamming => 0.54 - 0.46 * (2.0 * PI * n as f64 / (len as f64 - 1.0)).cos(),
            })
            .collect()
    }

    /// DFT-even (periodic) window, the usual choice for averaged periodograms.
    pub fn periodic(self, len: usize) -> Vec<f64> {
        (0..len)
            .map(|n| {
                let phase = 2.0 * PI * n as f64 / len as f64;
                match self {
                    Window::Rectangular => 1.0,
                    Window::Hann => 0.5 - 0.5 * phase.cos(),
                    Window::Hamming => 0.54 - 0.46 * phase.cos(),
                }
            })
            .collect()
    }
}

/// PHYDYAS prototype of length `overlap_factor * n_subcarriers - 1`,
/// scaled so that `Σ taps² = n_subcarriers`.
pub fn design_phydyas_prototype(overlap_factor: usize, n_subcarriers: usize) -> Result<FilterTaps> {
    if overlap_factor != 4 {
        return config(format!(
            "PHYDYAS prototype supports overlap factor 4 only, got {overlap_factor}"
        ));
    }
    if n_subcarriers < 2 {
        return config("PHYDYAS prototype needs at least two subcarriers");
    }
    let span = (overlap_factor * n_subcarriers) as f64;
    let len = overlap_factor * n_subcarriers - 1;
    let mut taps: Vec<f64> = (0..len)
        .map(|m| {
            let t = (m + 1) as f64;
            PHYDYAS_K4_COEFFS[0]
                + PHYDYAS_K4_COEFFS
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(k, &hk)| {
                        let sign = if k % 2 == 1 { -1.0 } else { 1.0 };
                        2.0 * sign * hk * (2.0 * PI * k as f64 * t / span).cos()
                    })
                    .sum::<f64>()
        })
        .collect();
    let energy: f64 = taps.iter().map(|t| t * t).sum();
    let scale = (n_subcarriers as f64 / energy).sqrt();
    taps.iter_mut().for_each(|t| *t *= scale);
    Ok(FilterTaps::from_real(&taps))
}

fn chebyshev_poly(order: f64, x: f64) -> f64 {
    if x > 1.0 {
        (order * x.acosh()).cosh()
    } else if x < -1.0 {
        let sign = if (order as i64) % 2 == 0 { 1.0 } else { -1.0 };
        sign * (order * (-x).acosh()).cosh()
    } else {
        (order * x.acos()).cos()
    }
}

/// Dolph-Chebyshev window with equiripple sidelobes `sidelobe_atten_db`
/// below the mainlobe, peak tap normalized to 1.
pub fn design_chebyshev_window(length: usize, sidelobe_atten_db: f64) -> Result<FilterTaps> {
    if length == 0 {
        return config("window length must be at least 1");
    }
    if !(20.0..=120.0).contains(&sidelobe_atten_db) {
        return config(format!("sidelobe attenuation {sidelobe_atten_db} dB outside [20, 120]"));
    }
    if length == 1 {
        return Ok(FilterTaps::from_real(&[1.0]));
    }
    let m = length;
    let order = (m - 1) as f64;
    let beta = ((10f64.powf(sidelobe_atten_db / 20.0)).acosh() / order).cosh();
    // Chebyshev polynomial sampled on the unit circle, then a direct DFT.
    let samples: Vec<(f64, f64)> = (0..m)
        .map(|k| {
            let x = beta * (PI * k as f64 / m as f64).cos();
            let p = chebyshev_poly(order, x);
            if m % 2 == 1 {
                (p, 0.0)
            } else {
                let ph = PI * k as f64 / m as f64;
                (p * ph.cos(), p * ph.sin())
            }
        })
        .collect();
    let dft_re = |n: usize| -> f64 {
        samples
            .iter()
            .enumerate()
            .map(|(k, &(re, im))| {
                let ph = -2.0 * PI * (k * n) as f64 / m as f64;
                re * ph.cos() - im * ph.sin()
            })
            .sum()
    };
    let mut w = Vec::with_capacity(m);
    if m % 2 == 1 {
        let half = m.div_ceil(2);
        let head: Vec<f64> = (0..half).map(dft_re).collect();
        w.extend(head[1..].iter().rev());
        w.extend(head.iter());
    } else {
        let half = m / 2 + 1;
        let head: Vec<f64> = (0..half).map(dft_re).collect();
        w.extend(head[1..].iter().rev());
        w.extend(head[1..].iter());
    }
    let peak = w.iter().cloned().fold(f64::MIN, f64::max);
    w.iter_mut().for_each(|x| *x /= peak);
    // Enforce exact symmetry against rounding in the DFT sums.
    for i in 0..m / 2 {
        let avg = 0.5 * (w[i] + w[m - 1 - i]);
        w[i] = avg;
        w[m - 1 - i] = avg;
    }
    Ok(FilterTaps::from_real(&w))
}

/// Windowed-sinc lowpass with unity DC gain.
pub fn design_windowed_sinc(cutoff_hz: f64, length: usize, sample_rate: f64, window: Window) -> Result<FilterTaps> {
    if length % 2 == 0 {
        return config(format!("windowed-sinc length must be odd, got {length}"));
    }
    if !(cutoff_hz > 0.0 && cutoff_hz < sample_rate / 2.0) {
        return config(format!(
            "cutoff {cutoff_hz} Hz must lie strictly between 0 and Nyquist {}",
            sample_rate / 2.0
        ));
    }
    let fc = cutoff_hz / sample_rate;
    let mid = (length as f64 - 1.0) / 2.0;
    let win = window.symmetric(length);
    let mut taps: Vec<f64> = (0..length)
        .map(|n| {
            let t = n as f64 - mid;
            let sinc = if t == 0.0 {
                2.0 * fc
            } else {
                (2.0 * PI * fc * t).sin() / (PI * t)
            };
            sinc * win[n]
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    Ok(FilterTaps::from_real(&taps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{dft, ComplexSignal};

    #[test]
    fn phydyas_coefficients_are_power_complementary() {
        let [_, h1, h2, h3] = PHYDYAS_K4_COEFFS;
        assert!((h1 * h1 + h3 * h3 - 1.0).abs() < 1e-6);
        assert!((h2 - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-6);
    }

    #[test]
    fn phydyas_length_symmetry_energy() {
        let p = design_phydyas_prototype(4, 64).unwrap();
        assert_eq!(p.len(), 255);
        assert!(p.is_symmetric(1e-12));
        let e: f64 = p.taps.iter().map(|t| t.norm_sqr()).sum();
        assert!((e - 64.0).abs() < 1e-9);
        assert!(design_phydyas_prototype(3, 64).is_err());
        assert!(design_phydyas_prototype(4, 1).is_err());
    }

    #[test]
    fn phydyas_adjacent_subcarriers_overlap() {
        let n = 64;
        let p = design_phydyas_prototype(4, n).unwrap();
        // <g, g·e^{j2πn/N}>: the spectrum of g² sampled one subcarrier away
        let inner: crate::C64 = p
            .taps
            .iter()
            .enumerate()
            .map(|(i, t)| t.norm_sqr() * crate::C64::from_polar(1.0, 2.0 * PI * i as f64 / n as f64))
            .sum();
        assert!(inner.norm() > 1.0);
    }

    #[test]
    fn chebyshev_degenerate_and_range() {
        assert_eq!(design_chebyshev_window(1, 40.0).unwrap().real_taps(), vec![1.0]);
        assert!(design_chebyshev_window(10, 10.0).is_err());
        assert!(design_chebyshev_window(10, 130.0).is_err());
        assert!(design_chebyshev_window(0, 40.0).is_err());
    }

    fn max_sidelobe_db(taps: &[f64]) -> f64 {
        let sig = ComplexSignal::new(taps.iter().map(|&t| crate::C64::new(t, 0.0)).collect(), 1.0).unwrap();
        let spectrum = dft(&sig, 8192).unwrap();
        let mag: Vec<f64> = spectrum[..4096].iter().map(|b| b.norm()).collect();
        let peak = mag[0];
        // walk down the mainlobe to its first null
        let mut i = 1;
        while i + 1 < mag.len() && mag[i + 1] < mag[i] {
            i += 1;
        }
        let side = mag[i..].iter().cloned().fold(0.0, f64::max);
        20.0 * (side / peak).log10()
    }

    #[test]
    fn chebyshev_73_40db_sidelobes() {
        let w = design_chebyshev_window(73, 40.0).unwrap();
        assert!(w.is_symmetric(1e-12));
        let taps = w.real_taps();
        assert!((taps.iter().cloned().fold(f64::MIN, f64::max) - 1.0).abs() < 1e-12);
        let sl = max_sidelobe_db(&taps);
        assert!((sl + 40.0).abs() <= 0.5, "sidelobe {sl}");
    }

    #[test]
    fn chebyshev_even_length_symmetric() {
        let w = design_chebyshev_window(32, 60.0).unwrap();
        assert!(w.is_symmetric(1e-12));
        let sl = max_sidelobe_db(&w.real_taps());
        assert!((sl + 60.0).abs() <= 0.5, "sidelobe {sl}");
    }

    #[test]
    fn windowed_sinc_dc_and_half_amplitude_point() {
        let h = design_windowed_sinc(0.25, 129, 1.0, Window::Hann).unwrap();
        assert!((h.dc_gain().re - 1.0).abs() < 1e-9);
        assert!(h.is_symmetric(1e-12));
        // locate the -6 dB point on a 4096-point grid
        let grid: Vec<f64> = (0..=2048).map(|i| i as f64 / 4096.0).collect();
        let f6 = grid.iter().find(|&&f| h.response(f).norm() < 0.5).copied().unwrap();
        assert!((f6 - 0.25).abs() <= 0.02 * 0.25, "-6 dB at {f6}");
    }

    #[test]
    fn windowed_sinc_edge_cases() {
        assert_eq!(
            design_windowed_sinc(0.1, 1, 1.0, Window::Rectangular)
                .unwrap()
                .real_taps(),
            vec![1.0]
        );
        assert!(design_windowed_sinc(0.5, 11, 1.0, Window::Hann).is_err());
        assert!(design_windowed_sinc(0.1, 10, 1.0, Window::Hann).is_err());
        for w in [Window::Hann, Window::Hamming, Window::Rectangular] {
            let h = design_windowed_sinc(1000.0, 31, 15360.0, w).unwrap();
            assert!((h.dc_gain().re - 1.0).abs() < 1e-9);
            assert!(h.is_symmetric(1e-12));
        }
    }
}
