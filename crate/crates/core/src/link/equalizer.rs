use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::waveforms::DemodGrid;
use crate::C64;

/// Channel magnitudes below this are treated as spectral nulls.
pub const ERASURE_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EqualizerScheme {
    Zf,
    #[default]
    Mmse,
}

/// One-tap equalizer output.
#[derive(Debug, Clone, PartialEq)]
pub struct Equalized {
    /// Scheme output: `y/h` (ZF) or `h*y/(|h|²+σ²)` (MMSE).
    pub symbols: Array2<C64>,
    /// Real gain of the estimate on the transmitted symbol (1 for ZF).
    pub bias: Array2<f64>,
    /// Noise variance of the bias-removed estimate; infinite for erasures.
    pub noise_var: Array2<f64>,
}

impl Equalized {
    /// `symbols / bias`, the input to the soft demapper.
    pub fn unbiased(&self) -> Array2<C64> {
        let mut out = self.symbols.clone();
        out.zip_mut_with(&self.bias, |s, &b| {
            if b > 0.0 {
                *s /= b
            }
        });
        out
    }
}

/// Per-subcarrier single-tap equalization with known channel.
///
/// `freq_response` is either `K x M` (one coefficient per grid entry) or
/// `K x 1` (static). `noise_var` is the per-subcarrier noise variance
/// before the grid's `per_bin_noise_scale` is applied.
pub fn equalize_one_tap(
    grid: &DemodGrid,
    freq_response: &Array2<C64>,
    scheme: EqualizerScheme,
    noise_var: f64,
) -> Result<Equalized> {
    let (k, m) = grid.symbols.dim();
    let (hk, hm) = freq_response.dim();
    if hk != k || (hm != m && hm != 1) {
        return config(format!(
            "channel response shape {:?} does not fit grid {:?}",
            (hk, hm),
            (k, m)
        ));
    }
    if grid.per_bin_noise_scale.len() != k {
        return config("per_bin_noise_scale length differs from the subcarrier count");
    }
    if noise_var.is_nan() || noise_var < 0.0 {
        return config(format!("noise variance must be non-negative, got {noise_var}"));
    }
    let mut symbols = Array2::zeros((k, m));
    let mut bias = Array2::ones((k, m));
    let mut var = Array2::zeros((k, m));
    for ((r, c), &y) in grid.symbols.indexed_iter() {
        let h = freq_response[[r, if hm == 1 { 0 } else { c }]];
        let nv = noise_var * grid.per_bin_noise_scale[r];
        let p = h.norm_sqr();
        if h.norm() < ERASURE_THRESHOLD {
            var[[r, c]] = f64::INFINITY;
            continue;
        }
        match scheme {
            EqualizerScheme::Zf => symbols[[r, c]] = y / h,
            EqualizerScheme::Mmse => {
                symbols[[r, c]] = h.conj() * y / (p + nv);
                bias[[r, c]] = p / (p + nv);
            }
        }
        var[[r, c]] = nv / p;
    }
    Ok(Equalized {
        symbols,
        bias,
        noise_var: var,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(values: &[C64]) -> DemodGrid {
        DemodGrid {
            symbols: Array2::from_shape_vec((values.len(), 1), values.to_vec()).unwrap(),
            per_bin_noise_scale: vec![1.0; values.len()],
        }
    }

    #[test]
    fn unit_channel_is_identity() {
        let g = grid(&[C64::new(0.3, -0.2), C64::new(-1.0, 0.5)]);
        let e = equalize_one_tap(&g, &Array2::ones((2, 1)), EqualizerScheme::Zf, 0.1).unwrap();
        assert_eq!(e.symbols, g.symbols);
    }

    #[test]
    fn zf_rotation_and_scaling() {
        let h = C64::from_polar(2.0, PI / 4.0);
        let y = C64::new(1.0, 0.0);
        let e = equalize_one_tap(&grid(&[y]), &Array2::from_elem((1, 1), h), EqualizerScheme::Zf, 0.8).unwrap();
        let expect = C64::from_polar(0.5, -PI / 4.0);
        assert!((e.symbols[[0, 0]] - expect).norm() < 1e-15);
        assert!((e.noise_var[[0, 0]] - 0.8 * 0.25).abs() < 1e-15);
    }

    #[test]
    fn mmse_tends_to_zf() {
        let h = Array2::from_elem((1, 1), C64::new(0.3, -1.1));
        let g = grid(&[C64::new(0.7, 0.1)]);
        let zf = equalize_one_tap(&g, &h, EqualizerScheme::Zf, 0.0).unwrap();
        let mmse = equalize_one_tap(&g, &h, EqualizerScheme::Mmse, 1e-12).unwrap();
        assert!((zf.symbols[[0, 0]] - mmse.symbols[[0, 0]]).norm() < 1e-9);
        // unbiased MMSE equals ZF for a single tap
        let mmse = equalize_one_tap(&g, &h, EqualizerScheme::Mmse, 0.5).unwrap();
        assert!((mmse.unbiased()[[0, 0]] - zf.symbols[[0, 0]]).norm() < 1e-12);
    }

    #[test]
    fn nulls_become_erasures() {
        let g = grid(&[C64::new(1.0, 0.0)]);
        let e = equalize_one_tap(&g, &Array2::zeros((1, 1)), EqualizerScheme::Zf, 0.1).unwrap();
        assert!(e.noise_var[[0, 0]].is_infinite());
        assert!(e.symbols[[0, 0]].is_finite());
    }

    #[test]
    fn noise_scale_propagates() {
        let mut g = grid(&[C64::new(1.0, 0.0)]);
        g.per_bin_noise_scale = vec![1.5];
        let e = equalize_one_tap(&g, &Array2::ones((1, 1)), EqualizerScheme::Mmse, 0.2).unwrap();
        assert!((e.noise_var[[0, 0]] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let g = grid(&[C64::new(1.0, 0.0); 3]);
        assert!(equalize_one_tap(&g, &Array2::ones((2, 1)), EqualizerScheme::Zf, 0.1).is_err());
        assert!(equalize_one_tap(&g, &Array2::ones((3, 1)), EqualizerScheme::Zf, -0.1).is_err());
    }
}
