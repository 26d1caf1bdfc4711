use super::{ComplexSignal, FftPlan, Window};
use crate::error::{measurement, Result};
use crate::C64;

/// Lowest level reported by [`welch_psd`]; empty bins are clamped here.
pub const PSD_FLOOR_DB: f64 = -200.0;

/// Two-sided power spectral density, DC-centered.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdEstimate {
    /// Hz, increasing.
    pub frequencies: Vec<f64>,
    /// dB relative to 1/Hz until [`PsdEstimate::normalized`] moves the
    /// reference.
    pub power_db: Vec<f64>,
    /// Hz, the bin spacing.
    pub resolution_bw: f64,
}

impl PsdEstimate {
    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    /// Mean power (averaged linearly) over bins with `lo <= f <= hi`, in dB.
    pub fn band_mean_db(&self, lo_hz: f64, hi_hz: f64) -> Result<f64> {
        self.mean_db_where(|f| f >= lo_hz && f <= hi_hz)
            .ok_or_else(|| crate::Error::Measurement(format!("no PSD bins in [{lo_hz}, {hi_hz}] Hz")))
    }

    /// Linear mean in dB over the bins selected by `keep`, `None` if no bin
    /// is selected.
    pub fn mean_db_where(&self, keep: impl Fn(f64) -> bool) -> Option<f64> {
        let (sum, count) = self
            .frequencies
            .iter()
            .zip(&self.power_db)
            .filter(|(f, _)| keep(**f))
            .fold((0.0, 0usize), |(s, c), (_, p)| (s + 10f64.powf(p / 10.0), c + 1));
        (count > 0).then(|| (10.0 * (sum / count as f64).log10()).max(PSD_FLOOR_DB))
    }

    /// Shifts the curve by `-reference_db`.
    pub fn normalized(&self, reference_db: f64) -> Self {
        Self {
            frequencies: self.frequencies.clone(),
            power_db: self
                .power_db
                .iter()
                .map(|p| (p - reference_db).max(PSD_FLOOR_DB))
                .collect(),
            resolution_bw: self.resolution_bw,
        }
    }

    /// Normalizes so the mean over `[lo_hz, hi_hz]` is 0 dB.
    pub fn normalized_to_band(&self, lo_hz: f64, hi_hz: f64) -> Result<Self> {
        Ok(self.normalized(self.band_mean_db(lo_hz, hi_hz)?))
    }
}

/// Welch averaged periodogram.
///
/// Segments of `segment_len` samples overlapping by `overlap_fraction` are
/// tapered with the periodic `window`, transformed and averaged. The result
/// is a density (power per Hz) with DC in the middle.
pub fn welch_psd(
    signal: &ComplexSignal,
    segment_len: usize,
    overlap_fraction: f64,
    window: Window,
) -> Result<PsdEstimate> {
    if segment_len < 16 {
        return measurement(format!("segment length {segment_len} is below 16"));
    }
    if !(0.0..1.0).contains(&overlap_fraction) {
        return measurement(format!("overlap fraction {overlap_fraction} outside [0, 1)"));
    }
    if signal.len() < segment_len {
        return measurement(format!(
            "signal of {} samples is shorter than one {segment_len}-sample segment",
            signal.len()
        ));
    }
    let step = ((segment_len as f64 * (1.0 - overlap_fraction)).round() as usize).max(1);
    let n_segments = (signal.len() - segment_len) / step + 1;
    let win = window.periodic(segment_len);
    let win_energy: f64 = win.iter().map(|w| w * w).sum();
    let plan = FftPlan::new(segment_len);

    let mut acc = vec![0.0; segment_len];
    let mut buf = vec![C64::new(0.0, 0.0); segment_len];
    for s in 0..n_segments {
        let seg = &signal.samples[s * step..s * step + segment_len];
        buf.iter_mut()
            .zip(seg.iter().zip(&win))
            .for_each(|(b, (x, w))| *b = x * w);
        plan.forward(&mut buf);
        acc.iter_mut().zip(&buf).for_each(|(a, b)| *a += b.norm_sqr());
    }
    let scale = 1.0 / (n_segments as f64 * signal.sample_rate * win_energy);
    let half = segment_len / 2;
    let bw = signal.sample_rate / segment_len as f64;
    let mut frequencies = Vec::with_capacity(segment_len);
    let mut power_db = Vec::with_capacity(segment_len);
    for i in 0..segment_len {
        // fftshift: output index i holds bin i - half
        let bin = (i + segment_len - half) % segment_len;
        frequencies.push((i as f64 - half as f64) * bw);
        let p = acc[bin] * scale;
        power_db.push(if p > 0.0 {
            (10.0 * p.log10()).max(PSD_FLOOR_DB)
        } else {
            PSD_FLOOR_DB
        });
    }
    Ok(PsdEstimate {
        frequencies,
        power_db,
        resolution_bw: bw,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};
    use std::f64::consts::PI;

    fn noise(n: usize, seed: u64) -> ComplexSignal {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = (0..n)
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
            })
            .collect();
        ComplexSignal::new(s, 1.0).unwrap()
    }

    fn median(v: &[f64]) -> f64 {
        let mut s = v.to_vec();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        s[s.len() / 2]
    }

    #[test]
    fn tone_is_localized() {
        let n = 8192;
        let bin = 100.0;
        let x: Vec<C64> = (0..n)
            .map(|i| C64::from_polar(1.0, 2.0 * PI * bin * i as f64 / 1024.0))
            .collect();
        let psd = welch_psd(&ComplexSignal::new(x, 1024.0).unwrap(), 1024, 0.5, Window::Hann).unwrap();
        let (peak_i, peak) = psd
            .power_db
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |acc, (i, &p)| if p > acc.1 { (i, p) } else { acc });
        assert!((psd.frequencies[peak_i] - bin).abs() < 1e-9);
        assert!(peak - median(&psd.power_db) >= 30.0);
    }

    #[test]
    fn white_noise_is_flat() {
        // 50% overlap of 1024-sample segments, 120 segments
        let x = noise(1024 * 61, 3);
        let psd = welch_psd(&x, 1024, 0.5, Window::Hann).unwrap();
        let mean = psd.mean_db_where(|_| true).unwrap();
        for p in &psd.power_db {
            assert!((p - mean).abs() <= 1.5, "{p} vs {mean}");
        }
        // unit variance at unit rate is 0 dB/Hz
        assert!(mean.abs() < 0.1);
    }

    #[test]
    fn zero_signal_clamps_to_floor() {
        let psd = welch_psd(&ComplexSignal::zeros(256, 1.0), 64, 0.5, Window::Hann).unwrap();
        assert!(psd.power_db.iter().all(|&p| p == PSD_FLOOR_DB));
    }

    #[test]
    fn rejects_short_input() {
        assert!(welch_psd(&ComplexSignal::zeros(100, 1.0), 128, 0.5, Window::Hann).is_err());
        assert!(welch_psd(&ComplexSignal::zeros(100, 1.0), 8, 0.5, Window::Hann).is_err());
        assert!(welch_psd(&ComplexSignal::zeros(100, 1.0), 32, 1.0, Window::Hann).is_err());
    }

    #[test]
    fn normalization_removes_complex_gain() {
        let x = noise(4096, 9);
        let a = welch_psd(&x, 256, 0.5, Window::Hann)
            .unwrap()
            .normalized_to_band(-0.1, 0.1)
            .unwrap();
        let b = welch_psd(&x.scaled(C64::new(-3.0, 7.0)), 256, 0.5, Window::Hann)
            .unwrap()
            .normalized_to_band(-0.1, 0.1)
            .unwrap();
        for (p, q) in a.power_db.iter().zip(&b.power_db) {
            assert!((p - q).abs() < 1e-9);
        }
    }

    #[test]
    fn frequencies_are_increasing() {
        let psd = welch_psd(&noise(512, 1), 64, 0.25, Window::Hamming).unwrap();
        assert_eq!(psd.len(), 64);
        assert!(psd.frequencies.windows(2).all(|w| w[1] > w[0]));
        assert!((psd.resolution_bw - 1.0 / 64.0).abs() < 1e-15);
    }
}
