use super::{ComplexSignal, FftPlan, FilterTaps};
use crate::error::{config, Result};
use crate::C64;

// Below this many multiply-accumulates per output the direct sum wins.
const DIRECT_TAPS_LIMIT: usize = 48;

fn convolve_direct(x: &[C64], h: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); x.len() + h.len() - 1];
    for (i, &xi) in x.iter().enumerate() {
        if xi == C64::new(0.0, 0.0) {
            continue;
        }
        for (o, &hj) in out[i..i + h.len()].iter_mut().zip(h) {
            *o += xi * hj;
        }
    }
    out
}

fn convolve_fft(x: &[C64], h: &[C64]) -> Vec<C64> {
    let out_len = x.len() + h.len() - 1;
    // overlap-add with blocks a few times the filter length
    let fft_len = (4 * h.len()).next_power_of_two().max(64);
    let block = fft_len - h.len() + 1;
    let plan = FftPlan::new(fft_len);
    let mut hf = h.to_vec();
    hf.resize(fft_len, C64::new(0.0, 0.0));
    plan.forward(&mut hf);
    let mut out = vec![C64::new(0.0, 0.0); out_len];
    let mut buf = vec![C64::new(0.0, 0.0); fft_len];
    for start in (0..x.len()).step_by(block) {
        let end = (start + block).min(x.len());
        buf.iter_mut().for_each(|b| *b = C64::new(0.0, 0.0));
        buf[..end - start].copy_from_slice(&x[start..end]);
        plan.forward(&mut buf);
        buf.iter_mut().zip(&hf).for_each(|(b, hk)| *b *= hk);
        plan.inverse(&mut buf);
        let valid = (end - start + h.len() - 1).min(out_len - start);
        for (o, b) in out[start..start + valid].iter_mut().zip(&buf) {
            *o += b;
        }
    }
    out
}

pub(crate) fn convolve_slices(x: &[C64], h: &[C64]) -> Vec<C64> {
    if x.is_empty() || h.is_empty() {
        return Vec::new();
    }
    if h.len() <= DIRECT_TAPS_LIMIT || x.len() <= DIRECT_TAPS_LIMIT {
        convolve_direct(x, h)
    } else {
        convolve_fft(x, h)
    }
}

/// Full linear convolution; output length `len(signal) + len(taps) - 1`.
pub fn convolve(signal: &ComplexSignal, taps: &FilterTaps) -> Result<ComplexSignal> {
    if signal.is_empty() || taps.is_empty() {
        return config("convolution needs a non-empty signal and filter");
    }
    Ok(ComplexSignal {
        samples: convolve_slices(&signal.samples, &taps.taps),
        sample_rate: signal.sample_rate,
    })
}

/// Rational resampling by `up/down`.
///
/// Zero insertion by `up`, filtering with `antialias` (scaled by `up` so a
/// unity-DC-gain design preserves amplitude), then keeping every `down`-th
/// sample. The filter's group delay is removed, so output sample `m` is
/// aligned with input time `m*down/up`. Output length is
/// `ceil(len*up/down)`.
pub fn resample(signal: &ComplexSignal, up: usize, down: usize, antialias: &FilterTaps) -> Result<ComplexSignal> {
    if up == 0 || down == 0 {
        return config("resampling factors must be at least 1");
    }
    if antialias.is_empty() {
        return config("antialias filter is empty");
    }
    let rate_change = up.max(down);
    if rate_change > 1 {
        let dc = antialias.dc_gain();
        if (dc - C64::new(1.0, 0.0)).norm() > 1e-3 {
            return config(format!("antialias filter DC gain {dc} is not unity"));
        }
        let image = antialias.response(1.0 / rate_change as f64).norm();
        if image > 0.1 {
            return config(format!(
                "antialias filter passes {image:.3} at the first image frequency 1/{rate_change}"
            ));
        }
    }
    let h = &antialias.taps;
    let delay = antialias.delay_samples() as isize;
    let gain = up as f64;
    let up_len = signal.len() * up;
    let out_len = up_len.div_ceil(down);
    let x = &signal.samples;
    let mut out = Vec::with_capacity(out_len);
    for m in 0..out_len {
        // v[n] = up * Σ_j x[j] h[n + delay - j*up]
        let n = (m * down) as isize + delay;
        let j_hi = (n.div_euclid(up as isize)).min(x.len() as isize - 1);
        let j_lo = ((n - h.len() as isize + 1) as f64 / up as f64).ceil().max(0.0) as isize;
        let mut acc = C64::new(0.0, 0.0);
        let mut j = j_lo;
        while j <= j_hi {
            acc += x[j as usize] * h[(n - j * up as isize) as usize];
            j += 1;
        }
        out.push(acc * gain);
    }
    Ok(ComplexSignal {
        samples: out,
        sample_rate: signal.sample_rate * up as f64 / down as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{design_windowed_sinc, Window};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn sig(v: Vec<C64>) -> ComplexSignal {
        ComplexSignal::new(v, 1.0).unwrap()
    }

    #[test]
    fn identity_and_impulse() {
        let x = sig((0..10).map(|i| C64::new(i as f64, -(i as f64))).collect());
        assert_eq!(convolve(&x, &FilterTaps::identity()).unwrap(), x);
        let taps = FilterTaps::from_real(&[0.5, -1.0, 2.0]);
        let imp = sig(vec![C64::new(1.0, 0.0)]);
        assert_eq!(convolve(&imp, &taps).unwrap().samples, taps.taps);
    }

    #[test]
    fn fft_path_matches_direct() {
        let x: Vec<C64> = (0..1000).map(|i| C64::from_polar(1.0, 0.37 * i as f64)).collect();
        let h: Vec<C64> = (0..129).map(|i| C64::new((i as f64 * 0.1).sin(), 0.2)).collect();
        let a = convolve_direct(&x, &h);
        let b = convolve_fft(&x, &h);
        let err = a.iter().zip(&b).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn resample_identity() {
        let x = sig((0..17).map(|i| C64::new(i as f64, 1.0)).collect());
        assert_eq!(resample(&x, 1, 1, &FilterTaps::identity()).unwrap(), x);
    }

    #[test]
    fn resample_rejects_inconsistent_filter() {
        let x = sig(vec![C64::new(1.0, 0.0); 64]);
        // cutoff far above the low-rate Nyquist zone
        let wide = design_windowed_sinc(0.4, 33, 1.0, Window::Hann).unwrap();
        assert!(resample(&x, 8, 1, &wide).is_err());
        assert!(resample(&x, 0, 1, &wide).is_err());
    }

    #[test]
    fn upsampled_tone_keeps_frequency_and_amplitude() {
        let up = 32;
        let f = 0.05; // cycles per input sample
        let x = sig((0..256)
            .map(|n| C64::from_polar(1.0, 2.0 * PI * f * n as f64))
            .collect());
        let aa = design_windowed_sinc(0.5 / up as f64, 8 * up + 1, 1.0, Window::Hann).unwrap();
        let y = resample(&x, up, 1, &aa).unwrap();
        assert_eq!(y.len(), 256 * up);
        assert!((y.sample_rate - 32.0).abs() < 1e-12);
        let interior = &y.samples[40 * up..200 * up];
        for (i, s) in interior.iter().enumerate() {
            let n = 40 * up + i;
            let expect = C64::from_polar(1.0, 2.0 * PI * f * n as f64 / up as f64);
            assert!((s - expect).norm() < 0.0116, "sample {n}");
        }
    }

    #[test]
    fn up_down_round_trip() {
        let up = 32;
        let tones = [(0.02, 1.0), (-0.05, 0.7), (0.1, 0.4)];
        let x = sig((0..400)
            .map(|n| {
                tones
                    .iter()
                    .map(|&(f, a)| C64::from_polar(a, 2.0 * PI * f * n as f64))
                    .sum()
            })
            .collect());
        let aa = design_windowed_sinc(0.5 / up as f64, 8 * up + 1, 1.0, Window::Hann).unwrap();
        let hi = resample(&x, up, 1, &aa).unwrap();
        let back = resample(&hi, 1, up, &aa).unwrap();
        assert_eq!(back.len(), x.len());
        assert_eq!(back.sample_rate, 1.0);
        let (mut e, mut p) = (0.0, 0.0);
        for (a, b) in x.samples[50..350].iter().zip(&back.samples[50..350]) {
            e += (a - b).norm_sqr();
            p += a.norm_sqr();
        }
        let evm = 10.0 * (e / p).log10();
        assert!(evm < -50.0, "{evm}");
    }

    proptest! {
        #[test]
        fn convolution_is_linear(
            a in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..80),
            b in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..80),
            h in proptest::collection::vec(-1.0f64..1.0, 1..60),
            alpha in -2.0f64..2.0,
        ) {
            let n = a.len().min(b.len());
            let xa = sig(a[..n].iter().map(|&(r, i)| C64::new(r, i)).collect());
            let xb = sig(b[..n].iter().map(|&(r, i)| C64::new(r, i)).collect());
            let taps = FilterTaps::from_real(&h);
            let mix = sig(xa.samples.iter().zip(&xb.samples).map(|(p, q)| p * alpha + q).collect());
            let ya = convolve(&xa, &taps).unwrap();
            let yb = convolve(&xb, &taps).unwrap();
            let ym = convolve(&mix, &taps).unwrap();
            for ((p, q), m) in ya.samples.iter().zip(&yb.samples).zip(&ym.samples) {
                prop_assert!((p * alpha + q - m).norm() < 1e-9);
            }
        }
    }
}
