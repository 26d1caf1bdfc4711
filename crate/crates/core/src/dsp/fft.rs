use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use super::ComplexSignal;
use crate::error::{config, Result};
use crate::C64;

pub fn is_power_of_two(n: usize) -> bool {
    n != 0 && n & (n - 1) == 0
}

/// Forward/inverse transform pair of one size.
///
/// Forward is unnormalized, inverse is scaled by `1/size`.
#[derive(Clone)]
pub struct FftPlan {
    size: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FftPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftPlan").field("size", &self.size).finish()
    }
}

impl FftPlan {
    pub fn new(size: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            size,
            forward: planner.plan_fft_forward(size),
            inverse: planner.plan_fft_inverse(size),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn forward(&self, buf: &mut [C64]) {
        debug_assert_eq!(buf.len(), self.size);
        self.forward.process(buf);
    }

    pub fn inverse(&self, buf: &mut [C64]) {
        debug_assert_eq!(buf.len(), self.size);
        self.inverse.process(buf);
        let scale = 1.0 / self.size as f64;
        buf.iter_mut().for_each(|x| *x *= scale);
    }
}

fn check_size(size: usize, len: usize) -> Result<()> {
    if !is_power_of_two(size) {
        return config(format!("transform size {size} is not a nonzero power of two"));
    }
    if len > size {
        return config(format!("input length {len} exceeds transform size {size}"));
    }
    Ok(())
}

/// Zero-padded forward DFT of `signal` with `size` bins (unnormalized).
pub fn dft(signal: &ComplexSignal, size: usize) -> Result<Vec<C64>> {
    check_size(size, signal.len())?;
    let mut buf = signal.samples.clone();
    buf.resize(size, C64::new(0.0, 0.0));
    FftPlan::new(size).forward(&mut buf);
    Ok(buf)
}

/// Inverse DFT scaled by `1/len`.
pub fn idft(spectrum: &[C64]) -> Result<Vec<C64>> {
    check_size(spectrum.len(), spectrum.len())?;
    let mut buf = spectrum.to_vec();
    FftPlan::new(spectrum.len()).inverse(&mut buf);
    Ok(buf)
}
