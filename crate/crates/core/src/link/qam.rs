use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{config, framing, Error, Result};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modulation {
    Qpsk,
    #[serde(alias = "16qam")]
    Qam16,
}

// Per-axis Gray labels, index = 2-bit label, for 16QAM before scaling.
const PAM4: [f64; 4] = [1.0, 3.0, -1.0, -3.0];

impl Modulation {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Qpsk => 2,
            Modulation::Qam16 => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Modulation::Qpsk => "qpsk",
            Modulation::Qam16 => "qam16",
        }
    }

    /// All points, indexed by their bit label read MSB first.
    pub fn constellation(self) -> Vec<C64> {
        let bps = self.bits_per_symbol();
        (0..1usize << bps)
            .map(|label| {
                let bits: Vec<u8> = (0..bps).rev().map(|i| ((label >> i) & 1) as u8).collect();
                map_one(&bits, self)
            })
            .collect()
    }

    /// Levels on one axis, indexed by the axis bit label, and the bits per
    /// axis.
    fn axis(self) -> (&'static [f64], f64, usize) {
        match self {
            Modulation::Qpsk => (&[1.0, -1.0], std::f64::consts::FRAC_1_SQRT_2, 1),
            Modulation::Qam16 => (&PAM4, 1.0 / 10f64.sqrt(), 2),
        }
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qpsk" => Ok(Modulation::Qpsk),
            "qam16" | "16qam" => Ok(Modulation::Qam16),
            _ => Err(Error::Config(format!(
                "unknown modulation '{s}', expected qpsk or qam16"
            ))),
        }
    }
}

fn map_one(bits: &[u8], order: Modulation) -> C64 {
    let (levels, scale, per_axis) = order.axis();
    let label = |b: &[u8]| b.iter().fold(0usize, |acc, &x| (acc << 1) | x as usize);
    C64::new(levels[label(&bits[..per_axis])], levels[label(&bits[per_axis..])]) * scale
}

/// Gray mapping with unit average power. First bit(s) select the in-phase
/// level: QPSK `00 -> (1+j)/√2`; 16QAM per axis `00,01,10,11 -> +1,+3,-1,-3`
/// over `√10`.
pub fn qam_map(bits: &[u8], order: Modulation) -> Result<Vec<C64>> {
    let bps = order.bits_per_symbol();
    if bits.len() % bps != 0 {
        return framing(format!("{} bits is not a multiple of {bps}", bits.len()));
    }
    Ok(bits.chunks_exact(bps).map(|c| map_one(c, order)).collect())
}

/// Max-log LLRs, `(min_{b=1} |y-s|² - min_{b=0} |y-s|²) / σ²`, so positive
/// values favour bit 0. An infinite variance marks an erasure and yields
/// zero LLRs.
pub fn qam_demap_llr(symbols: &[C64], noise_var: &[f64], order: Modulation) -> Result<Vec<f64>> {
    if symbols.len() != noise_var.len() {
        return framing("one noise variance per symbol is required");
    }
    let (levels, scale, per_axis) = order.axis();
    let mut out = Vec::with_capacity(symbols.len() * order.bits_per_symbol());
    for (y, &var) in symbols.iter().zip(noise_var) {
        if var.is_nan() || var <= 0.0 {
            return config(format!("noise variance must be positive, got {var}"));
        }
        for v in [y.re, y.im] {
            for bit in (0..per_axis).rev() {
                if var.is_infinite() {
                    out.push(0.0);
                    continue;
                }
                let (mut d0, mut d1) = (f64::INFINITY, f64::INFINITY);
                for (label, &l) in levels.iter().enumerate() {
                    let d = (v - l * scale).powi(2);
                    if (label >> bit) & 1 == 0 {
                        d0 = d0.min(d);
                    } else {
                        d1 = d1.min(d);
                    }
                }
                out.push((d1 - d0) / var);
            }
        }
    }
    Ok(out)
}

/// Hard decisions from LLRs (negative means bit 1).
pub fn hard_decisions(llrs: &[f64]) -> Vec<u8> {
    llrs.iter().map(|&l| u8::from(l < 0.0)).collect()
}
