use serde::{Deserialize, Serialize};

use crate::dsp::ComplexSignal;
use crate::error::{config, Result};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PaKind {
    #[default]
    Ideal,
    Rapp,
}

/// Power amplifier with AM/AM compression only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PaModel {
    pub kind: PaKind,
    /// Rapp smoothness `p`.
    pub smoothness: f64,
    /// dBm, mean output power the signal is driven to.
    pub output_power_dbm: f64,
    /// dBm
    pub saturation_power_dbm: f64,
}

impl Default for PaModel {
    fn default() -> Self {
        Self {
            kind: PaKind::Ideal,
            smoothness: 3.0,
            output_power_dbm: 20.0,
            saturation_power_dbm: 30.0,
        }
    }
}

fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

impl PaModel {
    pub fn ideal() -> Self {
        Self::default()
    }

    pub fn rapp(output_power_dbm: f64, saturation_power_dbm: f64, smoothness: f64) -> Self {
        Self {
            kind: PaKind::Rapp,
            smoothness,
            output_power_dbm,
            saturation_power_dbm,
        }
    }

    /// Saturation amplitude, √W.
    pub fn saturation_amplitude(&self) -> f64 {
        dbm_to_watts(self.saturation_power_dbm).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == PaKind::Ideal {
            return Ok(());
        }
        if !(self.saturation_power_dbm.is_finite() && self.output_power_dbm.is_finite()) {
            return config("PA powers must be finite");
        }
        if !(self.smoothness > 0.0) {
            return config(format!("Rapp smoothness must be positive, got {}", self.smoothness));
        }
        Ok(())
    }

    /// Scales a baseband signal so its mean power equals the output power,
    /// applies the amplifier, and scales back by the same factor so the
    /// result stays comparable with the undistorted input.
    pub fn drive(&self, signal: &ComplexSignal) -> Result<ComplexSignal> {
        self.validate()?;
        if self.kind == PaKind::Ideal {
            return Ok(signal.clone());
        }
        let p = signal.mean_power();
        if p == 0.0 {
            return Ok(signal.clone());
        }
        let g = (dbm_to_watts(self.output_power_dbm) / p).sqrt();
        let y = apply_pa(&signal.scaled(C64::new(g, 0.0)), self)?;
        Ok(y.scaled(C64::new(1.0 / g, 0.0)))
    }
}

/// Rapp AM/AM: `A -> A / (1 + (A/A_sat)^{2p})^{1/(2p)}`, phase unchanged.
/// Sample amplitudes are in √W.
pub fn apply_pa(signal: &ComplexSignal, model: &PaModel) -> Result<ComplexSignal> {
    model.validate()?;
    match model.kind {
        PaKind::Ideal => Ok(signal.clone()),
        PaKind::Rapp => {
            let a_sat = model.saturation_amplitude();
            if !(a_sat > 0.0) {
                return config("saturation power must be positive");
            }
            let two_p = 2.0 * model.smoothness;
            let samples = signal
                .samples
                .iter()
                .map(|&s| {
                    let a = s.norm();
                    if a == 0.0 {
                        s
                    } else {
                        s / (1.0 + (a / a_sat).powf(two_p)).powf(1.0 / two_p)
                    }
                })
                .collect();
            ComplexSignal::new(samples, signal.sample_rate)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn one(a: f64) -> ComplexSignal {
        ComplexSignal::new(vec![C64::from_polar(a, 0.7)], 1.0).unwrap()
    }

    #[test]
    fn ideal_passthrough() {
        let x = ComplexSignal::new(vec![C64::new(3.0, -4.0), C64::new(1e3, 2.0)], 1.0).unwrap();
        assert_eq!(apply_pa(&x, &PaModel::ideal()).unwrap(), x);
    }

    #[test]
    fn linear_region_and_saturation() {
        let m = PaModel::rapp(20.0, 30.0, 3.0);
        let a_sat = m.saturation_amplitude();
        let small = apply_pa(&one(a_sat * 1e-3), &m).unwrap().samples[0];
        assert!((small.norm() / (a_sat * 1e-3) - 1.0).abs() < 1e-6);
        assert!((small.arg() - 0.7).abs() < 1e-12);
        let big = apply_pa(&one(a_sat * 1e6), &m).unwrap().samples[0];
        assert!((big.norm() - a_sat).abs() / a_sat < 1e-6);
    }

    #[test]
    fn non_positive_saturation_rejected() {
        let mut m = PaModel::rapp(20.0, f64::NEG_INFINITY, 3.0);
        assert!(apply_pa(&one(1.0), &m).is_err());
        m.saturation_power_dbm = 30.0;
        m.smoothness = 0.0;
        assert!(apply_pa(&one(1.0), &m).is_err());
    }

    #[test]
    fn drive_preserves_small_signals() {
        let m = PaModel::rapp(-30.0, 30.0, 3.0);
        let x = ComplexSignal::new(vec![C64::new(0.5, 0.5), C64::new(-1.0, 0.2)], 1.0).unwrap();
        let y = m.drive(&x).unwrap();
        for (a, b) in x.samples.iter().zip(&y.samples) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn am_am_monotone_and_bounded(a in 0.0f64..10.0, b in 0.0f64..10.0) {
            let m = PaModel::rapp(20.0, 30.0, 3.0);
            let ya = apply_pa(&one(a), &m).unwrap().samples[0].norm();
            let yb = apply_pa(&one(b), &m).unwrap().samples[0].norm();
            if a <= b {
                prop_assert!(ya <= yb + 1e-12);
            }
            prop_assert!(ya <= m.saturation_amplitude() + 1e-12);
        }
    }
}
