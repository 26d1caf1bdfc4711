use ndarray::Array2;

use crate::error::{measurement, Result};
use crate::C64;

/// Reported EVM for an exact match.
pub const EVM_FLOOR_DB: f64 = -200.0;

/// `10 lg(error / reference)`, clamped below at [`EVM_FLOOR_DB`]. A zero
/// reference gives `NaN`.
pub fn evm_db_from_energies(error: f64, reference: f64) -> f64 {
    if reference <= 0.0 {
        return f64::NAN;
    }
    (10.0 * (error / reference).log10()).max(EVM_FLOOR_DB)
}

/// `10 lg(Σ|rx − tx|² / Σ|tx|²)` in dB.
pub fn measure_evm(tx: &Array2<C64>, rx: &Array2<C64>) -> Result<f64> {
    if tx.dim() != rx.dim() {
        return measurement(format!("grid shapes differ: {:?} vs {:?}", tx.dim(), rx.dim()));
    }
    let reference: f64 = tx.iter().map(|s| s.norm_sqr()).sum();
    if !(reference > 0.0) {
        return measurement("reference grid has zero power");
    }
    let error: f64 = tx.iter().zip(rx.iter()).map(|(a, b)| (b - a).norm_sqr()).sum();
    Ok(evm_db_from_energies(error, reference))
}
