use serde::{Deserialize, Serialize};

use crate::error::{config, measurement, Result};
use crate::link::TrialResult;

/// Two-sided 95% normal quantile.
pub const WILSON_Z95: f64 = 1.959_963_984_540_054;

/// Monte-Carlo stopping rule for one sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StopRule {
    pub min_block_errors: u64,
    pub max_blocks: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            min_block_errors: 100,
            max_blocks: 100_000,
        }
    }
}

impl StopRule {
    pub fn validate(&self) -> Result<()> {
        if self.max_blocks == 0 {
            return config("max_blocks must be positive");
        }
        Ok(())
    }
}

/// Wilson score interval for `errors` out of `n` at normal quantile `z`.
pub fn wilson_interval(errors: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let all = errors >= n;
    let none = errors == 0;
    let n = n as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if none { 0.0 } else { (center - half).max(0.0) };
    let hi = if all { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// One point of a BLER curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlerPoint {
    /// SNR in dB, CFO fraction or speed in km/h.
    pub sweep_value: f64,
    pub blocks: u64,
    pub block_errors: u64,
    pub bit_errors: u64,
    pub info_bits: u64,
    pub bler: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `max_blocks` was reached before `min_block_errors`.
    pub censored: bool,
    /// Pooled EVM of the equalized symbols, dB.
    pub evm_db: f64,
}

impl BlerPoint {
    pub fn ber(&self) -> f64 {
        if self.info_bits == 0 {
            0.0
        } else {
            self.bit_errors as f64 / self.info_bits as f64
        }
    }

    /// The 95% intervals of `self` and `other` share no point.
    pub fn ci_disjoint(&self, other: &BlerPoint) -> bool {
        self.ci_high < other.ci_low || other.ci_high < self.ci_low
    }
}

/// Running sums over trial results. Merging is commutative and
/// associative, so partial sums from different workers can be combined in
/// any grouping.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BlerAccumulator {
    pub blocks: u64,
    pub block_errors: u64,
    pub bit_errors: u64,
    pub info_bits: u64,
    pub evm_error_energy: f64,
    pub evm_ref_energy: f64,
}

impl BlerAccumulator {
    pub fn add(&mut self, t: &TrialResult) {
        self.blocks += t.blocks;
        self.block_errors += t.block_errors;
        self.bit_errors += t.bit_errors;
        self.info_bits += t.info_bits;
        self.evm_error_energy += t.evm_error_energy;
        self.evm_ref_energy += t.evm_ref_energy;
    }

    pub fn merge(&mut self, other: &BlerAccumulator) {
        self.blocks += other.blocks;
        self.block_errors += other.block_errors;
        self.bit_errors += other.bit_errors;
        self.info_bits += other.info_bits;
        self.evm_error_energy += other.evm_error_energy;
        self.evm_ref_energy += other.evm_ref_energy;
    }

    pub fn is_done(&self, stop: &StopRule) -> bool {
        self.block_errors >= stop.min_block_errors || self.blocks >= stop.max_blocks
    }

    pub fn finish(&self, sweep_value: f64, stop: &StopRule) -> Result<BlerPoint> {
        if self.blocks == 0 {
            return measurement("no trials to aggregate");
        }
        let (ci_low, ci_high) = wilson_interval(self.block_errors, self.blocks, WILSON_Z95);
        Ok(BlerPoint {
            sweep_value,
            blocks: self.blocks,
            block_errors: self.block_errors,
            bit_errors: self.bit_errors,
            info_bits: self.info_bits,
            bler: self.block_errors as f64 / self.blocks as f64,
            ci_low,
            ci_high,
            censored: self.block_errors < stop.min_block_errors && self.blocks >= stop.max_blocks,
            evm_db: super::evm_db_from_energies(self.evm_error_energy, self.evm_ref_energy),
        })
    }
}

/// Accumulates trials in stream order until the stopping rule fires.
/// Trials after that point are not consumed.
pub fn aggregate_bler(
    sweep_value: f64,
    trials: impl IntoIterator<Item = TrialResult>,
    stop: &StopRule,
) -> Result<BlerPoint> {
    stop.validate()?;
    let mut acc = BlerAccumulator::default();
    for t in trials {
        acc.add(&t);
        if acc.is_done(stop) {
            break;
        }
    }
    acc.finish(sweep_value, stop)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn trial(err: bool) -> TrialResult {
        TrialResult {
            info_bits: 330,
            bit_errors: if err { 7 } else { 0 },
            block_errors: err as u64,
            blocks: 1,
            measured_evm_db: -10.0,
            evm_error_energy: 0.125,
            evm_ref_energy: 1.0,
        }
    }

    #[test]
    fn wilson_hundred_in_thousand() {
        let (lo, hi) = wilson_interval(100, 1000, WILSON_Z95);
        assert!((lo - 0.0829).abs() < 5e-4, "{lo}");
        assert!((hi - 0.1203).abs() < 5e-4, "{hi}");
    }

    #[test]
    fn wilson_edges() {
        let (lo, hi) = wilson_interval(0, 100, WILSON_Z95);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.03 && hi < 0.04);
        let (lo, hi) = wilson_interval(100, 100, WILSON_Z95);
        assert!(lo > 0.96 && hi == 1.0);
    }

    #[test]
    fn stops_at_error_target() {
        let stop = StopRule {
            min_block_errors: 100,
            max_blocks: 100_000,
        };
        let stream = (0..).map(|i| trial(i % 10 == 9));
        let p = aggregate_bler(3.0, stream, &stop).unwrap();
        assert_eq!((p.blocks, p.block_errors), (1000, 100));
        assert!((p.bler - 0.1).abs() < 1e-12);
        assert!(!p.censored);
        assert!((p.evm_db - 10.0 * 0.125f64.log10()).abs() < 1e-9);
        assert_eq!(p.bit_errors, 700);
    }

    #[test]
    fn error_free_run_is_censored() {
        let stop = StopRule {
            min_block_errors: 100,
            max_blocks: 500,
        };
        let p = aggregate_bler(0.0, std::iter::repeat_n(trial(false), 10_000), &stop).unwrap();
        assert_eq!((p.blocks, p.block_errors, p.bler), (500, 0, 0.0));
        assert!(p.censored);
    }

    #[test]
    fn empty_stream_is_an_error() {
        let e = aggregate_bler(0.0, std::iter::empty(), &StopRule::default());
        assert!(matches!(e, Err(crate::Error::Measurement(_))));
    }

    proptest! {
        #[test]
        fn order_and_partition_invariant(errs in proptest::collection::vec(any::<bool>(), 1..200), split in 0usize..200) {
            let stop = StopRule { min_block_errors: 1_000, max_blocks: 1_000 };
            let trials: Vec<_> = errs.iter().map(|&e| trial(e)).collect();
            let a = aggregate_bler(1.0, trials.clone(), &stop).unwrap();
            let b = aggregate_bler(1.0, trials.iter().rev().copied(), &stop).unwrap();
            prop_assert_eq!(a, b);
            let split = split.min(trials.len());
            let mut left = BlerAccumulator::default();
            let mut right = BlerAccumulator::default();
            trials[..split].iter().for_each(|t| left.add(t));
            trials[split..].iter().for_each(|t| right.add(t));
            right.merge(&left);
            prop_assert_eq!(right.finish(1.0, &stop).unwrap(), a);
        }

        #[test]
        fn bler_in_unit_interval(e in 0u64..1000, extra in 0u64..1000) {
            let acc = BlerAccumulator { blocks: e + extra + 1, block_errors: e, ..Default::default() };
            let p = acc.finish(0.0, &StopRule::default()).unwrap();
            prop_assert!(p.bler >= 0.0 && p.bler <= 1.0);
            prop_assert!(p.ci_low <= p.bler && p.bler <= p.ci_high);
        }
    }
}
