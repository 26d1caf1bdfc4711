//! Figures of merit: OOB suppression from a PSD, EVM, and block error
//! rates with Wilson intervals and a stopping rule.

mod bler;
mod evm;
mod oob;

pub use bler::{aggregate_bler, wilson_interval, BlerAccumulator, BlerPoint, StopRule, WILSON_Z95};
pub use evm::{evm_db_from_energies, measure_evm, EVM_FLOOR_DB};
pub use oob::{measure_oob, OobReport, OobWindow};
