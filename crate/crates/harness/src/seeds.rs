use wavebench_core::seed::mix;

/// Seed of one Monte-Carlo trial.
///
/// `point_index` enumerates the (modulation, sweep value) pairs of a
/// scenario in row order. Tuples are folded through SplitMix64 one word at
/// a time, so neighbouring indices give unrelated seeds.
pub fn derive_seed(master_seed: u64, waveform_index: u64, point_index: u64, trial_index: u64) -> u64 {
    mix(master_seed, &[waveform_index, point_index, trial_index])
}
