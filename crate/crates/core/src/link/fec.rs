use crate::error::{framing, Result};

/// Constraint length.
pub const CONSTRAINT_LEN: usize = 7;
/// Generator polynomials (octal 133, 171, 165); the MSB taps the newest bit.
pub const GENERATORS: [u32; 3] = [0o133, 0o171, 0o165];
const MEMORY: usize = CONSTRAINT_LEN - 1;
const STATES: usize = 1 << MEMORY;

/// One encoded transport block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedBlock {
    pub info_bits: Vec<u8>,
    /// `3 * (info + 6)` bits including the zero tail.
    pub coded_bits: Vec<u8>,
}

impl CodedBlock {
    pub fn block_len_info(&self) -> usize {
        self.info_bits.len()
    }

    /// Nominal code rate `1/3`, before termination.
    pub const fn code_rate() -> (usize, usize) {
        (1, 3)
    }
}

/// Coded length for `info_len` information bits.
pub fn coded_len(info_len: usize) -> usize {
    GENERATORS.len() * (info_len + MEMORY)
}

/// Largest information block whose codeword fits in `capacity` bits.
pub fn info_len_for(capacity: usize) -> usize {
    (capacity / GENERATORS.len()).saturating_sub(MEMORY)
}

#[inline]
fn branch_bits(reg: u32) -> [u8; 3] {
    GENERATORS.map(|g| ((reg & g).count_ones() & 1) as u8)
}

/// Rate-1/3, K=7 feedforward convolutional encoder, zero-terminated.
pub fn fec_encode(info_bits: &[u8]) -> CodedBlock {
    let mut state = 0u32;
    let mut coded = Vec::with_capacity(coded_len(info_bits.len()));
    for &u in info_bits.iter().chain(std::iter::repeat_n(&0u8, MEMORY)) {
        let reg = (u32::from(u & 1) << MEMORY) | state;
        coded.extend_from_slice(&branch_bits(reg));
        state = reg >> 1;
    }
    CodedBlock {
        info_bits: info_bits.to_vec(),
        coded_bits: coded,
    }
}

/// Soft-decision Viterbi decoding of a zero-terminated codeword.
///
/// LLRs use the positive-means-zero convention of
/// [`crate::link::qam_demap_llr`].
pub fn fec_decode(llrs: &[f64]) -> Result<Vec<u8>> {
    let n = GENERATORS.len();
    if llrs.len() % n != 0 || llrs.len() < n * (MEMORY + 1) {
        return framing(format!(
            "{} LLRs is not a terminated rate-1/3 codeword of at least one information bit",
            llrs.len()
        ));
    }
    let steps = llrs.len() / n;
    // Branch outputs indexed by the 7-bit register.
    let outputs: Vec<[f64; 3]> = (0..(1u32 << CONSTRAINT_LEN))
        .map(|reg| branch_bits(reg).map(|b| if b == 0 { 1.0 } else { -1.0 }))
        .collect();

    let mut metric = vec![f64::NEG_INFINITY; STATES];
    metric[0] = 0.0;
    let mut next = vec![0.0; STATES];
    // decisions[t] bit s: which predecessor survived into state s
    let mut decisions = vec![0u64; steps];
    for t in 0..steps {
        let l = &llrs[t * n..t * n + n];
        for (ns, slot) in next.iter_mut().enumerate() {
            let u = (ns >> (MEMORY - 1)) as u32;
            let mut best = f64::NEG_INFINITY;
            let mut pick = 0u64;
            for b in 0..2usize {
                let s = ((ns << 1) & (STATES - 1)) | b;
                if metric[s] == f64::NEG_INFINITY {
                    continue;
                }
                let o = &outputs[((u << MEMORY) | s as u32) as usize];
                let m = metric[s] + o[0] * l[0] + o[1] * l[1] + o[2] * l[2];
                if m > best {
                    best = m;
                    pick = b as u64;
                }
            }
            *slot = best;
            decisions[t] |= pick << ns;
        }
        std::mem::swap(&mut metric, &mut next);
    }
    // terminated: trace back from state 0
    let mut state = 0usize;
    let mut bits = vec![0u8; steps];
    for t in (0..steps).rev() {
        bits[t] = (state >> (MEMORY - 1)) as u8;
        let b = ((decisions[t] >> state) & 1) as usize;
        state = ((state << 1) & (STATES - 1)) | b;
    }
    bits.truncate(steps - MEMORY);
    Ok(bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn to_llr(bits: &[u8], mag: f64) -> Vec<f64> {
        bits.iter().map(|&b| if b == 0 { mag } else { -mag }).collect()
    }

    #[test]
    fn all_zero_codeword() {
        let c = fec_encode(&[0; 40]);
        assert_eq!(c.coded_bits, vec![0; coded_len(40)]);
        assert_eq!(c.coded_bits.len(), 3 * 46);
    }

    #[test]
    fn block_sizes_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for len in [100, 1000, 6000] {
            let info: Vec<u8> = (0..len).map(|_| rng.random_range(0..2u8)).collect();
            let c = fec_encode(&info);
            assert_eq!(fec_decode(&to_llr(&c.coded_bits, 4.0)).unwrap(), info);
        }
    }

    #[test]
    fn free_distance_is_fifteen() {
        // Exhaustive search over terminated inputs starting with a one:
        // the minimum-weight codeword diverging at t=0.
        let mut dfree = usize::MAX;
        for len in 1..=12usize {
            for pattern in 0u32..(1 << (len - 1)) {
                let mut info = vec![1u8];
                info.extend((0..len - 1).map(|i| ((pattern >> i) & 1) as u8));
                let w = fec_encode(&info).coded_bits.iter().filter(|&&b| b == 1).count();
                dfree = dfree.min(w);
            }
        }
        assert_eq!(dfree, 15);
    }

    #[test]
    fn corrects_a_strong_flip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let info: Vec<u8> = (0..200).map(|_| rng.random_range(0..2u8)).collect();
        let c = fec_encode(&info);
        let mut llr = to_llr(&c.coded_bits, 10.0);
        llr[150] = -llr[150];
        assert_eq!(fec_decode(&llr).unwrap(), info);
    }

    #[test]
    fn rejects_wrong_lengths() {
        assert!(fec_decode(&[1.0; 20]).is_err());
        assert!(fec_decode(&[1.0; 18]).is_err());
        assert!(fec_decode(&[1.0; 21]).is_ok());
    }

    #[test]
    fn sizing_helpers() {
        assert_eq!(info_len_for(1008), 330);
        assert_eq!(info_len_for(2016), 666);
        assert_eq!(coded_len(330), 1008);
    }

    proptest! {
        #[test]
        fn noiseless_round_trip(info in proptest::collection::vec(0u8..2, 1..300)) {
            let c = fec_encode(&info);
            prop_assert_eq!(c.coded_bits.len(), coded_len(info.len()));
            prop_assert_eq!(fec_decode(&to_llr(&c.coded_bits, 1.0)).unwrap(), info);
        }
    }
}
