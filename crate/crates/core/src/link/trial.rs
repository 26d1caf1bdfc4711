use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{db_to_linear, fec_decode, fec_encode, info_len_for, qam_demap_llr, qam_map, EqualizerScheme, Modulation};
use crate::channel::{add_noise, apply_channel, etu_profile, sample_fading, ChannelRealization, PaModel};
use crate::error::{config, Result};
use crate::seed::mix;
use crate::waveforms::{Modem, QamGrid};
use crate::C64;

/// Seed of the fixed bit interleaver.
const INTERLEAVER_SEED: u64 = 0x1A7E_5EED;
/// Variance floor used for LLR scaling when no noise is added.
const NOISELESS_VAR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelModel {
    /// Unit channel; only CFO and noise apply.
    #[default]
    Awgn,
    /// ETU Rayleigh fading with the configured Doppler.
    Etu,
}

/// Channel and receiver settings for one sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    pub channel: ChannelModel,
    /// Hz
    pub doppler_hz: f64,
    /// Fraction of the subcarrier spacing.
    pub cfo_fraction: f64,
    pub pa: PaModel,
    pub equalizer: EqualizerScheme,
    /// Multicarrier symbols per transport block.
    pub symbols_per_block: usize,
}

impl Default for LinkParams {
    fn default() -> Self {
        Self {
            channel: ChannelModel::Awgn,
            doppler_hz: 0.0,
            cfo_fraction: 0.0,
            pa: PaModel::ideal(),
            equalizer: EqualizerScheme::Mmse,
            symbols_per_block: 14,
        }
    }
}

/// Outcome of one transport block.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TrialResult {
    pub info_bits: u64,
    pub bit_errors: u64,
    pub block_errors: u64,
    pub blocks: u64,
    /// EVM of the equalized symbols, dB.
    pub measured_evm_db: f64,
    /// `Σ|ŝ - s|²` behind `measured_evm_db`, for pooling across trials.
    pub evm_error_energy: f64,
    /// `Σ|s|²`
    pub evm_ref_energy: f64,
}

fn interleaver(len: usize) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..len).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(INTERLEAVER_SEED));
    perm
}

/// One coded transport block end to end.
///
/// Random information bits are convolutionally encoded, interleaved over
/// the whole grid, QAM mapped, modulated, passed through the PA, the
/// multipath/CFO channel and AWGN, then demodulated and equalized with the
/// exact channel response at each symbol's CSI instant. `snr_db` is the
/// per-subcarrier SNR of CP-OFDM reception; `f64::INFINITY` adds no noise.
pub fn run_link_trial(
    modem: &dyn Modem,
    params: &LinkParams,
    snr_db: f64,
    modulation: Modulation,
    seed: u64,
) -> Result<TrialResult> {
    let cfg = modem.config();
    let k = cfg.used_subcarriers;
    let m = params.symbols_per_block;
    if m == 0 {
        return config("symbols_per_block must be positive");
    }
    if snr_db.is_nan() {
        return config("SNR is NaN");
    }
    let capacity = k * m * modulation.bits_per_symbol();
    let info_len = info_len_for(capacity);
    if info_len == 0 {
        return config(format!("a {capacity}-bit grid cannot carry a coded block"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, &[1]));
    let info: Vec<u8> = (0..info_len).map(|_| rng.random_range(0..2u8)).collect();
    let block = fec_encode(&info);
    let mut padded = block.coded_bits.clone();
    padded.resize(capacity, 0);
    let perm = interleaver(capacity);
    let tx_bits: Vec<u8> = perm.iter().map(|&p| padded[p]).collect();
    let symbols = qam_map(&tx_bits, modulation)?;
    // frequency first: symbol s sits on subcarrier s % K of symbol s / K
    let grid = QamGrid::new(Array2::from_shape_fn((k, m), |(r, c)| symbols[c * k + r]), modulation);

    let x = params.pa.drive(&modem.modulate(&grid)?)?;
    let realization = match params.channel {
        ChannelModel::Awgn => ChannelRealization::identity(x.len()),
        ChannelModel::Etu => sample_fading(
            &etu_profile(),
            params.doppler_hz,
            x.sample_rate,
            x.len(),
            mix(seed, &[2]),
        )?,
    }
    .with_cfo(params.cfo_fraction, cfg.fft_size);
    let faded = apply_channel(&x, &realization)?;
    let snr = db_to_linear(snr_db);
    // unit nominal power per sample maps to 1/snr per subcarrier after an
    // N-point transform scaled by sqrt(K)/N
    let sample_var = if snr.is_infinite() {
        0.0
    } else {
        cfg.fft_size as f64 / (k as f64 * snr)
    };
    let y = add_noise(&faded, sample_var, mix(seed, &[3]))?;

    let bins = cfg.bins();
    let instants = modem.csi_instants(m);
    let csi = Array2::from_shape_fn((k, instants.len()), |(r, c)| {
        realization.frequency_response(bins[r], instants[c])
    });
    let bin_var = if snr.is_infinite() { 0.0 } else { 1.0 / snr };
    let eq = modem.demodulate_equalized(&y, &csi, params.equalizer, bin_var)?;
    let est = eq.unbiased();

    let (mut err_e, mut ref_e) = (0.0, 0.0);
    for (a, b) in est.iter().zip(grid.symbols.iter()) {
        err_e += (a - b).norm_sqr();
        ref_e += b.norm_sqr();
    }

    let flat_est: Vec<C64> = (0..k * m).map(|s| est[[s % k, s / k]]).collect();
    let flat_var: Vec<f64> = (0..k * m)
        .map(|s| {
            let v = eq.noise_var[[s % k, s / k]];
            if v.is_infinite() {
                v
            } else {
                v.max(NOISELESS_VAR)
            }
        })
        .collect();
    let llr_tx = qam_demap_llr(&flat_est, &flat_var, modulation)?;
    let mut llr = vec![0.0; capacity];
    for (i, &p) in perm.iter().enumerate() {
        llr[p] = llr_tx[i];
    }
    llr.truncate(block.coded_bits.len());
    let decoded = fec_decode(&llr)?;
    let bit_errors = decoded.iter().zip(&info).filter(|(a, b)| a != b).count() as u64;

    Ok(TrialResult {
        info_bits: info_len as u64,
        bit_errors,
        block_errors: u64::from(bit_errors > 0),
        blocks: 1,
        measured_evm_db: crate::metrics::evm_db_from_energies(err_e, ref_e),
        evm_error_energy: err_e,
        evm_ref_energy: ref_e,
    })
}
