//! The PSD and BLER experiment families.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use wavebench_core::channel::{PaKind, PaModel};
use wavebench_core::dsp::{welch_psd, PsdEstimate};
use wavebench_core::link::{run_link_trial, ChannelModel, Modulation};
use wavebench_core::metrics::{measure_oob, BlerAccumulator, BlerPoint, OobReport};
use wavebench_core::waveforms::{build_modem, Modem, QamGrid, WaveformKind};

use crate::error::{HarnessError, Result};
use crate::output::{config_hash, write_psd_trace, SweepResult, FEC_NOTE};
use crate::scenario::{Experiment, Scenario};
use crate::seeds::derive_seed;

/// Trials dispatched per parallel batch. Fixed so results do not depend on
/// the worker count.
pub const TRIAL_BATCH: u64 = 64;

/// Waveform index used for the CP-OFDM PSD normalization reference.
const REFERENCE_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone)]
pub struct PsdRow {
    pub waveform: WaveformKind,
    pub modulation: Modulation,
    /// PA output power in dBm, `NaN` for an unswept run.
    pub sweep_value: f64,
    pub report: OobReport,
    /// Normalized so the CP-OFDM reference has a 0 dB in-band mean.
    pub psd: PsdEstimate,
    pub trace: Option<PathBuf>,
    pub row: SweepResult,
}

#[derive(Debug, Clone)]
pub struct BlerRow {
    pub waveform: WaveformKind,
    pub modulation: Modulation,
    pub point: BlerPoint,
    pub row: SweepResult,
}

fn check_experiment(sc: &Scenario, requested: Experiment) -> Result<()> {
    if sc.experiment != requested {
        return Err(HarnessError::WrongExperiment {
            name: sc.name.clone(),
            actual: sc.experiment.to_string(),
            requested: requested.to_string(),
        });
    }
    Ok(())
}

fn pa_note(pa: &PaModel) -> String {
    match pa.kind {
        PaKind::Ideal => "pa=linear".to_string(),
        PaKind::Rapp => format!(
            "pa=rapp p={} sat={}dBm out={}dBm",
            pa.smoothness, pa.saturation_power_dbm, pa.output_power_dbm
        ),
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn condition_label(pa: &PaModel) -> String {
    match pa.kind {
        PaKind::Ideal => "linear".to_string(),
        PaKind::Rapp => format!("pa{}dbm", pa.output_power_dbm),
    }
}

fn modulated(modem: &dyn Modem, sc: &Scenario, modulation: Modulation, pa: &PaModel, seed: u64) -> Result<PsdEstimate> {
    let cfg = modem.config();
    let m = sc.psd.subframes * sc.numerology.symbols_per_block;
    let grid = QamGrid::random(
        cfg.used_subcarriers,
        m,
        modulation,
        &mut ChaCha8Rng::seed_from_u64(seed),
    );
    let x = pa.drive(&modem.modulate(&grid)?)?;
    Ok(welch_psd(&x, sc.psd.segment_len(), sc.psd.overlap, sc.psd.window)?)
}

/// Modulates `psd.subframes` random subframes per waveform, modulation and
/// PA point, estimates the PSD and measures OOB suppression.
///
/// Each PSD is normalized against a CP-OFDM reference driven through the
/// same PA. With `trace_dir` set, one trace file per row is written there.
pub fn run_psd_experiment(
    sc: &Scenario,
    trace_dir: Option<&Path>,
    on_row: &mut dyn FnMut(&SweepResult) -> Result<()>,
) -> Result<Vec<PsdRow>> {
    check_experiment(sc, Experiment::Psd)?;
    let hash = config_hash(sc);
    let points = sc.sweep_points();
    let reference = build_modem(&sc.waveform_config(WaveformKind::Cpofdm)?)?;
    let spacing = sc.numerology.subcarrier_spacing;
    let mut rows = Vec::new();
    for (m_idx, &modulation) in sc.modulation_list().iter().enumerate() {
        for (s_idx, &value) in points.iter().enumerate() {
            let point = (m_idx * points.len() + s_idx) as u64;
            let pa = sc.pa_point(value);
            let ref_psd = modulated(
                reference.as_ref(),
                sc,
                modulation,
                &pa,
                derive_seed(sc.master_seed, REFERENCE_STREAM, point, 0),
            )?;
            let (lo, hi) = reference.config().band_edges_hz();
            let ref_db = ref_psd.band_mean_db(lo, hi)?;
            for (w_idx, kind) in sc.waveform_kinds().into_iter().enumerate() {
                let cfg = sc.waveform_config(kind)?;
                let modem = build_modem(&cfg)?;
                let psd = modulated(
                    modem.as_ref(),
                    sc,
                    modulation,
                    &pa,
                    derive_seed(sc.master_seed, w_idx as u64, point, 0),
                )?
                .normalized(ref_db);
                let report = measure_oob(&psd, cfg.band_edges_hz(), sc.psd.oob_window, spacing)?;
                let trace = match trace_dir {
                    Some(dir) => {
                        let path = dir.join(format!(
                            "psd_{}_{kind}_{modulation}_{}.txt",
                            sc.name,
                            condition_label(&pa)
                        ));
                        write_psd_trace(&path, &psd)?;
                        Some(path)
                    }
                    None => None,
                };
                let w = sc.psd.oob_window;
                let row = SweepResult {
                    scenario: sc.name.clone(),
                    waveform: kind.to_string(),
                    modulation: modulation.to_string(),
                    sweep_var: sc.sweep_name().to_string(),
                    sweep_value: finite(value),
                    oob_suppression_db: Some(report.suppression_db),
                    seed: sc.master_seed,
                    config_hash: hash.clone(),
                    notes: format!(
                        "{}; oob_window=[{},{}] spacings; welch seg={} overlap={}",
                        pa_note(&pa),
                        w.start,
                        w.stop,
                        sc.psd.segment_len(),
                        sc.psd.overlap
                    ),
                    ..SweepResult::default()
                };
                on_row(&row)?;
                rows.push(PsdRow {
                    waveform: kind,
                    modulation,
                    sweep_value: value,
                    report,
                    psd,
                    trace,
                    row,
                });
            }
        }
    }
    Ok(rows)
}

/// Runs coded link trials for every (waveform, modulation, sweep value)
/// until the stop rule is met.
///
/// Trials go out in fixed batches of [`TRIAL_BATCH`] to a pool of `workers`
/// threads and are folded in trial order, stopping at the exact trial that
/// satisfies the rule, so the output does not depend on `workers`.
pub fn run_bler_experiment(
    sc: &Scenario,
    workers: usize,
    on_row: &mut dyn FnMut(&SweepResult) -> Result<()>,
) -> Result<Vec<BlerRow>> {
    check_experiment(sc, Experiment::Bler)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    let hash = config_hash(sc);
    let points = sc.sweep_points();
    let stop = sc.stop;
    let mut rows = Vec::new();
    for (w_idx, kind) in sc.waveform_kinds().into_iter().enumerate() {
        let modem = build_modem(&sc.waveform_config(kind)?)?;
        for (m_idx, &modulation) in sc.modulation_list().iter().enumerate() {
            for (s_idx, &value) in points.iter().enumerate() {
                let point = (m_idx * points.len() + s_idx) as u64;
                let (params, snr_db) = sc.link_point(value);
                let mut acc = BlerAccumulator::default();
                let mut next = 0u64;
                while !acc.is_done(&stop) {
                    let n = TRIAL_BATCH.min(stop.max_blocks - acc.blocks);
                    let batch: Vec<_> = pool.install(|| {
                        (next..next + n)
                            .into_par_iter()
                            .map(|t| {
                                let seed = derive_seed(sc.master_seed, w_idx as u64, point, t);
                                run_link_trial(modem.as_ref(), &params, snr_db, modulation, seed)
                            })
                            .collect()
                    });
                    for trial in batch {
                        acc.add(&trial?);
                        if acc.is_done(&stop) {
                            break;
                        }
                    }
                    next += n;
                }
                let result = acc.finish(value, &stop)?;
                let mut notes = vec![FEC_NOTE.to_string(), pa_note(&params.pa)];
                if params.channel == ChannelModel::Etu {
                    notes.push(format!("etu doppler={:.2}Hz", params.doppler_hz));
                }
                if result.censored {
                    notes.push("censored".to_string());
                }
                let row = SweepResult {
                    scenario: sc.name.clone(),
                    waveform: kind.to_string(),
                    modulation: modulation.to_string(),
                    sweep_var: sc.sweep_name().to_string(),
                    sweep_value: Some(value),
                    blocks: Some(result.blocks),
                    block_errors: Some(result.block_errors),
                    bler: Some(result.bler),
                    ci_low: Some(result.ci_low),
                    ci_high: Some(result.ci_high),
                    evm_db: finite(result.evm_db),
                    oob_suppression_db: None,
                    seed: sc.master_seed,
                    config_hash: hash.clone(),
                    notes: notes.join("; "),
                };
                on_row(&row)?;
                rows.push(BlerRow {
                    waveform: kind,
                    modulation,
                    point: result,
                    row,
                });
            }
        }
    }
    Ok(rows)
}
