//! Scenario-driven runner for the waveform comparisons in `wavebench-core`.
//!
//! A run loads a [`scenario::Scenario`], executes its PSD or BLER
//! experiment and writes `<out>/<name>.csv`, `<out>/<name>.metadata.json`
//! and, for PSD runs, one trace file per row.

pub mod error;
pub mod experiment;
pub mod output;
pub mod scenario;
pub mod seeds;

use std::path::{Path, PathBuf};

pub use error::{HarnessError, Result};
pub use experiment::{run_bler_experiment, run_psd_experiment, BlerRow, PsdRow};
pub use scenario::{load_scenario, parse_scenario, Experiment, Scenario};
pub use seeds::derive_seed;

use output::{config_hash, unix_now, write_metadata, CsvSink, RunMetadata, FEC_NOTE};

/// Files produced by [`run_scenario`].
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub csv: PathBuf,
    pub metadata: PathBuf,
    pub rows: usize,
    pub psd_traces: Vec<PathBuf>,
}

/// Runs a resolved scenario into `out_dir`.
///
/// Metadata is written first with `complete: false` and rewritten at the
/// end; CSV rows are flushed one by one.
pub fn run_scenario(sc: &Scenario, out_dir: &Path, workers: usize, desk_scale: bool) -> Result<RunSummary> {
    std::fs::create_dir_all(out_dir)?;
    let csv_path = out_dir.join(format!("{}.csv", sc.name));
    let meta_path = out_dir.join(format!("{}.metadata.json", sc.name));
    let mut meta = RunMetadata {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        started_unix_s: unix_now(),
        finished_unix_s: None,
        complete: false,
        experiment: sc.experiment.to_string(),
        desk_scale,
        workers,
        config_hash: config_hash(sc),
        csv: csv_path.display().to_string(),
        rows: 0,
        psd_traces: Vec::new(),
        deviations: vec![FEC_NOTE.to_string()],
        scenario: sc,
    };
    write_metadata(&meta_path, &meta)?;

    let mut sink = CsvSink::create(&csv_path)?;
    let mut on_row = |row: &output::SweepResult| sink.write(row);
    let traces = match sc.experiment {
        Experiment::Psd => run_psd_experiment(sc, Some(out_dir), &mut on_row)?
            .into_iter()
            .filter_map(|r| r.trace)
            .collect(),
        Experiment::Bler => {
            run_bler_experiment(sc, workers, &mut on_row)?;
            Vec::new()
        }
    };

    meta.rows = sink.rows();
    meta.finished_unix_s = Some(unix_now());
    meta.complete = true;
    meta.psd_traces = traces.iter().map(|p: &PathBuf| p.display().to_string()).collect();
    write_metadata(&meta_path, &meta)?;
    Ok(RunSummary {
        csv: sink.path().to_path_buf(),
        metadata: meta_path,
        rows: sink.rows(),
        psd_traces: traces,
    })
}
