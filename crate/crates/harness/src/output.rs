//! Result files: the sweep CSV, PSD traces and run metadata.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};
use wavebench_core::dsp::PsdEstimate;

use crate::error::Result;
use crate::scenario::Scenario;

/// Column order of the sweep CSV.
pub const CSV_COLUMNS: [&str; 15] = [
    "scenario",
    "waveform",
    "modulation",
    "sweep_var",
    "sweep_value",
    "blocks",
    "block_errors",
    "bler",
    "ci_low",
    "ci_high",
    "evm_db",
    "oob_suppression_db",
    "seed",
    "config_hash",
    "notes",
];

/// Deviations from the reference link that every row carries.
pub const FEC_NOTE: &str = "fec=conv r1/3 K7 (133,171,165) soft Viterbi in place of turbo";

/// One CSV row; `None` fields are written as empty strings.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct SweepResult {
    pub scenario: String,
    pub waveform: String,
    pub modulation: String,
    pub sweep_var: String,
    pub sweep_value: Option<f64>,
    pub blocks: Option<u64>,
    pub block_errors: Option<u64>,
    pub bler: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub evm_db: Option<f64>,
    pub oob_suppression_db: Option<f64>,
    pub seed: u64,
    pub config_hash: String,
    pub notes: String,
}

/// Appends rows to a CSV file, flushing after each so an interrupted run
/// leaves only complete rows behind.
pub struct CsvSink {
    writer: csv::Writer<File>,
    path: PathBuf,
    rows: usize,
}

impl CsvSink {
    pub fn create(path: &Path) -> Result<Self> {
        let mut writer = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
        writer.write_record(CSV_COLUMNS)?;
        writer.flush()?;
        Ok(Self {
            writer,
            path: path.to_path_buf(),
            rows: 0,
        })
    }

    pub fn write(&mut self, row: &SweepResult) -> Result<()> {
        self.writer.serialize(row)?;
        self.writer.flush()?;
        self.rows += 1;
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

/// First 16 hex digits of SHA-256 over the resolved scenario TOML.
pub fn config_hash(scenario: &Scenario) -> String {
    let digest = Sha256::digest(scenario.to_toml().as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Two tab-separated columns, `frequency_hz` and `power_db`, with a header.
pub fn write_psd_trace(path: &Path, psd: &PsdEstimate) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "frequency_hz\tpower_db")?;
    for (f, p) in psd.frequencies.iter().zip(&psd.power_db) {
        writeln!(w, "{f}\t{p}")?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct RunMetadata<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub started_unix_s: u64,
    pub finished_unix_s: Option<u64>,
    pub complete: bool,
    pub experiment: String,
    pub desk_scale: bool,
    pub workers: usize,
    pub config_hash: String,
    pub csv: String,
    pub rows: usize,
    pub psd_traces: Vec<String>,
    pub deviations: Vec<String>,
    pub scenario: &'a Scenario,
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn write_metadata(path: &Path, meta: &RunMetadata<'_>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, meta)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::load_scenario;

    #[test]
    fn empty_fields_and_column_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let mut sink = CsvSink::create(&path).unwrap();
        sink.write(&SweepResult {
            scenario: "s".into(),
            waveform: "ufmc".into(),
            modulation: "qpsk".into(),
            sweep_var: "snr_db".into(),
            sweep_value: Some(1.5),
            blocks: Some(10),
            block_errors: Some(2),
            bler: Some(0.2),
            notes: "a, b".into(),
            ..SweepResult::default()
        })
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
        assert_eq!(lines.next().unwrap(), "s,ufmc,qpsk,snr_db,1.5,10,2,0.2,,,,,0,,\"a, b\"");
    }

    #[test]
    fn rows_are_readable_before_the_sink_closes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("partial.csv");
        let mut sink = CsvSink::create(&path).unwrap();
        for i in 0..3 {
            sink.write(&SweepResult {
                scenario: "p".into(),
                sweep_value: Some(i as f64),
                ..SweepResult::default()
            })
            .unwrap();
        }
        let mut r = csv::Reader::from_path(&path).unwrap();
        assert_eq!(r.records().count(), 3);
        drop(sink);
    }

    #[test]
    fn hash_tracks_resolved_config() {
        let a = load_scenario("fig4a_bler_snr").unwrap();
        let b = a.clone().resolve(false, Some(a.master_seed + 1)).unwrap();
        assert_eq!(config_hash(&a), config_hash(&a.clone()));
        assert_ne!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 16);
    }
}
