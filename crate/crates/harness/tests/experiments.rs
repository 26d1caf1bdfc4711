use wavebench::output::SweepResult;
use wavebench::{parse_scenario, run_bler_experiment, run_psd_experiment};
use wavebench_core::waveforms::WaveformKind;

const SMALL: &str = r#"
name = "small"
experiment = "bler"
waveforms = ["fbmc", "rbfofdm"]
modulations = ["qpsk", "16qam"]
channel = "etu"
master_seed = 4

[numerology]
fft_size = 64
rb_allocation = [0]

[sweep]
variable = "speed_kmh"
values = [3.0, 120.0]

[fixed]
snr_db = 6.0

[stop]
min_block_errors = 7
max_blocks = 90
"#;

fn collect(sc: &wavebench::Scenario, workers: usize) -> Vec<SweepResult> {
    let mut rows = Vec::new();
    run_bler_experiment(sc, workers, &mut |r| {
        rows.push(r.clone());
        Ok(())
    })
    .unwrap();
    rows
}

#[test]
fn bler_rows_do_not_depend_on_worker_count() {
    let sc = parse_scenario(SMALL, "small").unwrap();
    let one = collect(&sc, 1);
    assert_eq!(one.len(), 8);
    assert_eq!(one, collect(&sc, 3));
}

#[test]
fn stop_rule_is_honoured_exactly() {
    let sc = parse_scenario(SMALL, "small").unwrap();
    for r in collect(&sc, 2) {
        let (blocks, errors) = (r.blocks.unwrap(), r.block_errors.unwrap());
        // the run ends on the trial that meets the rule
        assert!(errors == 7 || (blocks == 90 && errors < 7), "{blocks} {errors}");
        assert_eq!(r.notes.contains("censored"), errors < 7);
    }
}

#[test]
fn psd_rows_carry_oob_reports() {
    let text = r#"
name = "p"
experiment = "psd"
waveforms = ["cpofdm", "ufmc"]
[numerology]
fft_size = 256
rb_allocation = [0, 1]
[psd]
subframes = 6
segment_len = 512
"#;
    let sc = parse_scenario(text, "p").unwrap();
    let rows = run_psd_experiment(&sc, None, &mut |_| Ok(())).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.trace.is_none() && r.sweep_value.is_nan()));
    let cp = rows.iter().find(|r| r.waveform == WaveformKind::Cpofdm).unwrap();
    // the CP-OFDM reference and the measured CP-OFDM share a normalization
    assert!(cp.report.inband_mean_db.abs() < 0.5, "{}", cp.report.inband_mean_db);
    assert_eq!(cp.row.oob_suppression_db, Some(cp.report.suppression_db));
    assert_eq!(cp.row.sweep_value, None);
}
