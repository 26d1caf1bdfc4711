use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use wavebench::scenario::BUNDLED;
use wavebench::{load_scenario, parse_scenario, run_scenario, Experiment};

const SCHEMA_HELP: &str = "\
Scenario files are TOML:
  name, experiment (psd|bler), waveforms [cpofdm fbmc rbfofdm ufmc fofdm],
  modulations [qpsk 16qam], channel (awgn|etu), equalizer (mmse|zf),
  master_seed, carrier_hz
  [numerology] fft_size rb_allocation cp_len subcarrier_spacing rb_size symbols_per_block
  [filters]    per-waveform filter lengths and cutoffs
  [pa]         kind (ideal|rapp) output_power_dbm saturation_power_dbm smoothness
  [sweep]      variable (snr_db|cfo_fraction|speed_kmh|pa_output_dbm) values
  [fixed]      snr_db cfo_fraction speed_kmh
  [stop]       min_block_errors max_blocks
  [psd]        subframes segment_len overlap window oob_window
  [desk]       fft_size rb_allocation sweep_values stop psd_subframes (used by --desk-scale)
Run `wavebench validate <name>` on a bundled scenario to see every field.";

#[derive(Parser)]
#[command(
    name = "wavebench",
    version,
    about = "Multicarrier waveform PSD and BLER experiments",
    after_help = SCHEMA_HELP
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spectral experiment: PSD traces and OOB suppression.
    Psd(RunArgs),
    /// Coded link experiment: BLER versus SNR, CFO or speed.
    Bler(RunArgs),
    /// Check a scenario and print it with all defaults filled in.
    Validate {
        /// Scenario file or bundled scenario name.
        #[arg(value_name = "SCENARIO", required_unless_present = "scenario")]
        file: Option<String>,
        #[arg(long, conflicts_with = "file")]
        scenario: Option<String>,
        #[arg(long)]
        desk_scale: bool,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List the bundled scenarios.
    ListScenarios,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file or bundled scenario name.
    #[arg(long)]
    scenario: String,
    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    workers: Option<usize>,
    /// Replaces the scenario's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Applies the scenario's [desk] overrides.
    #[arg(long)]
    desk_scale: bool,
}

fn run(args: RunArgs, experiment: Experiment) -> anyhow::Result<()> {
    let sc = load_scenario(&args.scenario)?.resolve(args.desk_scale, args.seed)?;
    if sc.experiment != experiment {
        bail!(
            "scenario '{}' is a {} experiment; run it with `wavebench {}`",
            sc.name,
            sc.experiment,
            sc.experiment
        );
    }
    let workers = args
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    if workers == 0 {
        bail!("--workers must be at least 1");
    }
    let summary = run_scenario(&sc, &args.out, workers, args.desk_scale)
        .with_context(|| format!("running scenario '{}'", sc.name))?;
    println!("{} rows -> {}", summary.rows, summary.csv.display());
    println!("metadata -> {}", summary.metadata.display());
    if !summary.psd_traces.is_empty() {
        println!("{} PSD traces in {}", summary.psd_traces.len(), args.out.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Psd(args) => run(args, Experiment::Psd),
        Command::Bler(args) => run(args, Experiment::Bler),
        Command::Validate {
            file,
            scenario,
            desk_scale,
            seed,
        } => {
            let target = file.or(scenario).expect("clap requires one");
            load_scenario(&target)
                .and_then(|sc| sc.resolve(desk_scale, seed))
                .map(|sc| print!("{}", sc.to_toml()))
                .map_err(anyhow::Error::from)
        }
        Command::ListScenarios => {
            for (name, text) in BUNDLED {
                match parse_scenario(text, name) {
                    Ok(sc) => println!("{name:<22} {:<5} {}", sc.experiment.to_string(), sc.description),
                    Err(e) => println!("{name:<22} invalid: {e}"),
                }
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
