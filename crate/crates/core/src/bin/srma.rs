use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use srma::cli::{all_passed, parse_config, run_experiment, ExperimentKind, OutputFormat};
use srma::error::Error;

/// Symbiotic-radio multiple access: rate, outage and distribution sweeps.
#[derive(Parser, Debug)]
#[command(version)]
struct Args {
    /// rate_vs_k, rate_vs_power, outage_vs_power, outage_vs_k, pdf_compare,
    /// asymptotic_check or validate
    kind: String,
    /// Configuration file of dotted keys; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
}

fn run(args: Args) -> Result<bool, Error> {
    let kind: ExperimentKind = args.kind.parse()?;
    let text = match &args.config {
        Some(path) => fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?,
        None => String::new(),
    };
    let mut spec = parse_config(kind, &text)?;
    if let Some(seed) = args.seed {
        spec.mc.seed = seed;
    }
    if let Some(trials) = args.trials {
        spec.mc.trials = trials;
    }
    if let Some(f) = &args.format {
        spec.format = f.parse()?;
    }
    if let Some(out) = args.out {
        spec.output = Some(out);
    }

    let table = run_experiment(&spec)?;
    let text = match spec.format {
        OutputFormat::Csv => table.to_csv_string(),
        OutputFormat::Json => table.to_json_string(),
    };
    match &spec.output {
        Some(path) => fs::write(path, text).map_err(|e| Error::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?,
        None => {
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
        }
    }
    Ok(kind != ExperimentKind::Validate || all_passed(&table.rows))
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("srma: one or more checks failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("srma: {e}");
            ExitCode::from(2)
        }
    }
}
