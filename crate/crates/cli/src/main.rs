//! Batch front-end for the cavity-array coupling library.
//!
//! `cqed-array <scenario> --config <path> [--out <dir>] [--threads N]
//! [--seed N] [--plot]` runs one scenario; `cqed-array validate --config
//! <path>` only checks the document. Exit status is 0 on success, 2 for
//! configuration problems, 3 when a numerical routine fails and 1 for other
//! I/O errors.

mod config;
mod plot;
mod scenarios;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use serde::Serialize;
use serde_json::{Map, Value};

use config::{Diagnostic, Job, Scenario};
use scenarios::{Context, RunError};

const EXIT_VALIDATION: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_IO: u8 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Command {
    Spectrum,
    Eigen,
    ExtractGamma,
    FitAlpha,
    FitG,
    Bbq,
    J12Model,
    J12Oracle,
    Compare,
    PhotonField,
    Validate,
}

impl Command {
    fn scenario(self) -> Option<Scenario> {
        Some(match self {
            Command::Spectrum => Scenario::Spectrum,
            Command::Eigen => Scenario::Eigen,
            Command::ExtractGamma => Scenario::ExtractGamma,
            Command::FitAlpha => Scenario::FitAlpha,
            Command::FitG => Scenario::FitG,
            Command::Bbq => Scenario::Bbq,
            Command::J12Model => Scenario::J12Model,
            Command::J12Oracle => Scenario::J12Oracle,
            Command::Compare => Scenario::Compare,
            Command::PhotonField => Scenario::PhotonField,
            Command::Validate => return None,
        })
    }
}

#[derive(Debug, Parser)]
#[command(
    version,
    about = "Collective-mode qubit coupling in coupled 3D-cavity arrays"
)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long)]
    threads: Option<usize>,
    /// Seed for synthetic-noise scenarios.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write SVG plots.
    #[arg(long)]
    plot: bool,
}

#[derive(Serialize)]
struct Versions {
    cqed_array: &'static str,
    cli: &'static str,
}

#[derive(Serialize)]
struct RunReport<'a> {
    scenario: &'static str,
    inputs: &'a Job,
    seed: u64,
    threads: usize,
    plot: bool,
    status: &'static str,
    error: Option<String>,
    files: Vec<String>,
    outputs: Map<String, Value>,
    versions: Versions,
    wall_time_s: f64,
}

fn print_diagnostics(d: &[Diagnostic]) {
    for x in d {
        eprintln!("{x}");
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let loaded = match config::load(&cli.config) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("{}: {e}", cli.config.display());
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    let resolved = config::resolve(&loaded, cli.command.scenario());
    if cli.command == Command::Validate {
        return match resolved {
            Ok(r) => {
                println!(
                    "{}: valid {} configuration",
                    cli.config.display(),
                    r.scenario.name()
                );
                ExitCode::SUCCESS
            }
            Err(d) => {
                for x in &d {
                    println!("{x}");
                }
                ExitCode::from(EXIT_VALIDATION)
            }
        };
    }
    let resolved = match resolved {
        Ok(r) => r,
        Err(d) => {
            print_diagnostics(&d);
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("--threads: must be at least 1");
            return ExitCode::from(EXIT_VALIDATION);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("thread pool: {e}");
            return ExitCode::from(EXIT_IO);
        }
    }
    let out_dir = cli
        .out
        .clone()
        .or(resolved.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        eprintln!("{}: {e}", out_dir.display());
        return ExitCode::from(EXIT_IO);
    }
    let ctx = Context {
        out_dir: &out_dir,
        seed: cli.seed,
        plot: cli.plot,
    };
    let start = Instant::now();
    let result = scenarios::run(&resolved.job, &ctx);
    let wall = start.elapsed().as_secs_f64();
    let (status, error, outputs, code) = match result {
        Ok(o) => ("ok", None, o, ExitCode::SUCCESS),
        Err(e) => {
            eprintln!("{e}");
            let code = match e {
                RunError::Numeric(_) => EXIT_NUMERIC,
                RunError::Io { .. } => EXIT_IO,
            };
            (
                "failed",
                Some(e.to_string()),
                Default::default(),
                ExitCode::from(code),
            )
        }
    };
    let report = RunReport {
        scenario: resolved.scenario.name(),
        inputs: &resolved.job,
        seed: cli.seed,
        threads: rayon::current_num_threads(),
        plot: cli.plot,
        status,
        error,
        files: outputs
            .files
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect(),
        outputs: outputs.values,
        versions: Versions {
            cqed_array: cqed_array_version(),
            cli: env!("CARGO_PKG_VERSION"),
        },
        wall_time_s: wall,
    };
    let path = out_dir.join("run_report.json");
    let json = serde_json::to_string_pretty(&report).expect("report serialises");
    if let Err(e) = std::fs::write(&path, json + "\n") {
        eprintln!("{}: {e}", path.display());
        return ExitCode::from(EXIT_IO);
    }
    if status == "ok" {
        println!(
            "{}: wrote {} file(s) to {}",
            resolved.scenario.name(),
            report.files.len() + 1,
            out_dir.display()
        );
    }
    code
}

fn cqed_array_version() -> &'static str {
    cqed_array::VERSION
}
