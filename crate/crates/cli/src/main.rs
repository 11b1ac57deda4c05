use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use franson_cli::commands::{cmd_run, cmd_spectrum, cmd_validate, EngineChoice, ExportFlags, RunConfig, SpectrumConfig};
use franson_cli::error::{CliError, EXIT_OK};
use franson_cli::Overrides;

/// Franson energy-time interference simulator with plasmonic channels.
///
/// Exit codes: 0 success, 2 configuration or usage error, 3 Franson regime
/// check failed, 4 runtime error.
#[derive(Parser)]
#[command(name = "franson", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan the reference and sample configurations and extract net visibilities.
    Run(RunArgs),
    /// Write the transmittance spectrum of a hole array.
    Spectrum(SpectrumArgs),
    /// Check a scenario's invariants and the Franson regime conditions.
    Validate {
        /// Bundled scenario name (eot_810, eot_1550, lrspp_1550) or a .toml/.json file.
        #[arg(long)]
        scenario: String,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Bundled scenario name (eot_810, eot_1550, lrspp_1550) or a .toml/.json file.
    #[arg(long)]
    scenario: String,
    #[arg(long, value_enum, default_value = "montecarlo")]
    engine: EngineChoice,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Gates per phase point.
    #[arg(long)]
    gates: Option<u64>,
    /// Number of equally spaced phase points over 2π.
    #[arg(long)]
    phases: Option<usize>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    no_fringes: bool,
    #[arg(long)]
    no_histogram: bool,
    #[arg(long)]
    no_spectrum: bool,
    #[arg(long)]
    no_summary: bool,
}

#[derive(Args)]
struct SpectrumArgs {
    /// Bundled array name (a700_d300, a1400_d600) or a .toml/.json file.
    #[arg(long)]
    array: String,
    #[arg(long)]
    from_nm: f64,
    #[arg(long)]
    to_nm: f64,
    #[arg(long, default_value_t = 0.05)]
    step_nm: f64,
    /// Output CSV file.
    #[arg(long, default_value = "spectrum.csv")]
    out: PathBuf,
}

fn run(command: Command) -> Result<u8, CliError> {
    match command {
        Command::Run(a) => {
            let config = RunConfig {
                scenario: a.scenario,
                engine: a.engine,
                out: a.out,
                exports: ExportFlags {
                    fringes: !a.no_fringes,
                    histogram: !a.no_histogram,
                    spectrum: !a.no_spectrum,
                    summary: !a.no_summary,
                },
                overrides: Overrides {
                    seed: a.seed,
                    gates: a.gates,
                    phases: a.phases,
                },
                threads: a.threads,
            };
            let outcome = cmd_run(&config)?;
            print!("{}", outcome.summary);
            for p in &outcome.artifacts {
                println!("wrote {}", p.display());
            }
            Ok(EXIT_OK)
        }
        Command::Spectrum(a) => {
            let (path, warnings) = cmd_spectrum(&SpectrumConfig {
                array: a.array,
                from_nm: a.from_nm,
                to_nm: a.to_nm,
                step_nm: a.step_nm,
                out: a.out,
            })?;
            for w in warnings {
                eprintln!("warning: {w}");
            }
            println!("wrote {}", path.display());
            Ok(EXIT_OK)
        }
        Command::Validate { scenario } => {
            let (report, code) = cmd_validate(&scenario)?;
            print!("{report}");
            Ok(code)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
