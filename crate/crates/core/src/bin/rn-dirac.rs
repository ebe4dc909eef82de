use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rn_dirac::harness::{self, Experiment, RawConfig, EXIT_VALIDATION, OUTPUT_ROOT_ENV};

/// Dirac scattering on charged black-hole exteriors: experiments and reports.
///
/// Exit status: 0 all checks passed, 1 an acceptance check failed,
/// 2 invalid configuration (nothing written), 3 numerical failure.
#[derive(Parser, Debug)]
#[command(name = "rn-dirac", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Configuration file of `section.key = value` lines.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Overrides, `--section.key=value` or `--section.key value`.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
    overrides: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the experiments named by the `experiment` key.
    Run(Common),
    /// Tortoise map, metric factor and round-trip table.
    GeometryTable(Common),
    /// Potential and derivatives on the x grid, with the integral identity.
    PotentialTable(Common),
    /// Transmission and reflection over the energy grid.
    SmatrixSweep(Common),
    /// Transmission phase at high energy against w^2 / (2 r+).
    HighEnergyCheck(Common),
    /// Time evolution: norm, mean position, velocity.
    Evolve(Common),
    /// Wave operators against the Fourier-integral modifiers.
    ModifierDefect(Common),
    /// F_out from the long-time limit against its high-energy expansion.
    CompareFout(Common),
    /// (M, Q^2) from a CSV of samples.
    Reconstruct(Common),
    /// Synthetic scattering data to (M, Q^2).
    EndToEnd(Common),
}

fn split(cmd: Command) -> (Option<Experiment>, Common) {
    match cmd {
        Command::Run(c) => (None, c),
        Command::GeometryTable(c) => (Some(Experiment::GeometryTable), c),
        Command::PotentialTable(c) => (Some(Experiment::PotentialTable), c),
        Command::SmatrixSweep(c) => (Some(Experiment::SmatrixSweep), c),
        Command::HighEnergyCheck(c) => (Some(Experiment::HighEnergyCheck), c),
        Command::Evolve(c) => (Some(Experiment::Evolve), c),
        Command::ModifierDefect(c) => (Some(Experiment::ModifierDefect), c),
        Command::CompareFout(c) => (Some(Experiment::CompareFout), c),
        Command::Reconstruct(c) => (Some(Experiment::Reconstruct), c),
        Command::EndToEnd(c) => (Some(Experiment::EndToEnd), c),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, common) = split(cli.command);
    let invalid = |msg: String| {
        eprintln!("error: {msg}");
        ExitCode::from(EXIT_VALIDATION as u8)
    };
    let text = match &common.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => return invalid(format!("{}: {e}", path.display())),
        },
        None => String::new(),
    };
    let resolved = RawConfig::parse(&text).and_then(|mut raw| {
        raw.apply_overrides(&common.overrides)?;
        if let Some(e) = experiment {
            raw.set("experiment", e.name())?;
        }
        raw.resolve()
    });
    let cfg = match resolved {
        Ok(c) => c,
        Err(e) => return invalid(e.to_string()),
    };
    let inputs = match harness::prepare(&cfg) {
        Ok(i) => i,
        Err(e) => return invalid(e.to_string()),
    };
    let root = std::env::var_os(OUTPUT_ROOT_ENV).map_or_else(|| PathBuf::from("."), PathBuf::from);
    match harness::run(&cfg, &inputs, &root) {
        Ok(m) => {
            for r in &m.experiments {
                let failed: Vec<&str> = r
                    .checks
                    .iter()
                    .filter(|c| !c.passed)
                    .map(|c| c.name.as_str())
                    .collect();
                let detail = match (&r.error, failed.is_empty()) {
                    (Some(e), _) => format!(": {e}"),
                    (None, false) => format!(": failed {}", failed.join(", ")),
                    (None, true) => String::new(),
                };
                println!(
                    "{:<18} {:?} {:.2}s{detail}",
                    r.name, r.status, r.wall_time_s
                );
            }
            println!(
                "manifest: {}",
                harness::output_dir(&cfg, &root)
                    .join("manifest.json")
                    .display()
            );
            ExitCode::from(m.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
