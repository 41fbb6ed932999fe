use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ghostsim::{builtin_mask, save_mask};
use ghostsim_cli::sweep::{parse_values, write_sweep_file};
use ghostsim_cli::{preset, run_scenario, sweep, Axis, CliError, RunOutcome, ScenarioConfig};

#[derive(Parser)]
#[command(
    name = "ghostsim",
    version,
    about = "Ghost imaging under background light noise"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write images, metrics and a manifest.
    Run { config: PathBuf },
    /// Run a built-in scenario.
    Preset {
        name: String,
        /// Output directory (default: runs/<name>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Vary one parameter of a scenario file and tabulate image quality.
    Sweep {
        config: PathBuf,
        /// noise-amplitude, noise-frequency or N.
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        /// CSV path (default: <output dir>/sweep_<axis>.csv).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a built-in object mask as an 8-bit PGM.
    ExportMask {
        name: String,
        out: PathBuf,
        #[arg(long, default_value_t = 64)]
        width: usize,
        #[arg(long, default_value_t = 64)]
        height: usize,
    },
}

fn report(config: &ScenarioConfig, outcome: &RunOutcome) {
    let (gi, igi) = (&outcome.metrics_gi, &outcome.metrics_igi);
    println!("output      {}", config.output.dir.display());
    println!(
        "GI   r={:.4} cnr={:.3} mse={:.4}",
        gi.pearson_r, gi.cnr, gi.mse
    );
    println!(
        "IGI  r={:.4} cnr={:.3} mse={:.4}",
        igi.pearson_r, igi.cnr, igi.mse
    );
    println!(
        "validity    ratio={:.4} ({})",
        outcome.validity.ratio,
        serde_json::to_value(outcome.validity.regime)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default()
    );
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run { config } => {
            let config = ScenarioConfig::load(&config)?;
            let outcome = run_scenario(&config)?;
            report(&config, &outcome);
        }
        Command::Preset { name, out } => {
            let mut config = preset(&name)?;
            if let Some(dir) = out {
                config.output.dir = dir;
            }
            config.resolve_paths(&std::env::current_dir().unwrap_or_default());
            let outcome = run_scenario(&config)?;
            report(&config, &outcome);
        }
        Command::Sweep {
            config,
            axis,
            values,
            out,
        } => {
            let axis: Axis = axis.parse()?;
            let values = parse_values(&values)?;
            let base = ScenarioConfig::load(&config)?;
            let rows = sweep(&base, axis, &values)?;
            let path = out.unwrap_or_else(|| base.output.dir.join(format!("sweep_{axis}.csv")));
            write_sweep_file(&path, axis, &rows)?;
            let failed = rows.iter().filter(|r| r.outcome.is_err()).count();
            println!(
                "{} rows ({failed} failed) -> {}",
                rows.len(),
                path.display()
            );
        }
        Command::ExportMask {
            name,
            out,
            width,
            height,
        } => {
            let mask = builtin_mask(&name, width, height)?;
            save_mask(&mask, &out)?;
            println!("{name} {width}x{height} -> {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
