use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rixs_core::{Error, Result};
use rixs_workbench::commands::{self, exit_code};
use rixs_workbench::PipelineConfig;

/// Synthetic RIXS beamline pipeline: simulate, calibrate, extract, reconstruct.
///
/// Log verbosity is read from RIXS_LOG (error, warn, info, debug, trace).
#[derive(Parser)]
#[command(name = "rixs-workbench", version, about)]
struct Cli {
    /// Pipeline configuration (TOML). Defaults to the built-in wsi2-default set.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir` from the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Detector seed; overrides `detector.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Print the default configuration and exit.
    #[arg(long)]
    print_default_config: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the RIXS map and write it with per-row XES files.
    Simulate,
    /// Run an elastic scan through the detector and fit the cubic dispersion.
    Calibrate,
    /// TFY, HERFD, energy-transfer map, XES cuts and peak tracks from a map.
    Extract {
        /// Map file (CSV or .json). Defaults to <out>/simulate/rixs_map.csv.
        #[arg(long)]
        map: Option<PathBuf>,
    },
    /// Reconstruct the absorption spectrum from the off-resonant cut of a map.
    Reconstruct {
        #[arg(long)]
        map: Option<PathBuf>,
    },
    /// Simulate, calibrate, measure the map through the detector, extract, reconstruct.
    All,
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.detector.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli)?;
    let Some(command) = cli.command else {
        return Err(Error::invalid("command", "no subcommand given; see --help"));
    };
    match command {
        Command::Simulate => {
            let m = commands::simulate(&cfg)?;
            println!(
                "map {}x{} written to {}",
                m.incident().count(),
                m.emission().count(),
                cfg.output_dir.join("simulate").display()
            );
        }
        Command::Calibrate => {
            let c = commands::calibrate(&cfg)?;
            println!(
                "rms residual {:.3e} eV, max error {:.3e} eV",
                c.fit.rms_residual, c.summary.max_abs_error
            );
        }
        Command::Extract { map } => {
            let (_, m) = commands::load_map_for(&cfg, map.as_deref())?;
            let e = commands::extract(&cfg, &m)?;
            print_json(&e.summary)?;
        }
        Command::Reconstruct { map } => {
            let (_, m) = commands::load_map_for(&cfg, map.as_deref())?;
            let r = commands::reconstruct(&cfg, &m)?;
            print_json(&r.summary)?;
        }
        Command::All => {
            let s = commands::all(&cfg)?;
            println!("outputs in {}", cfg.output_dir.display());
            print_json(&s.extract)?;
        }
    }
    Ok(())
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(v).map_err(|e| Error::Numerical(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RIXS_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    if cli.print_default_config {
        print!("{}", PipelineConfig::default().to_toml());
        return ExitCode::SUCCESS;
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                Error::Validation(v) => {
                    eprintln!("error: invalid configuration ({} violations)", v.len());
                    for x in v {
                        eprintln!("  {x}");
                    }
                }
                _ => eprintln!("error: {e}"),
            }
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
