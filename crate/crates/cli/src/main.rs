//! `icdsim`: regenerate the ICD delay, power and energy tables.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use icdsim_core::PowerMode;

use crate::commands::Context;
use crate::config::{ConfigError, Format, RunConfig};
use crate::output::Sink;

#[derive(Parser)]
#[command(name = "icdsim", version, about = "Energy and delay of directional initial cell discovery")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration; defaults apply to missing fields
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory [default: config `out`, else ./out]
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    #[arg(long, global = true, value_enum)]
    power_mode: Option<ModeArg>,

    /// ADC resolution; repeat for several. Replaces `bits` (and
    /// `convergence_bits` for the convergence command).
    #[arg(long, global = true)]
    bits: Vec<u32>,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Frame timing, scan counts and receiver power tables
    Tables,
    /// Energy over the sub-carrier bandwidth grid
    Sweep,
    /// ADC-only energy limit per resolution
    Convergence,
    /// Exhaustive sweep simulation against the closed-form delay
    Verify,
    /// Wide-bandwidth PSS structure
    Pss,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Lookup,
    Parametric,
}

const EXIT_RUNTIME: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_MISMATCH: u8 = 3;

fn load(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(f) = cli.format {
        cfg.format = f;
    }
    if let Some(m) = cli.power_mode {
        cfg.power_mode = Some(match m {
            ModeArg::Lookup => PowerMode::Lookup,
            ModeArg::Parametric => PowerMode::Parametric,
        });
    }
    if !cli.bits.is_empty() {
        cfg.bits = cli.bits.clone();
        if cli.command == Command::Convergence {
            cfg.convergence_bits = cli.bits.clone();
        }
    }
    if let Some(out) = &cli.out {
        cfg.out = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli, cfg: RunConfig) -> anyhow::Result<bool> {
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let sink = Sink::new(&dir, cfg.format, cfg.digest())?;
    let mut ctx = Context::new(cfg, sink)?;
    let ok = match cli.command {
        Command::Tables => commands::tables(&mut ctx)?,
        Command::Sweep => commands::sweep(&mut ctx)?,
        Command::Convergence => commands::convergence(&mut ctx)?,
        Command::Verify => commands::verify(&mut ctx)?,
        Command::Pss => commands::pss(&mut ctx)?,
    };
    for path in ctx.sink.written() {
        println!("wrote {}", path.display());
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match run(&cli, cfg) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_MISMATCH),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
