//! `crossqed <response|fig2|fig3|fredkin|compare-dk|oracle> [--config path]
//! [--out path] [--json] [--workers N] [--set key=value ...]`

mod commands;
mod config;
mod error;
mod table;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use crate::commands::Command;
use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "crossqed", version, about = "Crossed-cavity scattering and photonic gate tables")]
struct Args {
    command: Command,

    /// Flat JSON config; omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Emit an array of JSON records instead of CSV.
    #[arg(long)]
    json: bool,

    /// Worker threads for sweeps.
    #[arg(long)]
    workers: Option<usize>,

    /// Override a config field, e.g. `--set cooperativity=20`.
    #[arg(long = "set", value_name = "KEY=VALUE", value_parser = config::parse_override)]
    overrides: Vec<(String, serde_json::Value)>,
}

fn execute(args: Args) -> Result<()> {
    let mut overrides = args.overrides;
    if let Some(out) = &args.out {
        overrides.push(("out".into(), out.display().to_string().into()));
    }
    if args.json {
        overrides.push(("json".into(), true.into()));
    }
    if let Some(n) = args.workers {
        overrides.push(("workers".into(), n.into()));
    }
    let mut cfg = config::load(args.config.as_deref(), &overrides)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.workers {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::config(format!("worker pool: {e}")))?;
    let table = pool.install(|| commands::run(args.command, &mut cfg))?;

    let mut sink: Box<dyn Write> = match &cfg.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    };
    if cfg.json {
        table.write_json(&mut sink)?;
    } else {
        table.write_csv(&mut sink, &cfg.header(args.command.name()))?;
    }
    sink.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("crossqed: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
