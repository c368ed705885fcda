//! Command-line entry point.
//!
//! Exit codes: 0 success, 2 configuration or validation error, 3 numerical
//! failure (including a failed `--verify`), 4 solver nonconvergence.

pub mod commands;
pub mod config;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

pub use commands::{run, CommandKind, Outcome, CSV_HEADER};
pub use config::RunConfig;

use crate::error::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_NONCONVERGED: i32 = 4;

/// Relative agreement required by `--verify`.
pub const VERIFY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Parser)]
#[command(name = "fraclab", version, about = "Variable-exponent fractional norms, trace diagnostics and a nonlocal solver")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,
    /// Re-run the computation recorded in a report and compare its headline number.
    #[arg(long, value_name = "REPORT")]
    pub verify: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "FRACLAB_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Debug, clap::Args)]
pub struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Directory for the JSON report and CSV table.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Luxemburg norm of f in L^{p(.)} on the domain or its boundary.
    Norm(RunArgs),
    /// Gagliardo seminorm of f (boundary scope uses q and t).
    Seminorm(RunArgs),
    /// Boundary norm against the full fractional norm.
    TraceCheck(RunArgs),
    /// Concentration sweep toward a boundary point.
    Sharpness(RunArgs),
    /// Hölder inequality check.
    Holder(RunArgs),
    /// Boundary covering certificate and per-patch seminorm chain.
    Partition(RunArgs),
    /// Embedding into W^{t,r}.
    Embed(RunArgs),
    /// Minimize the nonlocal Neumann energy.
    Solve(RunArgs),
}

impl Command {
    fn split(&self) -> (CommandKind, &RunArgs) {
        match self {
            Command::Norm(a) => (CommandKind::Norm, a),
            Command::Seminorm(a) => (CommandKind::Seminorm, a),
            Command::TraceCheck(a) => (CommandKind::TraceCheck, a),
            Command::Sharpness(a) => (CommandKind::Sharpness, a),
            Command::Holder(a) => (CommandKind::Holder, a),
            Command::Partition(a) => (CommandKind::Partition, a),
            Command::Embed(a) => (CommandKind::Embed, a),
            Command::Solve(a) => (CommandKind::Solve, a),
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    if e.is_validation() {
        EXIT_VALIDATION
    } else {
        EXIT_NUMERIC
    }
}

/// Report document: command, configuration, headline and result.
pub fn report(kind: CommandKind, config: &Value, outcome: &Outcome) -> Value {
    json!({
        "command": kind.name(),
        "config": config,
        "headline": outcome.headline,
        "result": outcome.result,
    })
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Config(format!("cannot write {}: {e}", path.display()))
}

fn write_outputs(kind: CommandKind, cfg: &RunConfig, doc: &Value, outcome: &Outcome, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    let names = cfg.output.clone().unwrap_or_default();
    let json_path = out.join(names.json.unwrap_or_else(|| format!("{}.json", kind.name())));
    let text = serde_json::to_string_pretty(doc).map_err(|e| io_err(&json_path, e))?;
    std::fs::write(&json_path, text + "\n").map_err(|e| io_err(&json_path, e))?;
    if let Some(rows) = &outcome.csv {
        let csv_path = out.join(names.csv.unwrap_or_else(|| format!("{}.csv", kind.name())));
        let mut w = csv::Writer::from_path(&csv_path).map_err(|e| io_err(&csv_path, e))?;
        w.write_record(CSV_HEADER).map_err(|e| io_err(&csv_path, e))?;
        for row in rows {
            w.write_record(row).map_err(|e| io_err(&csv_path, e))?;
        }
        w.flush().map_err(|e| io_err(&csv_path, e))?;
    }
    Ok(())
}

fn execute(kind: CommandKind, args: &RunArgs) -> Result<i32> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let cfg = RunConfig::from_json(&text, &args.config.display().to_string())?;
    let raw: Value = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
    let outcome = run(kind, &cfg)?;
    let doc = report(kind, &raw, &outcome);
    write_outputs(kind, &cfg, &doc, &outcome, &args.out)?;
    println!("{}", serde_json::to_string_pretty(&doc["result"]).unwrap_or_default());
    Ok(if outcome.nonconverged { EXIT_NONCONVERGED } else { EXIT_OK })
}

/// Recomputes a report's headline. Returns `(recorded, recomputed, agree)`.
pub fn verify(path: &Path) -> Result<(Option<f64>, Option<f64>, bool)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let kind: CommandKind = serde_json::from_value(doc["command"].clone())
        .map_err(|e| Error::Config(format!("{}: bad command: {e}", path.display())))?;
    let cfg: RunConfig = serde_json::from_value(doc["config"].clone())
        .map_err(|e| Error::Config(format!("{}: bad config: {e}", path.display())))?;
    let recorded = doc["headline"].as_f64();
    let recomputed = run(kind, &cfg)?.headline;
    let agree = match (recorded, recomputed) {
        (Some(a), Some(b)) => (a - b).abs() <= VERIFY_TOLERANCE * a.abs().max(b.abs()).max(f64::MIN_POSITIVE),
        (None, None) => true,
        _ => false,
    };
    Ok((recorded, recomputed, agree))
}

fn set_threads(threads: Option<usize>) {
    if let Some(n) = threads.filter(|&n| n > 0) {
        // a second initialization only fails if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    set_threads(cli.threads);
    let result = if let Some(path) = &cli.verify {
        verify(path).map(|(recorded, recomputed, agree)| {
            let show = |v: Option<f64>| v.map_or("none".to_string(), commands::fmt_float);
            if agree {
                println!("verified: headline {} reproduced", show(recorded));
                EXIT_OK
            } else {
                eprintln!("verification failed: recorded {}, recomputed {}", show(recorded), show(recomputed));
                EXIT_NUMERIC
            }
        })
    } else if let Some(cmd) = &cli.command {
        let (kind, args) = cmd.split();
        execute(kind, args)
    } else {
        eprintln!("error: a subcommand or --verify is required (see --help)");
        return EXIT_VALIDATION;
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
