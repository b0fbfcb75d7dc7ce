mod commands;
mod config;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use pauliprop::Error;
use serde_json::{json, Value};

use commands::Report;
use config::RunConfig;

const VERSION: &str = env!("PAULIPROP_VERSION");

#[derive(Parser, Debug)]
#[command(name = "pauliprop", version = VERSION, about = "Noisy-circuit Pauli propagation")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Write results here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads; defaults to the number of CPUs.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Overrides truncation.max_terms.
    #[arg(long, global = true)]
    max_terms: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Normal form and contraction coefficients of a channel.
    ChannelInfo,
    /// Truncated backpropagation of one circuit.
    Propagate,
    /// Monte Carlo estimate of a truncation functional.
    Estimate,
    /// Dense density-matrix reference.
    Oracle,
    /// Truncation profile over a grid of noise strengths.
    Sweep,
    /// Trotterized time evolution.
    Dynamics,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

/// Failure with its process exit code.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::TooLarge { .. } | Error::TermLimit(_) => 3,
        Error::Numeric(_) => 4,
        _ => 2,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self {
            code: exit_code(&e),
            err: e.into(),
        }
    }
}

fn config_failure(err: anyhow::Error) -> Failure {
    Failure { code: 2, err }
}

fn other_failure(err: anyhow::Error) -> Failure {
    Failure { code: 1, err }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))
                .map_err(config_failure)?;
            RunConfig::parse(&text)
                .with_context(|| format!("parsing {}", path.display()))
                .map_err(config_failure)?
        }
        None => RunConfig::default(),
    };
    cfg.resolve_seed(cli.seed);
    if let Some(m) = cli.max_terms {
        cfg.truncation.max_terms = Some(m);
    }
    if cfg.circuit.is_some() {
        let n = cfg.template()?.num_qubits();
        cfg.resolve(n)?;
    }
    Ok(cfg)
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn render(format: Format, cfg: &RunConfig, report: &Report) -> anyhow::Result<Vec<u8>> {
    let config = serde_json::to_value(cfg)?;
    match format {
        Format::Json => {
            let records = report.records();
            let result = if !report.series && records.len() == 1 {
                records.into_iter().next().unwrap()
            } else {
                Value::Array(records)
            };
            let doc = json!({
                "version": VERSION,
                "seed": cfg.seed,
                "config": config,
                "result": result,
            });
            let mut out = serde_json::to_vec_pretty(&doc)?;
            out.push(b'\n');
            Ok(out)
        }
        Format::Csv => {
            let mut out = Vec::new();
            writeln!(out, "# version: {VERSION}")?;
            writeln!(out, "# seed: {}", cfg.seed)?;
            writeln!(out, "# config: {}", serde_json::to_string(&config)?)?;
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(&report.columns)?;
            for row in &report.rows {
                w.write_record(row.iter().map(cell))?;
            }
            w.flush()?;
            drop(w);
            Ok(out)
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("configuring the thread pool")
            .map_err(config_failure)?;
    }
    let cfg = load_config(cli)?;
    let seed = cfg.seed;
    log::info!("running {:?} with seed {seed}", cli.command);
    let report = match cli.command {
        Command::ChannelInfo => commands::channel_info(&cfg),
        Command::Propagate => commands::propagate(&cfg, seed),
        Command::Estimate => commands::estimate_cmd(&cfg, seed),
        Command::Oracle => commands::oracle(&cfg, seed),
        Command::Sweep => commands::sweep(&cfg, seed),
        Command::Dynamics => commands::dynamics(&cfg),
    }?;
    let format = cli.format.unwrap_or(match cli.command {
        Command::Sweep | Command::Dynamics => Format::Csv,
        _ => Format::Json,
    });
    let bytes = render(format, &cfg, &report).map_err(other_failure)?;
    match &cli.out {
        Some(path) => fs::write(path, bytes)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(other_failure)?,
        None => std::io::stdout()
            .write_all(&bytes)
            .context("writing stdout")
            .map_err(other_failure)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}
