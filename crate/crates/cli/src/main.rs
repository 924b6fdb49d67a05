mod config;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use polyflow_core::Example;

use crate::config::{Action, ExperimentConfig};
use crate::run::{RunError, Status};

const EXIT_AUDIT: u8 = 1;
const EXIT_CONFIG: u8 = 2;

/// Audits, energies and gradient flows of k-harmonic maps into space forms.
#[derive(Parser)]
#[command(name = "polyflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the action named in the config.
    Run { config: PathBuf },
    /// Run the pointwise identity audit on the config's map, whatever its action.
    Audit { config: PathBuf },
    /// List built-in maps with their parameters.
    Examples {
        #[arg(long)]
        json: bool,
    },
}

fn configure_threads() -> Result<(), String> {
    let threads = match std::env::var("POLYFLOW_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| format!("POLYFLOW_THREADS must be a non-negative integer, got `{v}`"))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

fn list_examples(json: bool) {
    let schemas: Vec<_> = Example::ALL.iter().map(|e| e.schema()).collect();
    if json {
        println!("{}", serde_json::to_string_pretty(&schemas).expect("schemas serialize"));
        return;
    }
    for s in schemas {
        println!("{}: {}", s.name, s.description);
        println!("  requires: {}", s.requires);
        for p in s.params {
            println!("  {} (default {}): {}", p.name, p.default, p.description);
        }
    }
}

fn execute(path: &Path, force_audit: bool) -> ExitCode {
    let mut cfg = match ExperimentConfig::load(path) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if force_audit {
        cfg.action = Action::Audit;
        cfg.flow = None;
    }
    match run::run(&cfg) {
        Ok((summary, outputs)) => {
            println!("summary: {}", outputs.summary.display());
            if let Some(trace) = outputs.trace {
                println!("trace: {}", trace.display());
            }
            match summary.status {
                Status::Ok => ExitCode::SUCCESS,
                Status::AuditFailure => {
                    for name in &summary.failures {
                        eprintln!("check failed: {name}");
                    }
                    ExitCode::from(EXIT_AUDIT)
                }
            }
        }
        Err(e @ RunError::Setup(_)) => {
            eprintln!("error: invalid experiment: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_AUDIT)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_CONFIG);
    }
    match cli.command {
        Command::Run { config } => execute(&config, false),
        Command::Audit { config } => execute(&config, true),
        Command::Examples { json } => {
            list_examples(json);
            ExitCode::SUCCESS
        }
    }
}
