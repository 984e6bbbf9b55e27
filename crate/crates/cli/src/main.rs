use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use isolab_cli::output::write_reports;
use isolab_cli::{execute, exit_code, first_problem, parse_with_overrides, Command, RunError};

const USAGE_ERROR: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "isolab", version, about = "Periodic NLS and Zakharov-Shabat spectral experiments")]
struct Cli {
    /// spectrum, evolve, conserve, gradcheck, involution, commute, basis, neighbor, dgscan or recur
    command: String,
    /// Config file of `key = value` lines
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir`
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override one setting, e.g. `--set grid_n=64`
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn usage(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("isolab: {message}");
    ExitCode::from(USAGE_ERROR)
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("ISOLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("ISOLAB_THREADS must be a positive integer, got '{raw}'"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(USAGE_ERROR);
        }
    };
    if let Err(m) = configure_threads() {
        return usage(m);
    }
    let command: Command = match cli.command.parse() {
        Ok(c) => c,
        Err(m) => return usage(m),
    };
    let text = match &cli.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => return usage(format!("{}: {e}", path.display())),
        },
        None => String::new(),
    };
    let mut cfg = match parse_with_overrides(&text, &cli.overrides) {
        Ok(c) => c,
        Err(e) => return usage(e),
    };
    if let Some(out) = cli.out {
        cfg.output_dir = out;
    }
    let reports = match execute(command, &cfg) {
        Ok(r) => r,
        Err(e @ RunError::Usage(_)) => return usage(e),
        Err(e @ RunError::Numerical(_)) => {
            eprintln!("isolab: {e}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = write_reports(&cfg.output_dir, command, &reports) {
        return usage(format!("cannot write to {}: {e}", cfg.output_dir.display()));
    }
    let code = exit_code(&reports);
    if let Some(problem) = first_problem(&reports) {
        eprintln!("{problem}");
    }
    ExitCode::from(code as u8)
}
