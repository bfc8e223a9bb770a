use clap::Parser;
use dirac_cli::commands::{run, Cli, CliError};
use dirac_cli::output::write_atomic;
use std::process::ExitCode;

const THREADS_VAR: &str = "DIRACFAM_THREADS";

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(v) = std::env::var(THREADS_VAR) {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("usage: {THREADS_VAR} must be a positive integer, got '{v}'");
                return ExitCode::from(2);
            }
        }
    }
    let report = match run(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let text = report.to_json();
    match &cli.out {
        Some(p) => {
            if let Err(source) = write_atomic(p, text.as_bytes()) {
                let e = CliError::Io { path: p.clone(), source };
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
        }
        None => print!("{text}"),
    }
    if report.all_pass() {
        ExitCode::SUCCESS
    } else {
        eprintln!("failed checks: {}", report.failing().join(", "));
        ExitCode::from(1)
    }
}
