use clap::Parser;
use dirac_cli::checks::{criterion_name, CRITERIA};
use dirac_cli::commands::{run, Cli};
use dirac_cli::report::Status;
use std::process::Command;

/// Wall-clock budgets in seconds, where the criterion names one.
fn budget(id: u8) -> Option<f64> {
    match id {
        1 => Some(5.0),
        3 => Some(30.0),
        7 => Some(300.0),
        _ => None,
    }
}

fn main() {
    let cli = Cli::parse_from(["dirac", "--timings", "check", "--suite", "all", "--seed", "7"]);
    let timed = run(&cli).expect("suite runs");
    let mut failures = vec![];
    for (id, rec) in CRITERIA.iter().map(|c| c.0).zip(&timed.checks) {
        if id == 11 {
            continue;
        }
        let secs = rec.runtime_ms.unwrap_or(0.0) / 1e3;
        let in_budget = budget(id).is_none_or(|b| secs < b);
        let ok = rec.status == Status::Pass && in_budget;
        println!(
            "criterion {id:>2} {:<38} {}  max_dev={:.2e} time={secs:.2}s{}",
            rec.name,
            if ok { "PASS" } else { "FAIL" },
            rec.max_deviation,
            if rec.detail.is_empty() { String::new() } else { format!("  [{}]", rec.detail) }
        );
        if !ok {
            failures.push(id);
        }
    }

    // Same seed, separate process, no timings: the report must match byte for byte.
    let mut untimed = timed.clone();
    for c in &mut untimed.checks {
        c.runtime_ms = None;
    }
    let out = Command::new(env!("CARGO_BIN_EXE_dirac"))
        .args(["check", "--suite", "all", "--seed", "7"])
        .output()
        .expect("binary runs");
    let identical = out.stdout == untimed.to_json().as_bytes();
    let inner = timed.checks.iter().find(|c| c.name == criterion_name(11)).is_some_and(|c| c.status == Status::Pass);
    let ok11 = identical && inner && out.status.success();
    println!("criterion 11 {:<38} {}  [{} report bytes]", criterion_name(11), if ok11 { "PASS" } else { "FAIL" }, out.stdout.len());
    if !ok11 {
        failures.push(11);
    }
    if !failures.is_empty() {
        eprintln!("failing criteria: {failures:?}");
        std::process::exit(1);
    }
    println!("acceptance: all criteria pass");
}
