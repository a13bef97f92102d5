//! Acceptance criteria 1–10, one PASS/FAIL line each.
//!
//! A line reads FAIL when a check fails or the criterion overruns its
//! runtime budget. The process fails only on failed checks: runtime depends
//! on the machine, the numbers do not.

use std::process::ExitCode;
use std::time::Instant;

use riccilab_cli::suites::{run_criterion, Lab, SUITES};

fn main() -> ExitCode {
    // Under `cargo test` the harness flags are passed through; a listing
    // request must not start an hour of numerics.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    let lab = Lab::new();
    let start = Instant::now();
    let mut broken = Vec::new();
    for (criterion, name) in SUITES {
        match run_criterion(criterion, &lab) {
            Ok(o) => {
                println!("{}", o.line());
                for d in &o.details {
                    println!("    {d}");
                }
                if !o.checks_pass {
                    broken.push(name);
                }
            }
            Err(e) => {
                println!("[FAIL] criterion {criterion:>2} {name:<20} error: {e}");
                broken.push(name);
            }
        }
    }
    println!("acceptance finished in {:.1} s", start.elapsed().as_secs_f64());
    if broken.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed checks in: {}", broken.join(", "));
        ExitCode::FAILURE
    }
}
