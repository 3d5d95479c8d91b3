//! `wpcn`: optimal time allocation for wireless powered communication
//! networks: closed-form sum-throughput, max-min common throughput, rate
//! profiles, rate-region sweeps, and a seeded Monte Carlo harness.

mod config;
mod manifest;
mod output;
mod run;

use std::process::ExitCode;

/// Exit codes: 0 success, 1 filesystem/other, 2 configuration error,
/// 3 solver non-convergence, 4 degenerate instance.
fn main() -> ExitCode {
    let manifest = match manifest::parse() {
        Ok(m) => m,
        Err(err) => {
            eprintln!("error: {err}");
            return ExitCode::from(2);
        }
    };
    match run::run(&manifest) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
