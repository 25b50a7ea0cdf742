//! Runs every acceptance check with its time limit and prints one line each.

use std::process::ExitCode;
use std::time::Duration;

use gkloc::cli::verify::{self, Status};

const LIMITS_S: [u64; 10] = [30, 600, 60, 60, 120, 600, 900, 1800, 300, 600];

fn main() -> ExitCode {
    let names = verify::check_names();
    let report = verify::run(&names, 0);
    let mut ok = true;
    for (check, limit) in report.checks.iter().zip(LIMITS_S) {
        let in_time = check.wall <= Duration::from_secs(limit);
        let pass = check.status == Status::Pass && in_time;
        ok &= pass;
        println!(
            "{} {} ({} cases, {:.1}s of {limit}s)",
            if pass { "PASS" } else { "FAIL" },
            check.name,
            check.cases,
            check.wall.as_secs_f64()
        );
        for m in &check.mismatches {
            println!("    {}: {} != {}", m.case, m.lhs, m.rhs);
        }
        if check.status == Status::SkippedBudget {
            println!("    over the counting budget: {}", check.notes.join("; "));
        }
        if !in_time {
            println!("    exceeded the time limit");
        }
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
