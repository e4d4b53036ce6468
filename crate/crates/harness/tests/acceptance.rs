//! One line per acceptance criterion. Criteria in `KNOWN_RED` are expected to
//! report FAIL; the target fails if any other criterion fails or if a known-red
//! criterion starts passing.

use std::process::ExitCode;

use projdiff_harness::verify::{verify_all, VerifyOptions, KNOWN_RED};

fn main() -> ExitCode {
    let (report, timings) = match verify_all(&VerifyOptions::default()) {
        Ok(r) => r,
        Err(e) => {
            println!("acceptance: verify-all did not run: {e}");
            return ExitCode::FAILURE;
        }
    };
    let mut unexpected = Vec::new();
    for c in &report.criteria {
        let red = KNOWN_RED.contains(&c.id);
        let tag = if red { "  (known red)" } else { "" };
        println!("{}{tag}", c.line());
        if c.passed == red {
            unexpected.push(c.id);
        }
    }
    for i in &report.info {
        println!("{}", i.line());
    }
    let ids: Vec<u8> = report.criteria.iter().map(|c| c.id).collect();
    if ids != (1..=9).collect::<Vec<u8>>() {
        println!("acceptance: expected criteria 1..=9, got {ids:?}");
        return ExitCode::FAILURE;
    }
    println!("acceptance: {:.1} s", timings.total);
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("acceptance: unexpected verdicts for criteria {unexpected:?}");
        ExitCode::FAILURE
    }
}
