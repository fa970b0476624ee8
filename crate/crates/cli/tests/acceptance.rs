//! Full-budget acceptance suite. Prints one line per criterion and exits
//! non-zero when a criterion fails that is not on the known-failure list.
//!
//! `GRSK_ACCEPTANCE=quick` runs the quick budget instead.

use std::process::ExitCode;
use std::time::Instant;

use grsk_cli::acceptance::{criteria, run_one, summary_line, Budget};

const SEED: u64 = 20_240_611;

/// Criteria that fail at the stated tolerance for reasons recorded here.
/// They are still run and reported; a pass is reported as a pass.
const KNOWN_FAILURES: &[(usize, &str)] = &[
    (
        11,
        "finite-size bias of (1/n) log Z_n at n = 2000 is about 0.03, above the 0.01 allowance",
    ),
    (
        12,
        "the weight coupling adds a bias of order eps per cell along each path, about 0.29 at eps = 0.05",
    ),
];

fn main() -> ExitCode {
    let budget = match std::env::var("GRSK_ACCEPTANCE").as_deref() {
        Ok("quick") => Budget::Quick,
        _ => Budget::Full,
    };
    println!("acceptance suite, budget {budget:?}, seed {SEED}");
    let mut unexpected = Vec::new();
    for id in criteria(budget) {
        let start = Instant::now();
        let r = run_one(id, budget, SEED);
        let secs = start.elapsed().as_secs_f64();
        let known = KNOWN_FAILURES.iter().find(|(k, _)| *k == id).map(|(_, why)| *why);
        let mut line = summary_line(&r);
        match (r.pass, known) {
            (true, _) => {}
            (false, Some(why)) => line = line.replacen("[FAIL]", &format!("[FAIL (known: {why})]"), 1),
            (false, None) => unexpected.push(id),
        }
        println!("{line} ({secs:.1}s)");
    }
    if unexpected.is_empty() {
        println!("acceptance: no unexpected failures");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: unexpected failures {unexpected:?}");
        ExitCode::FAILURE
    }
}
