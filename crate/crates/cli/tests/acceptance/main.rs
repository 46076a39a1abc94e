//! Acceptance suite: one line per criterion, `PASS` or `FAIL`, with the
//! measured quantities. Exits nonzero when any criterion fails.
//!
//! Run with `cargo test -p jlcm-cli --test acceptance`, or a subset with
//! `cargo test -p jlcm-cli --test acceptance -- 1 4 10`.

mod calibration;
mod conjugate;
mod covariance;
mod hazard;
mod oracles;
mod recovery;
mod reproducibility;
mod simulation;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

/// Result of one criterion: pass flag plus a one-line account.
pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    pub fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

type Criterion = (usize, &'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 10] = [
    (1, "covariance correctness", covariance::criterion),
    (2, "hazard machinery", hazard::criterion),
    (3, "conjugate samplers", conjugate::criterion),
    (4, "adaptive Metropolis calibration", calibration::criterion),
    (5, "prior recovery", calibration::prior_recovery),
    (6, "simulation fidelity", simulation::criterion),
    (7, "end-to-end recovery", recovery::criterion),
    (8, "prediction contracts", recovery::prediction_criterion),
    (9, "AUC sanity and direction", recovery::auc_criterion),
    (10, "workflow reproducibility", reproducibility::criterion),
];

fn main() -> ExitCode {
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failures = 0;
    for (id, name, run) in CRITERIA {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Outcome::new(false, format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {name}: {verdict} ({}; {secs:.1} s)", outcome.detail);
        failures += usize::from(!outcome.pass);
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criterion(s) failed");
        ExitCode::FAILURE
    }
}
