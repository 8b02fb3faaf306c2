//! The acceptance criteria, one pass/fail line each followed by its
//! measurements. Runs without the libtest harness so every line is printed;
//! positional arguments filter criteria by name.

use std::process::ExitCode;

use pendubot_agat::acceptance::{self, Criterion};

const CRITERIA: [(&str, Criterion); 11] = [
    ("criterion_01_euler_lagrange_oracle", acceptance::euler_lagrange_oracle),
    ("criterion_02_energy_conservation", acceptance::energy_conservation),
    ("criterion_03_integrator_order", acceptance::integrator_order),
    ("criterion_04_navigation_function", acceptance::navigation_function),
    ("criterion_05_tracking", acceptance::tracking),
    ("criterion_06_stabilization", acceptance::stabilization),
    ("criterion_07_separation_principle", acceptance::separation_principle),
    ("criterion_08_specialization", acceptance::specialization),
    (
        "criterion_09_chain_closed_loop_identity",
        acceptance::chain_closed_loop_identity,
    ),
    ("criterion_10_strong_coupling", acceptance::strong_coupling),
    ("criterion_11_almost_global", acceptance::almost_global),
];

fn main() -> ExitCode {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let selected: Vec<_> = CRITERIA
        .iter()
        .filter(|(name, _)| filters.is_empty() || filters.iter().any(|f| name.contains(f.as_str())))
        .collect();

    let reports: Vec<_> = std::thread::scope(|scope| {
        let handles: Vec<_> = selected.iter().map(|(_, c)| scope.spawn(c)).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("criterion panicked"))
            .collect()
    });

    let mut failed = Vec::new();
    for ((name, _), report) in selected.iter().zip(&reports) {
        println!("{report}");
        if !report.passed {
            failed.push(*name);
        }
    }
    println!(
        "\nacceptance: {} passed; {} failed{}",
        reports.len() - failed.len(),
        failed.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!(" ({})", failed.join(", "))
        }
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
