//! Closed-loop run of a built-in scenario: `cargo run --example track_scenario -- s2`.
//!
//! Prints the elbow tracking error and closed-loop energy once per second.
//! Runs that leave the admissible region stop early with the failing time.

use pendubot_agat::scenario::find_scenario;

fn main() -> pendubot_agat::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "s3".into());
    let mut scenario = find_scenario(&name)?;
    scenario.spec.t_end = 20.0;
    scenario.spec.record_stride = 1000;

    let (record, failure) = scenario.simulate();
    println!(
        "{:>5} {:>10} {:>10} {:>12} {:>10}",
        "t", "E_11", "psi", "E_cl", "omega1"
    );
    for row in &record.rows {
        let probe = row.probe.expect("scenario runs record the controller probe");
        println!(
            "{:5.1} {:10.6} {:10.3e} {:12.6e} {:10.3}",
            row.t,
            probe.error.e.matrix()[(0, 0)],
            probe.psi,
            probe.e_cl,
            row.state.w1
        );
    }
    if let Some(e) = failure {
        println!("{name} stopped: {e}");
    }
    Ok(())
}
