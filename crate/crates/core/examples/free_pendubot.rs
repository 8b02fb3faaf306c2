//! The unforced pendubot: energy is conserved and the rotations stay on the group.

use pendubot_agat::integrator::{self, ZeroTorque};
use pendubot_agat::{IntegratorSpec, PendubotParams, PendubotState};

fn main() -> pendubot_agat::Result<()> {
    let params = PendubotParams::uniform_rods(0.25, 0.2, 0.5, 0.5, 9.8)?;
    let start = PendubotState::from_angles(0.1, 0.5, -1.0, 2.0);
    let spec = IntegratorSpec::new(1e-3, 20.0, 2000)?;
    let record = integrator::simulate(&start, &ZeroTorque, &spec, &params, None)?;

    let e0 = record.rows[0].energy;
    println!(
        "{:>6} {:>10} {:>10} {:>12} {:>10}",
        "t", "theta1", "theta2", "energy", "drift"
    );
    for row in &record.rows {
        println!(
            "{:6.1} {:10.4} {:10.4} {:12.8} {:10.2e}",
            row.t,
            row.state.r1.angle(),
            row.state.r2.angle(),
            row.energy,
            (row.energy - e0) / e0
        );
    }
    let last = record.last().expect("initial row is always recorded");
    println!(
        "orthogonality defect at t = {}: {:.1e}",
        last.t,
        last.state
            .r1
            .orthogonality_defect()
            .max(last.state.r2.orthogonality_defect())
    );
    Ok(())
}
