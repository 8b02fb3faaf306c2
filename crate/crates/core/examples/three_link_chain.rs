//! Three-link chain with two actuated joints steering the passive third joint.

use std::f64::consts::PI;

use nalgebra::Matrix2;
use pendubot_agat::nlink::{self, ChainConfig, ChainController, ChainState, TorusGains, TorusNavigation};
use pendubot_agat::{IntegratorSpec, ReferenceTrajectory};

fn main() -> pendubot_agat::Result<()> {
    let config = ChainConfig::uniform_rods(vec![0.3, 0.25, 0.2], vec![0.5, 0.4, 0.5], 9.8, vec![0, 1], vec![2])?;
    let controller = ChainController {
        references: vec![ReferenceTrajectory::identity()],
        nav: TorusNavigation::new(vec![Matrix2::new(1.0, 0.0, 0.0, 1.5)])?,
        gains: TorusGains::new(2.3, vec![Matrix2::new(-1.5, 0.0, 0.0, -2.0)])?,
        config: config.clone(),
    };

    let start = ChainState::from_angles(&[PI - 0.2, 0.3, 1.2], &[0.0, 0.0, 0.5]);
    let blocks = nlink::chain_blocks(&start, &config)?;
    println!("coupling block M21 = {}", blocks.m21);
    println!("strong coupling holds: {}", nlink::coupling_rank_check(&blocks, 1));

    let spec = IntegratorSpec::new(1e-3, 40.0, 4000)?;
    let rows = nlink::simulate_chain(&start, |s, t| controller.torque(s, t), &spec, &config)?;
    for row in &rows {
        let angles: Vec<String> = row
            .state
            .rotations
            .iter()
            .map(|r| format!("{:+.4}", r.angle()))
            .collect();
        println!(
            "t = {:4.0}  psi = {:.3e}  angles = [{}]",
            row.t,
            controller.psi(&row.state, row.t)?,
            angles.join(", ")
        );
    }

    // Zeroing the coupling makes the passive joint unreachable.
    let mut cut = blocks.clone();
    cut.m21.fill(0.0);
    cut.m12.fill(0.0);
    let err = nlink::torus_error(
        &start,
        &controller.references,
        0.0,
        &controller.nav,
        &controller.gains,
        &config,
    )?;
    match nlink::torque_from_blocks(&cut, &err, &config) {
        Ok(u) => println!("unexpected torque {u}"),
        Err(e) => println!("decoupled chain: {e}"),
    }
    Ok(())
}
