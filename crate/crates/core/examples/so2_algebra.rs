//! Rotations, the Lie algebra maps and the navigation function on SO(2).

use std::f64::consts::PI;

use nalgebra::Matrix2;
use pendubot_agat::agat::{psi, psi_critical_points, psi_gradient, psi_hessian};
use pendubot_agat::so2::{self, Rotation2};

fn main() -> pendubot_agat::Result<()> {
    let r = so2::exp(PI / 3.0);
    println!("exp(pi/3) =\n{}", r.matrix());
    println!("log(exp(pi/3)) = {:.15}", so2::log(&r));
    println!("log(-id) = {:.15} (angles live in (-pi, pi])", so2::log(&so2::exp(PI)));

    let w = 0.75;
    println!("vee(hat({w})) = {}", so2::vee(&so2::hat(w)));
    println!(
        "Ad_R(w) = {} and [w, 2] = {} on the abelian group",
        so2::adjoint(&r, w),
        so2::bracket(w, 2.0)
    );

    // A matrix just off the group is rejected strictly, or projected back onto it.
    let rounded = Matrix2::new(0.4794, 0.87758, -0.87758, 0.4794);
    println!("strict: {:?}", Rotation2::try_from_matrix(rounded).map(|r| r.angle()));
    let projected = Rotation2::project(&rounded)?;
    println!(
        "projected angle {:.6}, defect {:.1e}",
        projected.angle(),
        projected.orthogonality_defect()
    );

    let p = Matrix2::new(1.0, 0.0, 0.0, 1.5);
    for e in psi_critical_points(&p)? {
        println!(
            "critical point at {:+.4}: psi = {:.3}, gradient = {:.1e}, hessian = {:+.3}",
            e.angle(),
            psi(&e, &p),
            psi_gradient(&e, &p),
            psi_hessian(&e, &p)
        );
    }
    Ok(())
}
