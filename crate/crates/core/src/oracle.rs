//! Reference computations in plain joint-angle coordinates.
//!
//! Nothing here goes through [`crate::so2`] or the coefficient functions of
//! [`crate::pendubot`]; these are the cross-checks the model is tested against.

use nalgebra::{Matrix2, Vector2};

use crate::pendubot::{PendubotParams, PotentialPairing};

/// Lagrangian `K - V` in joint angles, with `K` the unhalved kinetic form.
pub fn lagrangian(p: &PendubotParams, q: Vector2<f64>, w: Vector2<f64>) -> f64 {
    let c = p.m2 * p.l1 * p.l2 * q[1].cos();
    let k1 = p.i1 + p.i2 + p.m2 * p.l1 * p.l1 + c;
    let k2 = 2.0 * p.i2 + c;
    let k3 = p.i2;
    let kinetic = k1 * w[0] * w[0] + k2 * w[0] * w[1] + k3 * w[1] * w[1];

    let a = (0.5 * p.m1 + p.m2) * p.g * p.l1;
    let b = 0.5 * p.m2 * p.g * p.l2;
    let outer = match p.pairing {
        PotentialPairing::Product => (q[0] + q[1]).cos(),
        PotentialPairing::Relative => (q[0] - q[1]).cos(),
    };
    kinetic - (a * q[0].cos() + b * outer)
}

fn momentum(p: &PendubotParams, q: Vector2<f64>, w: Vector2<f64>) -> Vector2<f64> {
    // L is quadratic in w, so a unit central difference is exact.
    let mut out = Vector2::zeros();
    for i in 0..2 {
        let mut d = Vector2::zeros();
        d[i] = 1.0;
        out[i] = 0.5 * (lagrangian(p, q, w + d) - lagrangian(p, q, w - d));
    }
    out
}

/// Solves `d/dt dL/dw - dL/dq = (u1, 0)` for the joint accelerations.
///
/// Spatial derivatives use the five-point central stencil with step `1e-3`.
pub fn euler_lagrange_accelerations(
    p: &PendubotParams,
    theta1: f64,
    theta2: f64,
    w1: f64,
    w2: f64,
    u1: f64,
) -> (f64, f64) {
    let q = Vector2::new(theta1, theta2);
    let w = Vector2::new(w1, w2);
    let h = 1e-3;

    let mut mass = Matrix2::zeros();
    let mut dp_dq = Matrix2::zeros();
    let mut dl_dq = Vector2::zeros();
    for j in 0..2 {
        let mut d = Vector2::zeros();
        d[j] = 1.0;
        let col = momentum(p, q, w + d) - momentum(p, q, w);
        let col_back = momentum(p, q, w) - momentum(p, q, w - d);
        mass.set_column(j, &(0.5 * (col + col_back)));

        let dq = d * h;
        let at = |k: f64| q + dq * k;
        dp_dq.set_column(
            j,
            &((momentum(p, at(-2.0), w) - 8.0 * momentum(p, at(-1.0), w) + 8.0 * momentum(p, at(1.0), w)
                - momentum(p, at(2.0), w))
                / (12.0 * h)),
        );
        dl_dq[j] = (lagrangian(p, at(-2.0), w) - 8.0 * lagrangian(p, at(-1.0), w) + 8.0 * lagrangian(p, at(1.0), w)
            - lagrangian(p, at(2.0), w))
            / (12.0 * h);
    }

    let rhs = Vector2::new(u1, 0.0) + dl_dq - dp_dq * w;
    let acc = mass.lu().solve(&rhs).expect("mass matrix is positive definite");
    (acc[0], acc[1])
}

/// Midpoint-rule integral of `|v|^2 dm` over both rods.
///
/// Matches the unhalved kinetic form when the hinge inertias are those of
/// uniform rods.
pub fn rod_kinetic_energy(p: &PendubotParams, theta1: f64, theta2: f64, w1: f64, w2: f64, samples: usize) -> f64 {
    let n = samples as f64;
    let mut total = 0.0;

    let ds1 = p.l1 / n;
    for k in 0..samples {
        let s = (k as f64 + 0.5) * ds1;
        total += (w1 * s).powi(2) * p.m1 / n;
    }

    // Velocity of the point at distance s along link 2, in absolute angles.
    let a1 = theta1;
    let a2 = theta1 + theta2;
    let ds2 = p.l2 / n;
    for k in 0..samples {
        let s = (k as f64 + 0.5) * ds2;
        let vx = -p.l1 * w1 * a1.cos() - s * (w1 + w2) * a2.cos();
        let vy = -p.l1 * w1 * a1.sin() - s * (w1 + w2) * a2.sin();
        total += (vx * vx + vy * vy) * p.m2 / n;
    }
    total
}
