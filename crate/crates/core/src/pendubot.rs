//! Pendubot: a two-link planar arm actuated only at the shoulder.
//!
//! Link 1 is attached to the base by the actuated joint; link 2 hangs off the
//! tip of link 1 through a passive joint. `r1` maps the link-1 body frame to
//! the inertial frame and `r2` maps the link-2 frame to the link-1 frame, so
//! `r2` is the elbow angle. Each link is a rod along its body y-axis with its
//! center of mass at the midpoint.
//!
//! Energies follow the geometric formulation used throughout the crate:
//! the kinetic energy is the unhalved quadratic form
//!
//! ```text
//! K = K1 w1^2 + K2 w1 w2 + K3 w2^2
//! ```
//!
//! and the potential is `V = a e1^T R1 e1 + b e1^T R2 R1 e1`. The equations of
//! motion are the Euler-Lagrange equations of `K - V`, so `K + V` is conserved
//! by the unforced flow.

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::so2::{self, Rotation2};

/// Which potential pairs with the gravity torques.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PotentialPairing {
    /// `V = a e1^T R1 e1 + b e1^T R2 R1 e1` (absolute link-2 angle).
    #[default]
    Product,
    /// `V = a e1^T R1 e1 + b e1^T R1 R2^T e1`.
    Relative,
}

impl PotentialPairing {
    pub fn as_str(&self) -> &'static str {
        match self {
            PotentialPairing::Product => "product",
            PotentialPairing::Relative => "relative",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "product" => Some(PotentialPairing::Product),
            "relative" => Some(PotentialPairing::Relative),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PendubotParams {
    pub m1: f64,
    pub m2: f64,
    pub l1: f64,
    pub l2: f64,
    /// Inertia of link 1 about its hinge.
    pub i1: f64,
    /// Inertia of link 2 about its hinge.
    pub i2: f64,
    pub g: f64,
    pub pairing: PotentialPairing,
}

impl PendubotParams {
    /// Uniform rods: hinge inertias `m l^2 / 3`.
    pub fn uniform_rods(m1: f64, m2: f64, l1: f64, l2: f64, g: f64) -> Result<Self> {
        Self::new(m1, m2, l1, l2, rod_hinge_inertia(m1, l1), rod_hinge_inertia(m2, l2), g)
    }

    pub fn new(m1: f64, m2: f64, l1: f64, l2: f64, i1: f64, i2: f64, g: f64) -> Result<Self> {
        let p = Self {
            m1,
            m2,
            l1,
            l2,
            i1,
            i2,
            g,
            pairing: PotentialPairing::Product,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_pairing(mut self, pairing: PotentialPairing) -> Self {
        self.pairing = pairing;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("m1", self.m1),
            ("m2", self.m2),
            ("l1", self.l1),
            ("l2", self.l2),
            ("i1", self.i1),
            ("i2", self.i2),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.g.is_finite() && self.g >= 0.0) {
            return Err(Error::InvalidParameter(format!("g must be >= 0, got {}", self.g)));
        }
        Ok(())
    }

    /// Link-1 vector in its body frame, `(0, l1)`.
    pub fn link1(&self) -> Vector2<f64> {
        Vector2::new(0.0, self.l1)
    }

    /// Link-2 vector in its body frame, `(0, l2)`.
    pub fn link2(&self) -> Vector2<f64> {
        Vector2::new(0.0, self.l2)
    }

    /// Gravity weight of the `e1^T R1 e1` term, `(m1/2 + m2) g l1`.
    fn weight1(&self) -> f64 {
        (0.5 * self.m1 + self.m2) * self.g * self.l1
    }

    /// Gravity weight of the link-2 term, `(m2/2) g l2`.
    fn weight2(&self) -> f64 {
        0.5 * self.m2 * self.g * self.l2
    }

    /// `m2 L1^T R2 L2`, the configuration-dependent part of K1 and K2.
    fn coupling(&self, r2: &Rotation2) -> f64 {
        self.m2 * (self.link1().transpose() * r2.matrix() * self.link2())[(0, 0)]
    }

    /// Inertia coefficients, which depend on the elbow only.
    pub fn inertia(&self, r2: &Rotation2) -> InertiaCoeffs {
        let c = self.coupling(r2);
        let k1 = self.i1 + self.i2 + self.m2 * self.l1 * self.l1 + c;
        let k2 = 2.0 * self.i2 + c;
        let k3 = self.i2;
        InertiaCoeffs {
            k1,
            k2,
            k3,
            schur: 2.0 * k3 - k2 * k2 / (2.0 * k1),
        }
    }
}

pub fn rod_hinge_inertia(m: f64, l: f64) -> f64 {
    m * l * l / 3.0
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InertiaCoeffs {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    /// Effective passive inertia `2 K3 - K2^2 / (2 K1)`, the Schur complement
    /// of the mass matrix `[[2 K1, K2], [K2, 2 K3]]`.
    pub schur: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PendubotState {
    pub r1: Rotation2,
    pub r2: Rotation2,
    pub w1: f64,
    pub w2: f64,
}

impl PendubotState {
    pub fn new(r1: Rotation2, r2: Rotation2, w1: f64, w2: f64) -> Self {
        Self { r1, r2, w1, w2 }
    }

    pub fn from_angles(theta1: f64, theta2: f64, w1: f64, w2: f64) -> Self {
        Self::new(so2::exp(theta1), so2::exp(theta2), w1, w2)
    }

    pub fn is_finite(&self) -> bool {
        self.r1.is_finite() && self.r2.is_finite() && self.w1.is_finite() && self.w2.is_finite()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoeffSet {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    /// Rate of change of K1 (and K2) along the flow.
    pub alpha: f64,
    /// Elbow derivative of K1, so that `alpha = beta * w2`.
    pub beta: f64,
    /// Gravity torque on the actuated joint.
    pub gamma1: f64,
    /// Gravity torque on the passive joint.
    pub gamma2: f64,
    pub schur: f64,
}

/// Coefficients of the equations of motion at `state`.
///
/// `beta`, `gamma1` and `gamma2` are the exact elbow/shoulder derivatives of
/// the energies, written as trace pairings against `hat(1)`.
pub fn coefficients(state: &PendubotState, params: &PendubotParams) -> Result<CoeffSet> {
    if !state.is_finite() {
        return Err(Error::NonFinite);
    }
    let InertiaCoeffs { k1, k2, k3, schur } = params.inertia(&state.r2);
    if schur.is_nan() || schur <= 0.0 {
        return Err(Error::DegenerateInertia(schur));
    }

    let l1 = params.link1();
    let l2 = params.link2();
    let r1 = state.r1.matrix();
    let r2 = state.r2.matrix();

    let l1l2t: Matrix2<f64> = l1 * l2.transpose();
    let alpha = params.m2 * so2::frobenius(&l1l2t, &(r2 * so2::hat(state.w2)));
    let beta = params.m2 * so2::trace_pair(&(l1l2t.transpose() * r2));

    let e1e1t = Matrix2::new(1.0, 0.0, 0.0, 0.0);
    let (a, b) = (params.weight1(), params.weight2());
    let (gamma1, gamma2) = match params.pairing {
        PotentialPairing::Product => {
            let outer = so2::trace_pair(&(e1e1t * r1 * r2));
            (a * so2::trace_pair(&(e1e1t * r1)) + b * outer, b * outer)
        }
        PotentialPairing::Relative => {
            let rel = so2::trace_pair(&(e1e1t * r1 * r2.transpose()));
            (a * so2::trace_pair(&(e1e1t * r1)) + b * rel, -b * rel)
        }
    };

    Ok(CoeffSet {
        k1,
        k2,
        k3,
        alpha,
        beta,
        gamma1,
        gamma2,
        schur,
    })
}

pub fn kinetic_energy(state: &PendubotState, params: &PendubotParams) -> f64 {
    let c = params.inertia(&state.r2);
    let (w1, w2) = (state.w1, state.w2);
    c.k1 * w1 * w1 + c.k2 * w1 * w2 + c.k3 * w2 * w2
}

pub fn potential_energy(state: &PendubotState, params: &PendubotParams) -> f64 {
    let e1 = Vector2::new(1.0, 0.0);
    let r1 = state.r1.matrix();
    let r2 = state.r2.matrix();
    let first = params.weight1() * e1.dot(&(r1 * e1));
    let second = match params.pairing {
        PotentialPairing::Product => e1.dot(&(r2 * r1 * e1)),
        PotentialPairing::Relative => e1.dot(&(r1 * r2.transpose() * e1)),
    };
    first + params.weight2() * second
}

pub fn total_energy(state: &PendubotState, params: &PendubotParams) -> f64 {
    kinetic_energy(state, params) + potential_energy(state, params)
}

/// Body angular accelerations `(w1dot, w2dot)` under shoulder torque `u1`.
pub fn accelerations(state: &PendubotState, u1: f64, params: &PendubotParams) -> Result<(f64, f64)> {
    let c = coefficients(state, params)?;
    Ok(accelerations_from(&c, state, u1))
}

pub(crate) fn accelerations_from(c: &CoeffSet, state: &PendubotState, u1: f64) -> (f64, f64) {
    let (w1, w2) = (state.w1, state.w2);
    let drive = u1 - c.gamma1 - c.alpha * (2.0 * w1 + w2);
    let w2dot = (-(c.k2 / (2.0 * c.k1)) * drive - c.alpha * w1 + c.beta * (w1 * w1 + w1 * w2) - c.gamma2) / c.schur;
    let w1dot = (drive - c.k2 * w2dot) / (2.0 * c.k1);
    (w1dot, w2dot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn sim1() -> PendubotParams {
        PendubotParams::uniform_rods(0.25, 0.2, 0.5, 0.5, 9.8).unwrap()
    }

    #[test]
    fn alpha_vanishes_without_elbow_rate() {
        let s = PendubotState::from_angles(0.3, 0.0, 1.0, 0.0);
        assert_eq!(coefficients(&s, &sim1()).unwrap().alpha, 0.0);
    }

    #[test]
    fn inertia_coefficients_at_straight_elbow() {
        let p = sim1();
        let c = coefficients(&PendubotState::from_angles(0.0, 0.0, 0.0, 0.0), &p).unwrap();
        // i1 = 0.25 * 0.25 / 3, i2 = 0.2 * 0.25 / 3, m2 l1^2 = m2 L1^T L2 = 0.05.
        let (i1, i2) = (0.25 * 0.25 / 3.0, 0.2 * 0.25 / 3.0);
        assert_abs_diff_eq!(c.k1, i1 + i2 + 0.05 + 0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(c.k1, 0.1375, epsilon = 1e-15);
        assert_abs_diff_eq!(c.k2, 2.0 * i2 + 0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(c.k3, i2, epsilon = 0.0);
    }

    #[test]
    fn gravity_torques_vanish_upright() {
        let c = coefficients(&PendubotState::from_angles(0.0, 0.0, 0.7, -0.2), &sim1()).unwrap();
        assert_eq!(c.gamma1, 0.0);
        assert_eq!(c.gamma2, 0.0);
    }

    #[test]
    fn alpha_matches_rate_of_k1() {
        let p = sim1();
        let s = PendubotState::from_angles(0.0, FRAC_PI_2, 0.0, 1.0);
        let c = coefficients(&s, &p).unwrap();
        assert_abs_diff_eq!(c.alpha, -0.05, epsilon = 1e-15);

        // Flow R2(t) = R2 exp(t w2) by central differences.
        let h = 1e-5;
        let k1_at = |dt: f64| p.inertia(&(s.r2 * so2::exp(dt * s.w2))).k1;
        let fd = (k1_at(h) - k1_at(-h)) / (2.0 * h);
        assert_abs_diff_eq!(c.alpha, fd, epsilon = 1e-9);
    }

    #[test]
    fn kinetic_energy_examples() {
        let p = sim1();
        assert_eq!(kinetic_energy(&PendubotState::from_angles(0.4, 1.0, 0.0, 0.0), &p), 0.0);
        let s = PendubotState::from_angles(0.0, 0.0, 1.0, 0.0);
        let k1 = p.inertia(&s.r2).k1;
        assert_abs_diff_eq!(kinetic_energy(&s, &p), k1, epsilon = 1e-15);
        let quadrature = oracle::rod_kinetic_energy(&p, 0.0, 0.0, 1.0, 0.0, 4000);
        assert_abs_diff_eq!(kinetic_energy(&s, &p), quadrature, epsilon = 1e-7);
        let s = PendubotState::from_angles(0.2, 0.9, 0.0, 1.0);
        assert_abs_diff_eq!(kinetic_energy(&s, &p), p.i2, epsilon = 1e-15);
    }

    #[test]
    fn kinetic_energy_matches_rod_quadrature() {
        let p = sim1();
        for &(t1, t2, w1, w2) in &[(0.3, -1.2, 0.7, 2.0), (2.0, 2.5, -1.5, 0.4), (-0.4, PI, 3.0, -3.0)] {
            let s = PendubotState::from_angles(t1, t2, w1, w2);
            let q = oracle::rod_kinetic_energy(&p, t1, t2, w1, w2, 4000);
            assert_abs_diff_eq!(kinetic_energy(&s, &p), q, epsilon = 1e-6);
        }
    }

    #[test]
    fn potential_energy_examples() {
        let p = sim1();
        let zero_g = PendubotParams { g: 0.0, ..p };
        let s = PendubotState::from_angles(0.8, -0.3, 0.0, 0.0);
        assert_eq!(potential_energy(&s, &zero_g), 0.0);

        let up = PendubotState::from_angles(0.0, 0.0, 0.0, 0.0);
        let v_up = (0.125 + 0.2) * 9.8 * 0.5 + 0.1 * 9.8 * 0.5;
        assert_abs_diff_eq!(potential_energy(&up, &p), v_up, epsilon = 1e-14);
        assert_abs_diff_eq!(v_up, 2.0825, epsilon = 1e-14);

        let flipped = PendubotState::from_angles(PI, 0.0, 0.0, 0.0);
        assert_abs_diff_eq!(potential_energy(&flipped, &p), -v_up, epsilon = 1e-14);
    }

    #[test]
    fn rest_energy_is_potential() {
        let p = sim1();
        let s = PendubotState::from_angles(0.0, 0.0, 0.0, 0.0);
        assert_eq!(total_energy(&s, &p), potential_energy(&s, &p));
    }

    #[test]
    fn force_free_equilibrium() {
        let p = PendubotParams { g: 0.0, ..sim1() };
        let s = PendubotState::from_angles(0.4, -2.0, 0.0, 0.0);
        assert_eq!(accelerations(&s, 0.0, &p).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn accelerations_match_euler_lagrange_oracle_at_scenario_start() {
        let p = sim1();
        let r2 = Rotation2::project(&Matrix2::new(0.4794, 0.87758, -0.87758, 0.4794)).unwrap();
        let s = PendubotState::new(Rotation2::identity(), r2, -1.0, 2.0);
        let (a1, a2) = accelerations(&s, 0.0, &p).unwrap();
        let (o1, o2) = oracle::euler_lagrange_accelerations(&p, 0.0, r2.angle(), -1.0, 2.0, 0.0);
        assert_abs_diff_eq!(a1, o1, epsilon = 1e-6);
        assert_abs_diff_eq!(a2, o2, epsilon = 1e-6);
    }

    #[test]
    fn relative_pairing_matches_its_oracle() {
        let p = sim1().with_pairing(PotentialPairing::Relative);
        let s = PendubotState::from_angles(0.7, -2.1, 1.3, -0.4);
        let (a1, a2) = accelerations(&s, 0.25, &p).unwrap();
        let (o1, o2) = oracle::euler_lagrange_accelerations(&p, 0.7, -2.1, 1.3, -0.4, 0.25);
        assert_abs_diff_eq!(a1, o1, epsilon = 1e-6);
        assert_abs_diff_eq!(a2, o2, epsilon = 1e-6);
    }

    #[test]
    fn accelerations_are_affine_in_torque() {
        let p = sim1();
        let s = PendubotState::from_angles(0.3, 1.1, -0.5, 0.8);
        let c = coefficients(&s, &p).unwrap();
        let (a0, b0) = accelerations(&s, 0.0, &p).unwrap();
        for u in [0.5, -2.0, 7.0] {
            let (a, _) = accelerations(&s, u, &p).unwrap();
            let slope = (1.0 / (2.0 * c.k1)) * (1.0 + c.k2 * c.k2 / (2.0 * c.k1 * c.schur));
            assert_abs_diff_eq!((a - a0) / u, slope, epsilon = 1e-10);
        }
        let (_, b) = accelerations(&s, 1.0, &p).unwrap();
        assert_abs_diff_eq!(b - b0, -(c.k2 / (2.0 * c.k1)) / c.schur, epsilon = 1e-10);
    }

    #[test]
    fn degenerate_inertia_is_reported() {
        let p = PendubotParams { i2: 1e-300, ..sim1() };
        let s = PendubotState::from_angles(0.0, 0.0, 0.0, 0.0);
        assert!(matches!(coefficients(&s, &p), Err(Error::DegenerateInertia(_))));
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(PendubotParams::uniform_rods(-1.0, 0.2, 0.5, 0.5, 9.8).is_err());
        assert!(PendubotParams::uniform_rods(0.25, 0.2, 0.5, 0.5, -1.0).is_err());
        assert!(PendubotParams::uniform_rods(0.25, 0.2, 0.5, 0.5, 0.0).is_ok());
    }

    proptest! {
        #[test]
        fn mass_matrix_positive_definite(theta2 in -PI..PI) {
            let p = sim1();
            let c = p.inertia(&so2::exp(theta2));
            let m = Matrix2::new(2.0 * c.k1, c.k2, c.k2, 2.0 * c.k3);
            let eig = m.symmetric_eigen();
            prop_assert!(eig.eigenvalues.iter().all(|&e| e > 0.0));
            prop_assert!(c.schur > 0.0);
        }

        #[test]
        fn alpha_is_beta_times_elbow_rate(theta2 in -PI..PI, w2 in -5.0f64..5.0) {
            let s = PendubotState::from_angles(0.1, theta2, 0.0, w2);
            let c = coefficients(&s, &sim1()).unwrap();
            prop_assert!((c.alpha - c.beta * w2).abs() < 1e-14);
        }
    }
}
