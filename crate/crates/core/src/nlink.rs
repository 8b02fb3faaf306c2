//! Planar serial chains with some passive joints, and tracking of the passive
//! joints through inertial coupling.
//!
//! Joint `k` carries the relative rotation `R_k` of link `k` with respect to
//! link `k - 1`; link `p` has absolute angle `phi_p = theta_1 + ... + theta_p`.
//! Links are uniform-density rods with the center of mass at the midpoint and
//! arbitrary hinge inertia, exactly as in the pendubot, so the two-link chain
//! with the first joint actuated reproduces [`crate::pendubot`].
//!
//! The mass matrix uses the same unhalved convention as the pendubot
//! (`K = w^T M w / 2` with `M = 2 T^T D T`), and the equations of motion are
//!
//! ```text
//! M(theta) theta_ddot + h(theta, w) + Phi(theta) = tau
//! ```
//!
//! partitioned into actuated (1) and passive (2) blocks. Index sets are
//! zero-based joint indices.

use nalgebra::{DMatrix, DVector, Matrix2};
use smallvec::SmallVec;

use crate::agat::{self, ErrorState, GainSet, ReferenceTrajectory};
use crate::error::{Error, Result};
use crate::integrator::{self, IntegratorSpec, LieState, Tangent};
use crate::so2::{self, Rotation2};

/// Tolerance of the rank test on `M21`, relative to the mass-matrix scale.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct ChainConfig {
    pub masses: Vec<f64>,
    pub lengths: Vec<f64>,
    /// Hinge inertias.
    pub inertias: Vec<f64>,
    pub g: f64,
    pub actuated: Vec<usize>,
    pub passive: Vec<usize>,
}

impl ChainConfig {
    /// Uniform rods with hinge inertias `m l^2 / 3`.
    pub fn uniform_rods(
        masses: Vec<f64>,
        lengths: Vec<f64>,
        g: f64,
        actuated: Vec<usize>,
        passive: Vec<usize>,
    ) -> Result<Self> {
        let inertias = masses.iter().zip(&lengths).map(|(m, l)| m * l * l / 3.0).collect();
        let c = Self {
            masses,
            lengths,
            inertias,
            g,
            actuated,
            passive,
        };
        c.validate()?;
        Ok(c)
    }

    /// The two-link chain with the first joint actuated.
    pub fn pendubot(p: &crate::pendubot::PendubotParams) -> Self {
        Self {
            masses: vec![p.m1, p.m2],
            lengths: vec![p.l1, p.l2],
            inertias: vec![p.i1, p.i2],
            g: p.g,
            actuated: vec![0],
            passive: vec![1],
        }
    }

    pub fn n(&self) -> usize {
        self.masses.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if self.lengths.len() != n || self.inertias.len() != n {
            return Err(Error::InvalidParameter(
                "masses, lengths and inertias must have equal length".into(),
            ));
        }
        for k in 0..n {
            for (name, v) in [
                ("mass", self.masses[k]),
                ("length", self.lengths[k]),
                ("inertia", self.inertias[k]),
            ] {
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "{name} of link {k} must be > 0, got {v}"
                    )));
                }
            }
            let about_com = self.inertias[k] - self.masses[k] * self.lengths[k].powi(2) / 4.0;
            if about_com < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "hinge inertia of link {k} is below m l^2 / 4"
                )));
            }
        }
        if !(self.g.is_finite() && self.g >= 0.0) {
            return Err(Error::InvalidParameter(format!("g must be >= 0, got {}", self.g)));
        }
        let mut seen = vec![false; n];
        for &k in self.actuated.iter().chain(&self.passive) {
            if k >= n || seen[k] {
                return Err(Error::InvalidParameter(format!(
                    "joint index {k} is out of range or repeated"
                )));
            }
            seen[k] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidParameter(
                "actuated and passive joints must cover every joint".into(),
            ));
        }
        let (m, l) = (self.actuated.len(), self.passive.len());
        if !(m >= l && l >= 1) {
            return Err(Error::InvalidParameter(format!(
                "need at least as many actuated as passive joints and one passive joint, got m = {m}, l = {l}"
            )));
        }
        Ok(())
    }

    /// `r_p^(i)`: lever arm of joint `p` to the center of mass of link `i`.
    fn lever(&self, p: usize, i: usize) -> f64 {
        use std::cmp::Ordering::*;
        match p.cmp(&i) {
            Less => self.lengths[p],
            Equal => 0.5 * self.lengths[i],
            Greater => 0.0,
        }
    }
}

/// Relative joint rotations and rates, in joint order.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainState {
    pub rotations: Vec<Rotation2>,
    pub velocities: Vec<f64>,
}

impl ChainState {
    pub fn from_angles(angles: &[f64], velocities: &[f64]) -> Self {
        Self {
            rotations: angles.iter().map(|&a| so2::exp(a)).collect(),
            velocities: velocities.to_vec(),
        }
    }

    pub fn n(&self) -> usize {
        self.rotations.len()
    }

    /// Rotations and rates of the joints in `indices`.
    pub fn select(&self, indices: &[usize]) -> (Vec<Rotation2>, Vec<f64>) {
        (
            indices.iter().map(|&k| self.rotations[k]).collect(),
            indices.iter().map(|&k| self.velocities[k]).collect(),
        )
    }
}

impl LieState for ChainState {
    fn velocities(&self) -> Tangent {
        SmallVec::from_slice(&self.velocities)
    }

    fn retract(&self, increments: &[f64], velocities: &[f64]) -> Self {
        ChainState {
            rotations: self
                .rotations
                .iter()
                .zip(increments)
                .map(|(r, &d)| (*r * so2::exp(d)).renormalized())
                .collect(),
            velocities: velocities.to_vec(),
        }
    }

    fn is_finite(&self) -> bool {
        self.rotations.iter().all(Rotation2::is_finite) && self.velocities.iter().all(|v| v.is_finite())
    }
}

/// Mass matrix, quadratic-velocity and gravity torques in joint order.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainDynamics {
    pub mass: DMatrix<f64>,
    pub h: DVector<f64>,
    pub phi: DVector<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DynamicsBlocks {
    pub m11: DMatrix<f64>,
    pub m12: DMatrix<f64>,
    pub m21: DMatrix<f64>,
    pub m22: DMatrix<f64>,
    pub h1: DVector<f64>,
    pub h2: DVector<f64>,
    pub phi1: DVector<f64>,
    pub phi2: DVector<f64>,
}

fn check_state(state: &ChainState, config: &ChainConfig) -> Result<()> {
    if state.n() != config.n() || state.velocities.len() != config.n() {
        return Err(Error::InvalidParameter(format!(
            "state has {} joints, chain has {}",
            state.n(),
            config.n()
        )));
    }
    if !state.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(())
}

/// Full-chain dynamics from the planar serial-chain Lagrangian.
pub fn chain_dynamics(state: &ChainState, config: &ChainConfig) -> Result<ChainDynamics> {
    check_state(state, config)?;
    let n = config.n();

    // Absolute rotations and rates.
    let mut absolute = Vec::with_capacity(n);
    let mut acc = Rotation2::identity();
    for r in &state.rotations {
        acc = acc * *r;
        absolute.push(acc);
    }
    let phidot: Vec<f64> = state
        .velocities
        .iter()
        .scan(0.0, |sum, w| {
            *sum += w;
            Some(*sum)
        })
        .collect();

    let a = DMatrix::from_fn(n, n, |p, q| {
        (0..n)
            .map(|i| config.masses[i] * config.lever(p, i) * config.lever(q, i))
            .sum::<f64>()
    });
    // cos and sin of phi_p - phi_q.
    let rel: Vec<Vec<Rotation2>> = (0..n)
        .map(|p| (0..n).map(|q| absolute[q].transpose() * absolute[p]).collect())
        .collect();

    let mut d = DMatrix::zeros(n, n);
    let mut d_dot = DMatrix::zeros(n, n);
    for p in 0..n {
        for q in 0..n {
            d[(p, q)] = a[(p, q)] * rel[p][q].cos();
            d_dot[(p, q)] = -a[(p, q)] * rel[p][q].sin() * (phidot[p] - phidot[q]);
        }
        let about_com = config.inertias[p] - config.masses[p] * config.lengths[p].powi(2) / 4.0;
        d[(p, p)] += about_com;
    }

    let t = DMatrix::from_fn(n, n, |p, k| if k <= p { 1.0 } else { 0.0 });
    let mass = 2.0 * t.transpose() * &d * &t;
    let mass_dot = 2.0 * t.transpose() * &d_dot * &t;

    // phidot^T (dD/dphi_j) phidot = -2 phidot_j sum_q A_jq sin(phi_j - phi_q) phidot_q.
    let d_phi = DVector::from_fn(n, |j, _| {
        -2.0 * phidot[j] * (0..n).map(|q| a[(j, q)] * rel[j][q].sin() * phidot[q]).sum::<f64>()
    });
    let w = DVector::from_column_slice(&state.velocities);
    // theta_dot^T (dM/dtheta_k) theta_dot = 2 sum_j T_jk phidot^T (dD/dphi_j) phidot.
    let quad = 2.0 * t.transpose() * d_phi;
    let h = &mass_dot * &w - 0.5 * quad;

    let weights = DVector::from_fn(n, |p, _| {
        (0..n).map(|i| config.masses[i] * config.lever(p, i)).sum::<f64>()
    });
    let grad_abs = DVector::from_fn(n, |p, _| -config.g * weights[p] * absolute[p].sin());
    let phi = t.transpose() * grad_abs;

    Ok(ChainDynamics { mass, h, phi })
}

/// Potential energy `g sum_p B_p cos(phi_p)`.
pub fn chain_potential_energy(state: &ChainState, config: &ChainConfig) -> f64 {
    let n = config.n();
    let mut acc = Rotation2::identity();
    let mut v = 0.0;
    for p in 0..n {
        acc = acc * state.rotations[p];
        let b: f64 = (0..n).map(|i| config.masses[i] * config.lever(p, i)).sum();
        v += config.g * b * acc.cos();
    }
    v
}

/// Unhalved kinetic energy `w^T M w / 2`.
pub fn chain_kinetic_energy(state: &ChainState, config: &ChainConfig) -> Result<f64> {
    let dynamics = chain_dynamics(state, config)?;
    let w = DVector::from_column_slice(&state.velocities);
    Ok(0.5 * w.dot(&(&dynamics.mass * &w)))
}

fn sub_matrix(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

fn sub_vector(v: &DVector<f64>, rows: &[usize]) -> DVector<f64> {
    DVector::from_fn(rows.len(), |i, _| v[rows[i]])
}

pub fn partition(dynamics: &ChainDynamics, config: &ChainConfig) -> DynamicsBlocks {
    let (act, pas) = (&config.actuated, &config.passive);
    DynamicsBlocks {
        m11: sub_matrix(&dynamics.mass, act, act),
        m12: sub_matrix(&dynamics.mass, act, pas),
        m21: sub_matrix(&dynamics.mass, pas, act),
        m22: sub_matrix(&dynamics.mass, pas, pas),
        h1: sub_vector(&dynamics.h, act),
        h2: sub_vector(&dynamics.h, pas),
        phi1: sub_vector(&dynamics.phi, act),
        phi2: sub_vector(&dynamics.phi, pas),
    }
}

pub fn chain_blocks(state: &ChainState, config: &ChainConfig) -> Result<DynamicsBlocks> {
    Ok(partition(&chain_dynamics(state, config)?, config))
}

fn invert_m11(blocks: &DynamicsBlocks) -> Result<DMatrix<f64>> {
    blocks
        .m11
        .clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or(Error::SingularMass)
}

/// Effective passive inertia `M22 - M21 M11^-1 M12`.
pub fn schur_inertia(blocks: &DynamicsBlocks) -> Result<DMatrix<f64>> {
    let inv = invert_m11(blocks)?;
    Ok(&blocks.m22 - &blocks.m21 * inv * &blocks.m12)
}

/// Smallest singular value of `M21` and the scale it is compared against:
/// the largest of `sigma_max(M21)` and the spectral norms of `M11` and `M22`.
///
/// Measuring against the whole mass matrix lets the test see a coupling row
/// that is uniformly negligible, which a ratio within `M21` alone cannot.
fn coupling_singular_values(blocks: &DynamicsBlocks) -> (f64, f64) {
    let sv = blocks.m21.clone().svd(false, false).singular_values;
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let norm = |m: &DMatrix<f64>| {
        m.clone()
            .svd(false, false)
            .singular_values
            .iter()
            .cloned()
            .fold(0.0, f64::max)
    };
    let scale = sv
        .iter()
        .cloned()
        .fold(0.0, f64::max)
        .max(norm(&blocks.m11))
        .max(norm(&blocks.m22));
    (if sv.is_empty() { 0.0 } else { min }, scale)
}

/// Whether `M21` has rank at least `l` (strong inertial coupling).
pub fn coupling_rank_check(blocks: &DynamicsBlocks, l: usize) -> bool {
    let m21 = &blocks.m21;
    if m21.nrows() < l || m21.ncols() < l || !m21.iter().all(|v| v.is_finite()) {
        return false;
    }
    let (min, scale) = coupling_singular_values(blocks);
    scale > 0.0 && min > RANK_TOL * scale
}

#[derive(Clone, Debug, PartialEq)]
pub struct TorusNavigation {
    /// `P_i = diag(c1_i, c2_i)`, one per passive joint.
    pub weights: Vec<Matrix2<f64>>,
}

impl TorusNavigation {
    pub fn new(weights: Vec<Matrix2<f64>>) -> Result<Self> {
        for (i, p) in weights.iter().enumerate() {
            if p[(0, 1)] != 0.0 || p[(1, 0)] != 0.0 || p[(0, 0)] + p[(1, 1)] == 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "weight {i} must be diagonal with c1 + c2 != 0"
                )));
            }
        }
        Ok(Self { weights })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// `sum_i tr(P_i (id - E_i))`.
pub fn torus_psi(e: &[Rotation2], nav: &TorusNavigation) -> f64 {
    e.iter().zip(&nav.weights).map(|(e, p)| agat::psi(e, p)).sum()
}

/// Proportional gain and per-joint dissipation for the passive joints.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusGains {
    pub kp: f64,
    pub fd: Vec<Matrix2<f64>>,
}

impl TorusGains {
    pub fn new(kp: f64, fd: Vec<Matrix2<f64>>) -> Result<Self> {
        if !(kp.is_finite() && kp > 0.0) {
            return Err(Error::InvalidParameter(format!("kp must be > 0, got {kp}")));
        }
        if let Some(i) = fd.iter().position(|f| f.trace().is_nan() || f.trace() >= 0.0) {
            return Err(Error::InvalidParameter(format!("tr(Fd_{i}) must be < 0")));
        }
        Ok(Self { kp, fd })
    }
}

/// Levi-Civita term `grad_eta eta` of the torus metric `inertia`, taken
/// joint-wise: `[eta, eta] / 2 - inertia^-1 ad*_eta (inertia eta)`.
pub fn torus_connection(eta: &DVector<f64>, inertia: &DMatrix<f64>) -> Result<DVector<f64>> {
    let mu = inertia * eta;
    let co = DVector::from_fn(eta.len(), |i, _| so2::ad_star(eta[i], mu[i]));
    let solved = inertia.clone().lu().solve(&co).ok_or(Error::SingularMass)?;
    Ok(DVector::from_fn(eta.len(), |i, _| {
        0.5 * so2::bracket(eta[i], eta[i]) - solved[i]
    }))
}

/// Passive-joint errors and the joint-wise stabilizing input.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusError {
    pub errors: Vec<ErrorState>,
    pub u: DVector<f64>,
    /// Reference accelerations.
    pub wdot: DVector<f64>,
}

pub fn torus_error(
    state: &ChainState,
    references: &[ReferenceTrajectory],
    t: f64,
    nav: &TorusNavigation,
    gains: &TorusGains,
    config: &ChainConfig,
) -> Result<TorusError> {
    let l = config.passive.len();
    if references.len() != l || nav.len() != l || gains.fd.len() != l {
        return Err(Error::InvalidParameter(format!(
            "expected {l} references, weights and dissipation matrices"
        )));
    }
    let mut errors = Vec::with_capacity(l);
    let mut u = DVector::zeros(l);
    let mut wdot = DVector::zeros(l);
    for (i, &k) in config.passive.iter().enumerate() {
        let s = references[i].sample(t);
        let err = ErrorState::new(s.r * state.rotations[k].transpose(), s.w - state.velocities[k]);
        let g = GainSet {
            kp: gains.kp,
            fd: gains.fd[i],
            p: nav.weights[i],
        };
        u[i] = agat::stabilizing_u(&err, &g);
        wdot[i] = s.wdot;
        errors.push(err);
    }
    Ok(TorusError { errors, u, wdot })
}

/// Actuated torques that make the passive-joint errors follow
///
/// ```text
/// I q2_ddot = -u + I (grad_eta eta + w_ref_dot)
/// ```
///
/// with `I` the effective passive inertia, i.e.
/// `u1 = M11 M21^+ [u - I (grad_eta eta + w_ref_dot) - h2 - Phi2 + M21 M11^-1 (h1 + Phi1)]`.
/// `M21^+` is the Moore-Penrose pseudo-inverse, a right inverse when `M21`
/// has full row rank.
pub fn chain_tracking_torque(
    state: &ChainState,
    references: &[ReferenceTrajectory],
    t: f64,
    nav: &TorusNavigation,
    gains: &TorusGains,
    config: &ChainConfig,
) -> Result<DVector<f64>> {
    let blocks = chain_blocks(state, config)?;
    let err = torus_error(state, references, t, nav, gains, config)?;
    torque_from_blocks(&blocks, &err, config)
}

/// [`chain_tracking_torque`] with the blocks and errors already evaluated.
pub fn torque_from_blocks(blocks: &DynamicsBlocks, err: &TorusError, config: &ChainConfig) -> Result<DVector<f64>> {
    let l = config.passive.len();
    if !coupling_rank_check(blocks, l) {
        let (sigma_min, scale) = coupling_singular_values(blocks);
        return Err(Error::RankDeficient {
            passive: l,
            sigma_min,
            scale,
        });
    }
    let m11_inv = invert_m11(blocks)?;
    let inertia = &blocks.m22 - &blocks.m21 * &m11_inv * &blocks.m12;

    let eta = DVector::from_fn(l, |i, _| err.errors[i].eta);
    let connection = torus_connection(&eta, &inertia)?;

    let target = &err.u - &inertia * (connection + &err.wdot);
    let bracket = target - &blocks.h2 - &blocks.phi2 + &blocks.m21 * &m11_inv * (&blocks.h1 + &blocks.phi1);
    let pinv = blocks
        .m21
        .clone()
        .pseudo_inverse(0.0)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let u1 = &blocks.m11 * pinv * bracket;
    if !u1.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(u1)
}

/// Joint accelerations with `actuated_torque` applied at the actuated joints.
pub fn chain_accelerations(
    state: &ChainState,
    actuated_torque: &DVector<f64>,
    config: &ChainConfig,
) -> Result<DVector<f64>> {
    let dynamics = chain_dynamics(state, config)?;
    if actuated_torque.len() != config.actuated.len() {
        return Err(Error::InvalidParameter("one torque per actuated joint".into()));
    }
    let mut tau = DVector::zeros(config.n());
    for (i, &k) in config.actuated.iter().enumerate() {
        tau[k] = actuated_torque[i];
    }
    let rhs = tau - &dynamics.h - &dynamics.phi;
    dynamics
        .mass
        .cholesky()
        .map(|c| c.solve(&rhs))
        .ok_or(Error::SingularMass)
}

/// The chain tracking law bundled with its references and gains.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainController {
    pub references: Vec<ReferenceTrajectory>,
    pub nav: TorusNavigation,
    pub gains: TorusGains,
    pub config: ChainConfig,
}

impl ChainController {
    pub fn torque(&self, state: &ChainState, t: f64) -> Result<DVector<f64>> {
        chain_tracking_torque(state, &self.references, t, &self.nav, &self.gains, &self.config)
    }

    pub fn psi(&self, state: &ChainState, t: f64) -> Result<f64> {
        let err = torus_error(state, &self.references, t, &self.nav, &self.gains, &self.config)?;
        let e: Vec<Rotation2> = err.errors.iter().map(|e| e.e).collect();
        Ok(torus_psi(&e, &self.nav))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainRow {
    pub t: f64,
    pub state: ChainState,
}

/// Integrates the chain under `torque(state, t)` (actuated joints only).
pub fn simulate_chain<F>(
    initial: &ChainState,
    torque: F,
    spec: &IntegratorSpec,
    config: &ChainConfig,
) -> Result<Vec<ChainRow>>
where
    F: Fn(&ChainState, f64) -> Result<DVector<f64>>,
{
    config.validate()?;
    spec.validate()?;
    let n = spec.steps();
    let mut rows = Vec::with_capacity(n / spec.record_stride + 1);
    let mut state = initial.clone();
    for k in 0..=n {
        let t = spec.time(k);
        if k % spec.record_stride == 0 {
            rows.push(ChainRow {
                t,
                state: state.clone(),
            });
        }
        if k == n {
            break;
        }
        state = integrator::rk4_step(&state, t, spec.dt, |s, tau| {
            let u = torque(s, tau)?;
            Ok(chain_accelerations(s, &u, config)?.iter().copied().collect())
        })
        .map_err(|e| e.at(t))?;
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pendubot::{self, PendubotParams, PendubotState};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn sim1() -> PendubotParams {
        PendubotParams::uniform_rods(0.25, 0.2, 0.5, 0.5, 9.8).unwrap()
    }

    fn three_link() -> ChainConfig {
        ChainConfig::uniform_rods(vec![0.3, 0.25, 0.2], vec![0.5, 0.4, 0.5], 9.8, vec![0, 1], vec![2]).unwrap()
    }

    #[test]
    fn two_link_chain_matches_pendubot() {
        let p = sim1();
        let config = ChainConfig::pendubot(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let (t1, t2) = (rng.random_range(-PI..PI), rng.random_range(-PI..PI));
            let (w1, w2) = (rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
            let s = PendubotState::from_angles(t1, t2, w1, w2);
            let c = pendubot::coefficients(&s, &p).unwrap();
            let b = chain_blocks(&ChainState::from_angles(&[t1, t2], &[w1, w2]), &config).unwrap();
            assert_abs_diff_eq!(b.m11[(0, 0)], 2.0 * c.k1, epsilon = 1e-14);
            assert_abs_diff_eq!(b.m12[(0, 0)], c.k2, epsilon = 1e-14);
            assert_abs_diff_eq!(b.m21[(0, 0)], c.k2, epsilon = 1e-14);
            assert_abs_diff_eq!(b.m22[(0, 0)], 2.0 * c.k3, epsilon = 1e-14);
            assert_abs_diff_eq!(b.h1[0], c.alpha * (2.0 * w1 + w2), epsilon = 1e-12);
            assert_abs_diff_eq!(b.h2[0], c.alpha * w1 - c.beta * (w1 * w1 + w1 * w2), epsilon = 1e-12);
            assert_abs_diff_eq!(b.phi1[0], c.gamma1, epsilon = 1e-12);
            assert_abs_diff_eq!(b.phi2[0], c.gamma2, epsilon = 1e-12);
            let schur = schur_inertia(&b).unwrap();
            assert_abs_diff_eq!(schur[(0, 0)], c.schur, epsilon = 1e-13);
        }
    }

    #[test]
    fn at_rest_and_without_gravity() {
        let config = three_link();
        let b = chain_blocks(&ChainState::from_angles(&[0.3, -1.0, 2.0], &[0.0; 3]), &config).unwrap();
        assert!(b.h1.iter().chain(b.h2.iter()).all(|&v| v == 0.0));
        let flat = ChainConfig { g: 0.0, ..config };
        let b = chain_blocks(&ChainState::from_angles(&[0.3, -1.0, 2.0], &[1.0, 2.0, 3.0]), &flat).unwrap();
        assert!(b.phi1.iter().chain(b.phi2.iter()).all(|&v| v == 0.0));
    }

    #[test]
    fn mass_matrix_symmetric_positive_definite() {
        let config = three_link();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let angles: Vec<f64> = (0..3).map(|_| rng.random_range(-PI..PI)).collect();
            let d = chain_dynamics(&ChainState::from_angles(&angles, &[0.0; 3]), &config).unwrap();
            assert!((&d.mass - d.mass.transpose()).norm() < 1e-15);
            assert!(d.mass.clone().symmetric_eigen().eigenvalues.iter().all(|&e| e > 0.0));
            let b = partition(&d, &config);
            assert_eq!(b.m21, b.m12.transpose());
            let schur = schur_inertia(&b).unwrap();
            assert!(schur[(0, 0)] > 0.0);
        }
    }

    #[test]
    fn gravity_is_potential_gradient() {
        let config = three_link();
        let angles = [0.4, -0.9, 1.7];
        let d = chain_dynamics(&ChainState::from_angles(&angles, &[0.0; 3]), &config).unwrap();
        let h = 1e-6;
        for k in 0..3 {
            let mut up = angles;
            let mut down = angles;
            up[k] += h;
            down[k] -= h;
            let fd = (chain_potential_energy(&ChainState::from_angles(&up, &[0.0; 3]), &config)
                - chain_potential_energy(&ChainState::from_angles(&down, &[0.0; 3]), &config))
                / (2.0 * h);
            assert_abs_diff_eq!(d.phi[k], fd, epsilon = 1e-8);
        }
    }

    #[test]
    fn schur_of_block_diagonal_is_m22() {
        let b = DynamicsBlocks {
            m11: DMatrix::from_row_slice(2, 2, &[2.0, 0.1, 0.1, 1.0]),
            m12: DMatrix::zeros(2, 1),
            m21: DMatrix::zeros(1, 2),
            m22: DMatrix::from_row_slice(1, 1, &[0.7]),
            h1: DVector::zeros(2),
            h2: DVector::zeros(1),
            phi1: DVector::zeros(2),
            phi2: DVector::zeros(1),
        };
        assert_eq!(schur_inertia(&b).unwrap(), b.m22);
        assert!(!coupling_rank_check(&b, 1));
        let b = DynamicsBlocks {
            m21: DMatrix::from_row_slice(1, 2, &[0.0, 0.3]),
            ..b
        };
        assert!(coupling_rank_check(&b, 1));
    }

    #[test]
    fn pendubot_has_strong_coupling() {
        let config = ChainConfig::pendubot(&sim1());
        let b = chain_blocks(&ChainState::from_angles(&[0.0, 0.5], &[0.0, 0.0]), &config).unwrap();
        assert!(coupling_rank_check(&b, 1));
    }

    #[test]
    fn torus_psi_examples() {
        let id = Rotation2::identity();
        let nav = TorusNavigation::new(vec![Matrix2::identity(); 2]).unwrap();
        assert_eq!(torus_psi(&[id, id], &nav), 0.0);
        assert_abs_diff_eq!(torus_psi(&[id, so2::exp(PI)], &nav), 4.0, epsilon = 1e-15);
        let p = Matrix2::new(1.0, 0.0, 0.0, 1.5);
        let single = TorusNavigation::new(vec![p]).unwrap();
        let e = so2::exp(0.9);
        assert_eq!(torus_psi(&[e], &single), agat::psi(&e, &p));
        assert!(TorusNavigation::new(vec![Matrix2::new(1.0, 0.0, 0.0, -1.0)]).is_err());
    }

    #[test]
    fn torus_connection_vanishes() {
        let eta = DVector::from_vec(vec![1.2, -0.4]);
        let inertia = DMatrix::from_row_slice(2, 2, &[0.3, 0.05, 0.05, 0.2]);
        assert_eq!(torus_connection(&eta, &inertia).unwrap(), DVector::zeros(2));
    }

    #[test]
    fn config_validation() {
        let ok = three_link();
        assert!(ChainConfig {
            passive: vec![],
            actuated: vec![0, 1, 2],
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(ChainConfig {
            actuated: vec![0],
            passive: vec![1, 2],
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(ChainConfig {
            actuated: vec![0, 0],
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(ChainConfig {
            inertias: vec![0.01, 0.01, 0.01],
            ..ok
        }
        .validate()
        .is_err());
    }

    #[test]
    fn zero_error_constant_reference_holds_passive_joint() {
        let config = three_link();
        let angles = [0.4, -0.9, 1.7];
        let s = ChainState::from_angles(&angles, &[0.0; 3]);
        let references = [ReferenceTrajectory::constant(&so2::exp(1.7))];
        let nav = TorusNavigation::new(vec![Matrix2::new(1.0, 0.0, 0.0, 1.5)]).unwrap();
        let gains = TorusGains::new(2.0, vec![Matrix2::new(-1.5, 0.0, 0.0, -2.0)]).unwrap();
        let u1 = chain_tracking_torque(&s, &references, 0.0, &nav, &gains, &config).unwrap();
        let acc = chain_accelerations(&s, &u1, &config).unwrap();
        assert!(acc[2].abs() < 1e-12);
    }

    #[test]
    fn zero_torque_conserves_kinetic_energy_without_gravity() {
        let config = ChainConfig { g: 0.0, ..three_link() };
        let s0 = ChainState::from_angles(&[0.2, 1.0, -0.5], &[1.0, -2.0, 0.5]);
        let spec = IntegratorSpec::new(1e-3, 5.0, 5000).unwrap();
        let zero = |_: &ChainState, _: f64| Ok(DVector::zeros(2));
        let rows = simulate_chain(&s0, zero, &spec, &config).unwrap();
        let k0 = chain_kinetic_energy(&rows[0].state, &config).unwrap();
        let k1 = chain_kinetic_energy(&rows.last().unwrap().state, &config).unwrap();
        assert!(((k1 - k0) / k0).abs() < 1e-9);
    }

    #[test]
    fn rank_deficient_coupling_is_an_error() {
        let config = three_link();
        let s = ChainState::from_angles(&[0.0, 0.0, 0.0], &[0.0; 3]);
        let d = chain_dynamics(&s, &config).unwrap();
        let mut b = partition(&d, &config);
        b.m21.fill(0.0);
        b.m12.fill(0.0);
        let references = [ReferenceTrajectory::identity()];
        let nav = TorusNavigation::new(vec![Matrix2::identity()]).unwrap();
        let gains = TorusGains::new(1.0, vec![-Matrix2::identity()]).unwrap();
        let err = torus_error(&s, &references, 0.0, &nav, &gains, &config).unwrap();
        let e = torque_from_blocks(&b, &err, &config).unwrap_err();
        assert!(matches!(e, Error::RankDeficient { passive: 1, .. }));
    }

    #[test]
    fn negligible_coupling_row_is_rank_deficient() {
        let config = three_link();
        let s = ChainState::from_angles(&[0.3, 0.7, -0.2], &[0.0; 3]);
        let d = chain_dynamics(&s, &config).unwrap();
        let mut b = partition(&d, &config);
        assert!(coupling_rank_check(&b, 1));
        b.m21 *= 1e-300;
        b.m12 *= 1e-300;
        assert!(!coupling_rank_check(&b, 1));
        b.m21[(0, 0)] = f64::NAN;
        assert!(!coupling_rank_check(&b, 1));
    }

    #[test]
    fn three_link_tracking_converges_from_random_start() {
        // Started around the hanging configuration; the two actuated joints
        // carry the uncontrolled internal motion.
        let config = three_link();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let angles = [
            PI + rng.random_range(-0.5..0.5),
            rng.random_range(-0.5..0.5),
            rng.random_range(-1.5..1.5),
        ];
        let rates = [0.0, 0.0, rng.random_range(-1.0..1.0)];
        let controller = ChainController {
            references: vec![ReferenceTrajectory::identity()],
            nav: TorusNavigation::new(vec![Matrix2::new(1.0, 0.0, 0.0, 1.5)]).unwrap(),
            gains: TorusGains::new(2.3, vec![Matrix2::new(-1.5, 0.0, 0.0, -2.0)]).unwrap(),
            config: config.clone(),
        };
        let start = ChainState::from_angles(&angles, &rates);
        let spec = IntegratorSpec::new(1e-3, 60.0, 60_000).unwrap();
        let rows = simulate_chain(&start, |s, t| controller.torque(s, t), &spec, &config).unwrap();
        let last = rows.last().unwrap();
        assert_eq!(last.t, 60.0);
        assert!(controller.psi(&last.state, last.t).unwrap() < 1e-3);
    }
}
