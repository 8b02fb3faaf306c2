//! Fixed-step Runge-Kutta 4 on products of SO(2).
//!
//! Velocities are integrated classically while every rotation is advanced by
//! right multiplication with the exponential of its stage-weighted increment,
//! `R <- R exp(dt * sum b_i w_i)`, and re-projected onto the group. On the
//! torus this is exactly RK4 in angle coordinates, so the method keeps fourth
//! order while the rotations never leave SO(2).

use smallvec::SmallVec;

use crate::agat::ErrorState;
use crate::error::{Error, Result};
use crate::pendubot::{self, PendubotParams, PendubotState};
use crate::so2::{self, Rotation2};

/// Velocity or acceleration vector, one entry per rotation.
pub type Tangent = SmallVec<[f64; 6]>;

/// A point on `T(SO(2)^k)` with body velocities.
pub trait LieState: Sized {
    fn velocities(&self) -> Tangent;

    /// `R_i exp(increments_i)` for every rotation, with velocities replaced.
    fn retract(&self, increments: &[f64], velocities: &[f64]) -> Self;

    fn is_finite(&self) -> bool;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorSpec {
    pub dt: f64,
    pub t_end: f64,
    pub record_stride: usize,
}

impl Default for IntegratorSpec {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 60.0,
            record_stride: 10,
        }
    }
}

impl IntegratorSpec {
    pub fn new(dt: f64, t_end: f64, record_stride: usize) -> Result<Self> {
        let spec = Self {
            dt,
            t_end,
            record_stride,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= self.dt) {
            return Err(Error::InvalidParameter(format!(
                "t_end must be >= dt, got {}",
                self.t_end
            )));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidParameter("record_stride must be >= 1".into()));
        }
        Ok(())
    }

    /// Number of steps, with `t_end` rounded to the step grid.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }
}

/// One classical RK4 step. `accel(state, t)` returns the body accelerations.
pub fn rk4_step<S, F>(state: &S, t: f64, dt: f64, mut accel: F) -> Result<S>
where
    S: LieState,
    F: FnMut(&S, f64) -> Result<Tangent>,
{
    let v1 = state.velocities();
    let a1 = accel(state, t)?;

    let half = 0.5 * dt;
    let s2 = state.retract(&axpy(0.0, &v1, half, &v1), &axpy(1.0, &v1, half, &a1));
    let v2 = s2.velocities();
    let a2 = accel(&s2, t + half)?;

    let s3 = state.retract(&axpy(0.0, &v1, half, &v2), &axpy(1.0, &v1, half, &a2));
    let v3 = s3.velocities();
    let a3 = accel(&s3, t + half)?;

    let s4 = state.retract(&axpy(0.0, &v1, dt, &v3), &axpy(1.0, &v1, dt, &a3));
    let v4 = s4.velocities();
    let a4 = accel(&s4, t + dt)?;

    let w = dt / 6.0;
    let increments: Tangent = (0..v1.len())
        .map(|i| w * (v1[i] + 2.0 * v2[i] + 2.0 * v3[i] + v4[i]))
        .collect();
    let velocities: Tangent = (0..v1.len())
        .map(|i| v1[i] + w * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i]))
        .collect();

    let next = state.retract(&increments, &velocities);
    if !next.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(next)
}

/// `a * x + b * y`, elementwise.
fn axpy(a: f64, x: &[f64], b: f64, y: &[f64]) -> Tangent {
    x.iter().zip(y).map(|(xi, yi)| a * xi + b * yi).collect()
}

impl LieState for PendubotState {
    fn velocities(&self) -> Tangent {
        SmallVec::from_slice(&[self.w1, self.w2])
    }

    fn retract(&self, increments: &[f64], velocities: &[f64]) -> Self {
        PendubotState {
            r1: (self.r1 * so2::exp(increments[0])).renormalized(),
            r2: (self.r2 * so2::exp(increments[1])).renormalized(),
            w1: velocities[0],
            w2: velocities[1],
        }
    }

    fn is_finite(&self) -> bool {
        PendubotState::is_finite(self)
    }
}

/// Shoulder torque as a function of state and time.
pub trait TorqueLaw {
    fn torque(&self, state: &PendubotState, t: f64) -> Result<f64>;
}

impl<F> TorqueLaw for F
where
    F: Fn(&PendubotState, f64) -> Result<f64>,
{
    fn torque(&self, state: &PendubotState, t: f64) -> Result<f64> {
        self(state, t)
    }
}

/// The unactuated pendubot.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroTorque;

impl TorqueLaw for ZeroTorque {
    fn torque(&self, _: &PendubotState, _: f64) -> Result<f64> {
        Ok(0.0)
    }
}

/// Tracking diagnostics evaluated on a recorded state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeSample {
    pub r_ref: Rotation2,
    pub error: ErrorState,
    pub psi: f64,
    pub e_cl: f64,
}

pub trait Probe {
    fn sample(&self, state: &PendubotState, t: f64) -> Result<ProbeSample>;
}

/// One pendubot step under `law`; the torque is re-evaluated at every stage.
pub fn step(
    state: &PendubotState,
    law: &(impl TorqueLaw + ?Sized),
    t: f64,
    dt: f64,
    params: &PendubotParams,
) -> Result<PendubotState> {
    rk4_step(state, t, dt, |s, tau| {
        let u1 = law.torque(s, tau)?;
        let (a1, a2) = pendubot::accelerations(s, u1, params)?;
        Ok(SmallVec::from_slice(&[a1, a2]))
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub state: PendubotState,
    pub torque: f64,
    pub energy: f64,
    pub probe: Option<ProbeSample>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrajectoryRecord {
    pub rows: Vec<TrajectoryRow>,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&TrajectoryRow> {
        self.rows.last()
    }
}

/// Integrates over `spec` and records every `record_stride`-th step, or fails
/// with the time of the failing step attached.
pub fn simulate(
    initial: &PendubotState,
    law: &(impl TorqueLaw + ?Sized),
    spec: &IntegratorSpec,
    params: &PendubotParams,
    probe: Option<&dyn Probe>,
) -> Result<TrajectoryRecord> {
    match simulate_partial(initial, law, spec, params, probe) {
        (record, None) => Ok(record),
        (_, Some(e)) => Err(e),
    }
}

/// Like [`simulate`], but keeps the rows recorded before a failure.
pub fn simulate_partial(
    initial: &PendubotState,
    law: &(impl TorqueLaw + ?Sized),
    spec: &IntegratorSpec,
    params: &PendubotParams,
    probe: Option<&dyn Probe>,
) -> (TrajectoryRecord, Option<Error>) {
    let mut record = TrajectoryRecord::default();
    if let Err(e) = spec.validate() {
        return (record, Some(e));
    }
    let n = spec.steps();
    record.rows.reserve(n / spec.record_stride + 1);

    let mut state = *initial;
    for k in 0..=n {
        let t = spec.time(k);
        if k % spec.record_stride == 0 {
            match make_row(&state, law, t, params, probe) {
                Ok(row) => record.rows.push(row),
                Err(e) => return (record, Some(e.at(t))),
            }
        }
        if k == n {
            break;
        }
        state = match step(&state, law, t, spec.dt, params) {
            Ok(s) => s,
            Err(e) => return (record, Some(e.at(t))),
        };
    }
    (record, None)
}

fn make_row(
    state: &PendubotState,
    law: &(impl TorqueLaw + ?Sized),
    t: f64,
    params: &PendubotParams,
    probe: Option<&dyn Probe>,
) -> Result<TrajectoryRow> {
    Ok(TrajectoryRow {
        t,
        state: *state,
        torque: law.torque(state, t)?,
        energy: pendubot::total_energy(state, params),
        probe: probe.map(|p| p.sample(state, t)).transpose()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sim1() -> PendubotParams {
        PendubotParams::uniform_rods(0.25, 0.2, 0.5, 0.5, 9.8).unwrap()
    }

    fn endpoint(dt: f64, t_end: f64) -> PendubotState {
        let spec = IntegratorSpec::new(dt, t_end, usize::MAX).unwrap();
        let mut s = PendubotState::from_angles(0.4, -1.0, -1.0, 2.0);
        for k in 0..spec.steps() {
            s = step(&s, &ZeroTorque, spec.time(k), dt, &sim1()).unwrap();
        }
        s
    }

    fn distance(a: &PendubotState, b: &PendubotState) -> f64 {
        let d1 = so2::log(&(a.r1.transpose() * b.r1));
        let d2 = so2::log(&(a.r2.transpose() * b.r2));
        (d1 * d1 + d2 * d2 + (a.w1 - b.w1).powi(2) + (a.w2 - b.w2).powi(2)).sqrt()
    }

    #[test]
    fn force_free_rest_is_a_fixed_point() {
        let p = PendubotParams { g: 0.0, ..sim1() };
        let s = PendubotState::from_angles(0.3, 1.2, 0.0, 0.0);
        let next = step(&s, &ZeroTorque, 0.0, 1e-3, &p).unwrap();
        assert_eq!(next, s);
    }

    #[test]
    fn fourth_order_convergence() {
        let reference = endpoint(1e-5, 1.0);
        let e1 = distance(&endpoint(1e-3, 1.0), &reference);
        let e2 = distance(&endpoint(5e-4, 1.0), &reference);
        let ratio = e1 / e2;
        assert!((12.0..20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn spec_validation() {
        assert!(IntegratorSpec::new(0.0, 1.0, 1).is_err());
        assert!(IntegratorSpec::new(1e-3, 1e-4, 1).is_err());
        assert!(IntegratorSpec::new(1e-3, 1.0, 0).is_err());
        assert_eq!(IntegratorSpec::new(1e-3, 30.0, 1).unwrap().steps(), 30_000);
    }

    #[test]
    fn single_stride_records_initial_row() {
        let spec = IntegratorSpec::new(1e-3, 1e-3, 2).unwrap();
        let s = PendubotState::from_angles(0.1, 0.2, 0.0, 0.0);
        let rec = simulate(&s, &ZeroTorque, &spec, &sim1(), None).unwrap();
        assert_eq!(rec.len(), 1);
        assert_eq!(rec.rows[0].state, s);
    }

    #[test]
    fn row_count_and_times() {
        let spec = IntegratorSpec::new(1e-3, 2.0, 1).unwrap();
        let s = PendubotState::from_angles(0.1, 0.2, 0.0, 0.0);
        let rec = simulate(&s, &ZeroTorque, &spec, &sim1(), None).unwrap();
        assert_eq!(rec.len(), 2001);
        assert!(rec.rows.windows(2).all(|w| w[1].t > w[0].t));
        assert_eq!(rec.last().unwrap().t, 2.0);
    }

    #[test]
    fn deterministic() {
        let spec = IntegratorSpec::new(1e-3, 1.0, 7).unwrap();
        let s = PendubotState::from_angles(0.4, -1.0, -1.0, 2.0);
        let a = simulate(&s, &ZeroTorque, &spec, &sim1(), None).unwrap();
        let b = simulate(&s, &ZeroTorque, &spec, &sim1(), None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn failure_carries_time() {
        let law = |_: &PendubotState, t: f64| {
            if t >= 0.5 {
                Err(Error::SingularMass)
            } else {
                Ok(0.0)
            }
        };
        let spec = IntegratorSpec::new(0.1, 1.0, 1).unwrap();
        let s = PendubotState::from_angles(0.0, 0.0, 0.0, 0.0);
        let (rec, err) = simulate_partial(&s, &law, &spec, &sim1(), None);
        let err = err.unwrap();
        assert!(matches!(err, Error::AtTime { .. }));
        assert!(matches!(err.root(), Error::SingularMass));
        assert_eq!(rec.len(), 5);
    }

    #[test]
    fn non_finite_state_is_reported() {
        let law = |_: &PendubotState, _: f64| Ok(f64::NAN);
        let s = PendubotState::from_angles(0.0, 0.0, 0.0, 0.0);
        let err = step(&s, &law, 0.0, 1e-3, &sim1()).unwrap_err();
        assert!(matches!(err, Error::NonFinite));
    }
}
