//! Almost-global tracking of a reference for the passive joint.
//!
//! The tracking error is `E = R_ref R2^T` with rate `eta = w_ref - w2`. The
//! shoulder torque cancels the coupling and gravity terms seen by the elbow so
//! that the error obeys a simple mechanical system
//!
//! ```text
//! schur * eta_dot = u,    u = -2 Kp vee(skew(P E)) + vee(skew(E^T Fd E hat(eta)))
//! ```
//!
//! whose energy `Kp psi(E) + schur eta^2 / 2` decreases, with
//! `psi(E) = tr(P (id - E))` a navigation function on SO(2).

use nalgebra::Matrix2;
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::integrator::{self, IntegratorSpec, LieState, Probe, ProbeSample, Tangent, TorqueLaw};
use crate::pendubot::{self, CoeffSet, PendubotParams, PendubotState};
use crate::so2::{self, Rotation2};

/// Reference for the passive joint, with analytic rate and acceleration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ReferenceTrajectory {
    /// `exp(phase + rate t)`.
    Rate { phase: f64, rate: f64 },
    /// `exp(offset + amplitude sin(frequency t))`.
    Sinusoid {
        offset: f64,
        amplitude: f64,
        frequency: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReferenceSample {
    pub r: Rotation2,
    pub w: f64,
    pub wdot: f64,
}

impl ReferenceTrajectory {
    pub fn constant(r: &Rotation2) -> Self {
        ReferenceTrajectory::Rate {
            phase: r.angle(),
            rate: 0.0,
        }
    }

    pub fn identity() -> Self {
        ReferenceTrajectory::Rate { phase: 0.0, rate: 0.0 }
    }

    pub fn sample(&self, t: f64) -> ReferenceSample {
        match *self {
            ReferenceTrajectory::Rate { phase, rate } => ReferenceSample {
                r: so2::exp(phase + rate * t),
                w: rate,
                wdot: 0.0,
            },
            ReferenceTrajectory::Sinusoid {
                offset,
                amplitude,
                frequency,
            } => {
                let (s, c) = (frequency * t).sin_cos();
                ReferenceSample {
                    r: so2::exp(offset + amplitude * s),
                    w: amplitude * frequency * c,
                    wdot: -amplitude * frequency * frequency * s,
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GainSet {
    pub kp: f64,
    pub fd: Matrix2<f64>,
    /// `P = diag(c1, c2)`.
    pub p: Matrix2<f64>,
}

impl GainSet {
    /// `fd = diag(fd.0, fd.1)`, `P = diag(c.0, c.1)`.
    pub fn diagonal(kp: f64, fd: (f64, f64), c: (f64, f64)) -> Result<Self> {
        let g = Self {
            kp,
            fd: Matrix2::new(fd.0, 0.0, 0.0, fd.1),
            p: Matrix2::new(c.0, 0.0, 0.0, c.1),
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kp.is_finite() && self.kp > 0.0) {
            return Err(Error::InvalidParameter(format!("kp must be > 0, got {}", self.kp)));
        }
        if self.p[(0, 1)] != 0.0 || self.p[(1, 0)] != 0.0 {
            return Err(Error::InvalidParameter("P must be diagonal".into()));
        }
        if !(self.c_sum().is_finite() && self.c_sum() != 0.0) {
            return Err(Error::InvalidParameter("c1 + c2 must be nonzero".into()));
        }
        if self.fd.trace().is_nan() || self.fd.trace() >= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "tr(Fd) must be < 0, got {}",
                self.fd.trace()
            )));
        }
        Ok(())
    }

    pub fn c_sum(&self) -> f64 {
        self.p[(0, 0)] + self.p[(1, 1)]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorState {
    pub e: Rotation2,
    pub eta: f64,
}

impl ErrorState {
    pub fn new(e: Rotation2, eta: f64) -> Self {
        Self { e, eta }
    }

    pub fn zero() -> Self {
        Self::new(Rotation2::identity(), 0.0)
    }
}

impl LieState for ErrorState {
    fn velocities(&self) -> Tangent {
        SmallVec::from_slice(&[self.eta])
    }

    fn retract(&self, increments: &[f64], velocities: &[f64]) -> Self {
        ErrorState {
            e: (self.e * so2::exp(increments[0])).renormalized(),
            eta: velocities[0],
        }
    }

    fn is_finite(&self) -> bool {
        self.e.is_finite() && self.eta.is_finite()
    }
}

pub fn error_state(state: &PendubotState, reference: &ReferenceTrajectory, t: f64) -> ErrorState {
    let s = reference.sample(t);
    ErrorState {
        e: s.r * state.r2.transpose(),
        eta: s.w - state.w2,
    }
}

/// `tr(P (id - E))`, which on SO(2) equals `(1 - e11)(c1 + c2)`.
pub fn psi(e: &Rotation2, p: &Matrix2<f64>) -> f64 {
    (p * (Matrix2::identity() - e.matrix())).trace()
}

/// `d/ds psi(E exp(s))` at `s = 0`, i.e. `(c1 + c2) sin(theta)` at `E = exp(theta)`.
pub fn psi_gradient(e: &Rotation2, p: &Matrix2<f64>) -> f64 {
    -so2::trace_pair(&(p * e.matrix()))
}

/// `d^2/ds^2 psi(E exp(s))` at `s = 0`.
pub fn psi_hessian(e: &Rotation2, p: &Matrix2<f64>) -> f64 {
    (p * e.matrix()).trace()
}

/// Zeros of `skew(P E)`: the minimum `id` and the saddle `-id`.
pub fn psi_critical_points(p: &Matrix2<f64>) -> Result<Vec<Rotation2>> {
    if p[(0, 0)] + p[(1, 1)] == 0.0 {
        return Err(Error::InvalidParameter("c1 + c2 must be nonzero".into()));
    }
    // With E = exp(theta), vee(skew(P E)) = (c1 + c2) sin(theta) / 2.
    Ok(vec![Rotation2::identity(), so2::exp(std::f64::consts::PI)])
}

pub fn closed_loop_energy(err: &ErrorState, schur: f64, gains: &GainSet) -> f64 {
    gains.kp * psi(&err.e, &gains.p) + 0.5 * schur * err.eta * err.eta
}

/// Body-frame stabilizing input for the error system.
///
/// Equals `-Kp (c1 + c2) sin(theta) + tr(Fd) eta / 2` at `E = exp(theta)`.
pub fn stabilizing_u(err: &ErrorState, gains: &GainSet) -> f64 {
    let e = err.e.matrix();
    let proportional = -2.0 * gains.kp * so2::vee(&so2::skew(&(gains.p * e)));
    let damping = so2::vee(&so2::skew(&(e.transpose() * gains.fd * e * so2::hat(err.eta))));
    proportional + damping
}

/// Below this `|K2|` the shoulder has no authority over the elbow.
pub fn coupling_threshold(params: &PendubotParams) -> f64 {
    1e-9 * 2.0 * params.i2
}

/// Shoulder torque that renders the elbow error a dissipative mechanical system.
pub fn agat_torque(
    state: &PendubotState,
    reference: &ReferenceTrajectory,
    t: f64,
    gains: &GainSet,
    params: &PendubotParams,
) -> Result<f64> {
    let c = pendubot::coefficients(state, params)?;
    let threshold = coupling_threshold(params);
    if c.k2.abs() <= threshold {
        return Err(Error::CouplingSingular { k2: c.k2, threshold });
    }
    let sample = reference.sample(t);
    let err = ErrorState {
        e: sample.r * state.r2.transpose(),
        eta: sample.w - state.w2,
    };
    let u = stabilizing_u(&err, gains);
    Ok(torque_from_coefficients(&c, state, &sample, u))
}

/// The shoulder torque of [`agat_torque`] from precomputed coefficients and
/// stabilizing input `u`.
pub fn torque_from_coefficients(c: &CoeffSet, state: &PendubotState, sample: &ReferenceSample, u: f64) -> f64 {
    let (w1, w2) = (state.w1, state.w2);
    let ratio = c.k2 / (2.0 * c.k1);
    let cancel =
        ratio * (c.alpha * (2.0 * w1 + w2) + c.gamma1) - c.alpha * w1 + c.beta * (w1 * w1 + w1 * w2) - c.gamma2;
    let feedforward = c.schur * (sample.wdot + so2::bracket(w2, sample.w));
    (so2::coadjoint(&state.r2, u) + cancel - feedforward) / ratio
}

/// `eta_dot` of the error system with inertia `schur`.
pub fn error_sms_rhs(err: &ErrorState, schur: f64, gains: &GainSet) -> f64 {
    stabilizing_u(err, gains) / schur - so2::connection_term(err.eta, err.eta, schur)
}

/// The AGAT law bundled with its reference, usable as a torque law and probe.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AgatController {
    pub reference: ReferenceTrajectory,
    pub gains: GainSet,
    pub params: PendubotParams,
}

impl AgatController {
    pub fn new(reference: ReferenceTrajectory, gains: GainSet, params: PendubotParams) -> Self {
        Self {
            reference,
            gains,
            params,
        }
    }

    pub fn closed_loop_energy(&self, state: &PendubotState, t: f64) -> f64 {
        let err = error_state(state, &self.reference, t);
        closed_loop_energy(&err, self.params.inertia(&state.r2).schur, &self.gains)
    }
}

impl TorqueLaw for AgatController {
    fn torque(&self, state: &PendubotState, t: f64) -> Result<f64> {
        agat_torque(state, &self.reference, t, &self.gains, &self.params)
    }
}

impl Probe for AgatController {
    fn sample(&self, state: &PendubotState, t: f64) -> Result<ProbeSample> {
        let r_ref = self.reference.sample(t).r;
        let error = error_state(state, &self.reference, t);
        let schur = self.params.inertia(&state.r2).schur;
        Ok(ProbeSample {
            r_ref,
            error,
            psi: psi(&error.e, &self.gains.p),
            e_cl: closed_loop_energy(&error, schur, &self.gains),
        })
    }
}

/// Inertia seen by the error system.
#[derive(Clone, Copy, Debug)]
pub enum SmsInertia<'a> {
    Constant(f64),
    /// The pendubot's effective elbow inertia at `R2 = E^T R_ref(t)`.
    Pendubot {
        params: &'a PendubotParams,
        reference: &'a ReferenceTrajectory,
    },
}

impl SmsInertia<'_> {
    pub fn at(&self, e: &Rotation2, t: f64) -> Result<f64> {
        let schur = match self {
            SmsInertia::Constant(s) => *s,
            SmsInertia::Pendubot { params, reference } => {
                let r2 = e.transpose() * reference.sample(t).r;
                params.inertia(&r2).schur
            }
        };
        if schur.is_nan() || schur <= 0.0 {
            return Err(Error::DegenerateInertia(schur));
        }
        Ok(schur)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorSample {
    pub t: f64,
    pub err: ErrorState,
    pub e_cl: f64,
}

/// Integrates the error system directly, recording every `record_stride` steps.
pub fn simulate_error_sms(
    initial: &ErrorState,
    inertia: &SmsInertia,
    gains: &GainSet,
    spec: &IntegratorSpec,
) -> Result<Vec<ErrorSample>> {
    spec.validate()?;
    let n = spec.steps();
    let mut out = Vec::with_capacity(n / spec.record_stride + 1);
    let mut err = *initial;
    for k in 0..=n {
        let t = spec.time(k);
        if k % spec.record_stride == 0 {
            let schur = inertia.at(&err.e, t).map_err(|e| e.at(t))?;
            out.push(ErrorSample {
                t,
                err,
                e_cl: closed_loop_energy(&err, schur, gains),
            });
        }
        if k == n {
            break;
        }
        err = integrator::rk4_step(&err, t, spec.dt, |s, tau| {
            let schur = inertia.at(&s.e, tau)?;
            Ok(SmallVec::from_slice(&[error_sms_rhs(s, schur, gains)]))
        })
        .map_err(|e| e.at(t))?;
    }
    Ok(out)
}
