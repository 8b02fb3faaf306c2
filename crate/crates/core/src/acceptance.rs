//! The acceptance suite: eleven numerical checks of the model, the integrator
//! and both tracking laws, each reported with its measured value and
//! threshold.
//!
//! Absolute tolerances are multiplied by the `AGAT_SEED_TOL_SCALE`
//! environment variable (default 1).

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DVector, Matrix2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::agat::{self, GainSet, ReferenceTrajectory, SmsInertia};
use crate::error::{Error, Result};
use crate::integrator::{self, IntegratorSpec, TorqueLaw, TrajectoryRecord, ZeroTorque};
use crate::nlink::{self, ChainConfig, ChainState, TorusGains, TorusNavigation};
use crate::oracle;
use crate::pendubot::{self, PendubotParams, PendubotState};
use crate::scenario::{self, Scenario};
use crate::so2::{self, Rotation2};

pub const TOL_SCALE_ENV: &str = "AGAT_SEED_TOL_SCALE";

const SEED: u64 = 0x5eed_a6a7;

/// Tolerance multiplier from [`TOL_SCALE_ENV`]; non-positive or unparsable
/// values fall back to 1.
pub fn tol_scale() -> f64 {
    std::env::var(TOL_SCALE_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<f64>().ok())
        .filter(|v| v.is_finite() && *v > 0.0)
        .unwrap_or(1.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriterionReport {
    pub id: u32,
    pub name: &'static str,
    pub measured: f64,
    pub threshold: f64,
    pub passed: bool,
    pub details: Vec<String>,
}

impl CriterionReport {
    fn below(id: u32, name: &'static str, measured: f64, threshold: f64) -> Self {
        Self {
            id,
            name,
            measured,
            threshold,
            passed: measured < threshold,
            details: Vec::new(),
        }
    }

    fn detail(mut self, line: impl Into<String>) -> Self {
        self.details.push(line.into());
        self
    }
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] criterion {:>2} {}: measured {:.3e}, threshold {:.3e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.measured,
            self.threshold
        )?;
        for d in &self.details {
            write!(f, "\n       {d}")?;
        }
        Ok(())
    }
}

fn sim1() -> PendubotParams {
    scenario::find_scenario("s1").expect("built-in").params
}

fn random_state(rng: &mut ChaCha8Rng) -> PendubotState {
    PendubotState::from_angles(
        rng.random_range(-PI..PI),
        rng.random_range(-PI..PI),
        rng.random_range(-5.0..=5.0),
        rng.random_range(-5.0..=5.0),
    )
}

/// Accelerations against the joint-angle Lagrangian at random states.
pub fn euler_lagrange_oracle() -> CriterionReport {
    let p = sim1();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let s = random_state(&mut rng);
        let u1 = rng.random_range(-2.0..2.0);
        let (a1, a2) = match pendubot::accelerations(&s, u1, &p) {
            Ok(a) => a,
            Err(_) => return CriterionReport::below(1, "Euler-Lagrange oracle", f64::INFINITY, 1e-6),
        };
        let (o1, o2) = oracle::euler_lagrange_accelerations(&p, s.r1.angle(), s.r2.angle(), s.w1, s.w2, u1);
        worst = worst.max((a1 - o1).abs()).max((a2 - o2).abs());
    }
    CriterionReport::below(1, "Euler-Lagrange oracle", worst, 1e-6 * tol_scale())
        .detail("1000 random states, |w| <= 5, max abs acceleration error")
}

/// Relative drift of `K + V` on the free pendubot.
pub fn energy_conservation() -> CriterionReport {
    let s1 = scenario::find_scenario("s1").expect("built-in");
    let spec = IntegratorSpec::new(1e-3, 10.0, 1).expect("valid");
    let name = "energy conservation";
    let record = match integrator::simulate(&s1.initial, &ZeroTorque, &spec, &s1.params, None) {
        Ok(r) => r,
        Err(e) => return CriterionReport::below(2, name, f64::INFINITY, 1e-6).detail(e.to_string()),
    };
    let e0 = record.rows[0].energy;
    let drift = record
        .rows
        .iter()
        .map(|r| ((r.energy - e0) / e0).abs())
        .fold(0.0, f64::max);
    CriterionReport::below(2, name, drift, 1e-6 * tol_scale()).detail(format!(
        "potential pairing: {}, E(0) = {e0:.6}",
        s1.params.pairing.as_str()
    ))
}

fn free_endpoint(initial: &PendubotState, params: &PendubotParams, dt: f64, t_end: f64) -> Result<PendubotState> {
    let spec = IntegratorSpec::new(dt, t_end, usize::MAX)?;
    let mut s = *initial;
    for k in 0..spec.steps() {
        s = integrator::step(&s, &ZeroTorque, spec.time(k), dt, params)?;
    }
    Ok(s)
}

fn state_distance(a: &PendubotState, b: &PendubotState) -> f64 {
    let d1 = so2::log(&(a.r1.transpose() * b.r1));
    let d2 = so2::log(&(a.r2.transpose() * b.r2));
    (d1 * d1 + d2 * d2 + (a.w1 - b.w1).powi(2) + (a.w2 - b.w2).powi(2)).sqrt()
}

/// Fourth-order convergence of the endpoint error.
pub fn integrator_order() -> CriterionReport {
    let s1 = scenario::find_scenario("s1").expect("built-in");
    let name = "integrator order";
    let t_end = 2.0;
    let run = || -> Result<Vec<f64>> {
        let reference = free_endpoint(&s1.initial, &s1.params, 1e-5, t_end)?;
        [4e-3, 2e-3, 1e-3]
            .iter()
            .map(|&dt| {
                Ok(state_distance(
                    &free_endpoint(&s1.initial, &s1.params, dt, t_end)?,
                    &reference,
                ))
            })
            .collect()
    };
    let errors = match run() {
        Ok(e) => e,
        Err(e) => return CriterionReport::below(3, name, f64::INFINITY, 2.0).detail(e.to_string()),
    };
    let ratios = [errors[0] / errors[1], errors[1] / errors[2]];
    // How far each halving ratio is from 16, as a multiplicative factor.
    let factor = ratios.iter().map(|r| (r / 16.0).max(16.0 / r)).fold(0.0, f64::max);
    let mut report = CriterionReport::below(3, name, factor, 2.0);
    report.passed = factor <= 2.0;
    report.detail(format!(
        "errors at dt = 4e-3, 2e-3, 1e-3: {:.3e}, {:.3e}, {:.3e}; ratios {:.2}, {:.2}",
        errors[0], errors[1], errors[2], ratios[0], ratios[1]
    ))
}

/// Critical points and Hessians of the navigation function.
pub fn navigation_function() -> CriterionReport {
    let name = "navigation function critical points";
    let mut report = CriterionReport::below(4, name, 0.0, 1e-6 * tol_scale());
    let mut worst_hessian: f64 = 0.0;
    let mut ok = true;
    for s in scenario::builtin_scenarios() {
        let p = s.gains.p;
        let c = s.gains.c_sum();
        let f = |th: f64| agat::psi(&so2::exp(th), &p);
        let n = 10_000;
        let mut near_zero = false;
        let mut near_pi = false;
        let mut stray = 0;
        for k in 0..n {
            let th = -PI + 2.0 * PI * k as f64 / n as f64;
            if agat::psi_gradient(&so2::exp(th), &p).abs() < 1e-6 {
                let to_zero = th.abs();
                let to_pi = PI - th.abs();
                if to_zero < 1e-3 {
                    near_zero = true;
                } else if to_pi < 1e-3 {
                    near_pi = true;
                } else {
                    stray += 1;
                }
            }
        }
        let h = 1e-4;
        let second = |th: f64| (f(th + h) - 2.0 * f(th) + f(th - h)) / (h * h);
        let hess_err = (second(0.0).abs() - c.abs())
            .abs()
            .max((second(PI).abs() - c.abs()).abs());
        worst_hessian = worst_hessian.max(hess_err);
        let psi_id = agat::psi(&Rotation2::identity(), &p);
        let pass = near_zero && near_pi && stray == 0 && psi_id == 0.0;
        ok &= pass;
        report.details.push(format!(
            "{}: P = diag({}, {}), critical points near 0: {near_zero}, near pi: {near_pi}, others: {stray}, psi(id) = {psi_id}",
            s.name,
            p[(0, 0)],
            p[(1, 1)]
        ));
    }
    report.measured = worst_hessian;
    report.passed = ok && worst_hessian < report.threshold;
    report
        .details
        .push("measured: max | |Hessian| - |c1 + c2| | at id and -id".into());
    report
}

/// Outcome of one closed-loop tracking run.
#[derive(Clone, Debug, PartialEq)]
pub struct TrackingCheck {
    pub scenario: String,
    pub failure: Option<String>,
    pub e11_error_15: f64,
    pub e11_error_60: f64,
    pub max_ecl_increase: f64,
    pub max_abs_omega1: f64,
    pub final_psi: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackingThresholds {
    pub e11_15: f64,
    pub e11_60: f64,
    pub ecl_increase: f64,
    pub omega1: f64,
}

impl TrackingThresholds {
    pub fn standard() -> Self {
        let s = tol_scale();
        Self {
            e11_15: 1e-2 * s,
            e11_60: 1e-4 * s,
            ecl_increase: 1e-7 * s,
            omega1: 50.0,
        }
    }
}

impl TrackingCheck {
    pub fn passes(&self, th: &TrackingThresholds) -> bool {
        self.failure.is_none()
            && self.e11_error_15 < th.e11_15
            && self.e11_error_60 < th.e11_60
            && self.max_ecl_increase < th.ecl_increase
            && self.max_abs_omega1 < th.omega1
    }

    /// Worst ratio of measured value to threshold across the four checks.
    pub fn severity(&self, th: &TrackingThresholds) -> f64 {
        if self.failure.is_some() {
            return f64::INFINITY;
        }
        [
            self.e11_error_15 / th.e11_15,
            self.e11_error_60 / th.e11_60,
            self.max_ecl_increase / th.ecl_increase,
            self.max_abs_omega1 / th.omega1,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

impl fmt::Display for TrackingCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: |E11-1| at 15 s {:.2e}, at 60 s {:.2e}; max E_cl increase {:.2e}; max|w1| {:.2e}",
            self.scenario, self.e11_error_15, self.e11_error_60, self.max_ecl_increase, self.max_abs_omega1
        )?;
        if let Some(fail) = &self.failure {
            write!(f, "; failed: {fail}")?;
        }
        Ok(())
    }
}

fn e11_error_at(record: &TrajectoryRecord, t: f64) -> f64 {
    record
        .rows
        .iter()
        .find(|r| (r.t - t).abs() < 1e-9)
        .and_then(|r| r.probe)
        .map_or(f64::INFINITY, |p| (p.error.e.matrix()[(0, 0)] - 1.0).abs())
}

/// Runs `scenario` over 60 s at stride 1 under `law` and measures tracking.
pub fn tracking_check(scenario: &Scenario, law: &dyn TorqueLaw) -> TrackingCheck {
    let spec = IntegratorSpec::new(scenario.spec.dt, 60.0, 1).expect("valid");
    let controller = scenario.controller();
    let (record, failure) =
        integrator::simulate_partial(&scenario.initial, law, &spec, &scenario.params, Some(&controller));
    let max_ecl_increase = record
        .rows
        .windows(2)
        .filter_map(|w| Some(w[1].probe?.e_cl - w[0].probe?.e_cl))
        .fold(0.0, f64::max);
    TrackingCheck {
        scenario: scenario.name.clone(),
        failure: failure.map(|e| e.to_string()),
        e11_error_15: e11_error_at(&record, 15.0),
        e11_error_60: e11_error_at(&record, 60.0),
        max_ecl_increase,
        max_abs_omega1: record.rows.iter().map(|r| r.state.w1.abs()).fold(0.0, f64::max),
        final_psi: record.last().and_then(|r| r.probe).map_or(f64::INFINITY, |p| p.psi),
    }
}

/// Tracking of the four moving-reference scenarios.
pub fn tracking() -> CriterionReport {
    let th = TrackingThresholds::standard();
    let mut report = CriterionReport::below(5, "tracking s1, s2, s4, s5", 0.0, 1.0);
    let mut passed = true;
    for name in ["s1", "s2", "s4", "s5"] {
        let s = scenario::find_scenario(name).expect("built-in");
        let check = tracking_check(&s, &s.controller());
        report.measured = report.measured.max(check.severity(&th));
        passed &= check.passes(&th);
        report.details.push(check.to_string());
    }
    report.passed = passed;
    report
        .details
        .push("measured: worst ratio of measured value to threshold".into());
    report
}

/// Stabilization of `s3` at the identity.
pub fn stabilization() -> CriterionReport {
    let s = scenario::find_scenario("s3").expect("built-in");
    let check = tracking_check(&s, &s.controller());
    let measured = if check.failure.is_some() {
        f64::INFINITY
    } else {
        check.final_psi
    };
    CriterionReport::below(6, "stabilization s3", measured, 1e-6 * tol_scale()).detail(check.to_string())
}

/// The scenario used for the separation check: `s1` plant, gains and initial
/// state, holding the elbow at the identity.
pub fn separation_scenario() -> Scenario {
    let mut s = scenario::find_scenario("s1").expect("built-in");
    s.name = "s1-hold".into();
    s.reference = ReferenceTrajectory::identity();
    s.spec = IntegratorSpec::new(1e-3, 10.0, 1).expect("valid");
    s
}

/// Max deviation between the pendubot's error trajectory and the directly
/// integrated error system.
pub fn separation_deviation(s: &Scenario) -> Result<f64> {
    let controller = s.controller();
    let record = integrator::simulate(&s.initial, &controller, &s.spec, &s.params, Some(&controller))?;
    let start = agat::error_state(&s.initial, &s.reference, 0.0);
    let inertia = SmsInertia::Pendubot {
        params: &s.params,
        reference: &s.reference,
    };
    let direct = agat::simulate_error_sms(&start, &inertia, &s.gains, &s.spec)?;
    let mut worst: f64 = 0.0;
    for (row, d) in record.rows.iter().zip(&direct) {
        let e = row.probe.expect("probe").error;
        let angle = so2::log(&(e.e.transpose() * d.err.e)).abs();
        worst = worst.max(angle).max((e.eta - d.err.eta).abs());
    }
    Ok(worst)
}

pub fn separation_principle() -> CriterionReport {
    let name = "separation principle";
    let s = separation_scenario();
    match separation_deviation(&s) {
        Ok(d) => CriterionReport::below(7, name, d, 1e-6 * tol_scale())
            .detail("s1 plant, gains and initial state, constant identity reference, 10 s"),
        Err(e) => CriterionReport::below(7, name, f64::INFINITY, 1e-6).detail(e.to_string()),
    }
}

fn torus_for(g: &GainSet) -> (TorusNavigation, TorusGains) {
    (
        TorusNavigation { weights: vec![g.p] },
        TorusGains {
            kp: g.kp,
            fd: vec![g.fd],
        },
    )
}

/// Pendubot and two-link chain torques on the same states.
pub fn specialization() -> CriterionReport {
    let name = "pendubot as a two-link chain";
    let s1 = scenario::find_scenario("s1").expect("built-in");
    let (p, g) = (s1.params, s1.gains);
    let config = ChainConfig::pendubot(&p);
    let (nav, tg) = torus_for(&g);
    let reference = ReferenceTrajectory::Sinusoid {
        offset: 0.3,
        amplitude: 0.8,
        frequency: 1.1,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 8);
    let mut worst: f64 = 0.0;
    let mut compared = 0;
    let mut schur_worst: f64 = 0.0;
    while compared < 1000 {
        let s = random_state(&mut rng);
        let t = rng.random_range(0.0..20.0);
        let t1 = match agat::agat_torque(&s, &reference, t, &g, &p) {
            Ok(u) => u,
            Err(Error::CouplingSingular { .. }) => continue,
            Err(e) => return CriterionReport::below(8, name, f64::INFINITY, 1e-9).detail(e.to_string()),
        };
        let cs = ChainState {
            rotations: vec![s.r1, s.r2],
            velocities: vec![s.w1, s.w2],
        };
        let t2 = match nlink::chain_tracking_torque(&cs, &[reference], t, &nav, &tg, &config) {
            Ok(u) => u[0],
            Err(e) => return CriterionReport::below(8, name, f64::INFINITY, 1e-9).detail(e.to_string()),
        };
        worst = worst.max((t1 - t2).abs() / t1.abs().max(1.0));
        let blocks = nlink::chain_blocks(&cs, &config).expect("valid chain");
        let schur = nlink::schur_inertia(&blocks).expect("invertible")[(0, 0)];
        schur_worst = schur_worst.max((schur - p.inertia(&s.r2).schur).abs());
        compared += 1;
    }
    CriterionReport::below(8, name, worst.max(schur_worst), 1e-9 * tol_scale()).detail(format!(
        "1000 random states; max |u1 diff| / max(1, |u1|) = {worst:.2e}, max effective inertia diff = {schur_worst:.2e}"
    ))
}

/// The three-link chain used by criteria 9 and 10: two actuated joints
/// followed by a passive one.
pub fn three_link_chain() -> ChainConfig {
    ChainConfig::uniform_rods(vec![0.3, 0.25, 0.2], vec![0.5, 0.4, 0.5], 9.8, vec![0, 1], vec![2]).expect("valid chain")
}

/// Residual of `I q2_ddot + u - I (w_ref_dot + grad_eta eta)` under the chain law.
pub fn chain_closed_loop_residual(
    state: &ChainState,
    reference: &ReferenceTrajectory,
    t: f64,
    nav: &TorusNavigation,
    gains: &TorusGains,
    config: &ChainConfig,
) -> Result<f64> {
    let references = [*reference];
    let u1 = nlink::chain_tracking_torque(state, &references, t, nav, gains, config)?;
    let acc = nlink::chain_accelerations(state, &u1, config)?;
    let blocks = nlink::chain_blocks(state, config)?;
    let inertia = nlink::schur_inertia(&blocks)?;
    let err = nlink::torus_error(state, &references, t, nav, gains, config)?;
    let eta = DVector::from_fn(err.errors.len(), |i, _| err.errors[i].eta);
    let connection = nlink::torus_connection(&eta, &inertia)?;
    let q2dd = DVector::from_fn(config.passive.len(), |i, _| acc[config.passive[i]]);
    let residual = &inertia * q2dd + &err.u - &inertia * (&err.wdot + connection);
    Ok(residual.amax())
}

pub fn chain_closed_loop_identity() -> CriterionReport {
    let name = "three-link closed-loop identity";
    let config = three_link_chain();
    let g = GainSet::diagonal(2.3, (-1.5, -2.0), (1.0, 1.5)).expect("valid");
    let (nav, tg) = torus_for(&g);
    let reference = ReferenceTrajectory::Sinusoid {
        offset: -0.4,
        amplitude: 1.2,
        frequency: 0.7,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 9);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let angles: Vec<f64> = (0..3).map(|_| rng.random_range(-PI..PI)).collect();
        let rates: Vec<f64> = (0..3).map(|_| rng.random_range(-5.0..=5.0)).collect();
        let t = rng.random_range(0.0..20.0);
        let s = ChainState::from_angles(&angles, &rates);
        match chain_closed_loop_residual(&s, &reference, t, &nav, &tg, &config) {
            Ok(r) => worst = worst.max(r),
            Err(e) => return CriterionReport::below(9, name, f64::INFINITY, 1e-8).detail(e.to_string()),
        }
    }
    CriterionReport::below(9, name, worst, 1e-8 * tol_scale()).detail("1000 random states, m = 2, l = 1")
}

/// Outcome of the chain law on blocks with a rank-deficient coupling.
fn rank_deficient_outcome(blocks: &nlink::DynamicsBlocks, config: &ChainConfig, state: &ChainState) -> String {
    let l = config.passive.len();
    let references = vec![ReferenceTrajectory::Rate { phase: 0.5, rate: 1.0 }; l];
    let nav = TorusNavigation::new(vec![Matrix2::new(1.0, 0.0, 0.0, 1.5); l]).expect("valid");
    let gains = TorusGains::new(2.0, vec![Matrix2::new(-1.5, 0.0, 0.0, -2.0); l]).expect("valid");
    let err = match nlink::torus_error(state, &references, 0.3, &nav, &gains, config) {
        Ok(e) => e,
        Err(e) => return format!("unexpected: {e}"),
    };
    match nlink::torque_from_blocks(blocks, &err, config) {
        Err(e @ Error::RankDeficient { .. }) => format!("rank error: {e}"),
        Err(e) => format!("unexpected error: {e}"),
        Ok(u) if u.iter().all(|v| v.is_finite()) => format!("unexpected finite torque {:?}", u.as_slice()),
        Ok(_) => "non-finite torque".into(),
    }
}

pub fn strong_coupling() -> CriterionReport {
    let name = "strong inertial coupling";
    let mut details = Vec::new();

    // Three links, l = 1: M21 replaced by zero and by a vanishing multiple.
    let config = three_link_chain();
    let state = ChainState::from_angles(&[0.4, -0.9, 1.7], &[0.5, -0.2, 1.0]);
    let blocks = nlink::chain_blocks(&state, &config).expect("valid chain");
    for scale in [0.0, 1e-300] {
        let mut b = blocks.clone();
        b.m21 *= scale;
        b.m12 = b.m21.transpose();
        details.push(format!(
            "3 links, M21 scaled by {scale:e}: {}",
            rank_deficient_outcome(&b, &config, &state)
        ));
    }

    // Four links, l = 2: M21 with two identical rows has rank 1.
    let config4 = ChainConfig::uniform_rods(
        vec![0.3, 0.25, 0.2, 0.2],
        vec![0.5, 0.4, 0.5, 0.3],
        9.8,
        vec![0, 1],
        vec![2, 3],
    )
    .expect("valid chain");
    let state4 = ChainState::from_angles(&[0.4, -0.9, 1.7, 0.2], &[0.0; 4]);
    let mut b4 = nlink::chain_blocks(&state4, &config4).expect("valid chain");
    let row = b4.m21.row(0).into_owned();
    b4.m21.set_row(1, &row);
    b4.m12 = b4.m21.transpose();
    details.push(format!(
        "4 links, M21 with repeated row: {}",
        rank_deficient_outcome(&b4, &config4, &state4)
    ));

    let all = details.iter().all(|d| d.contains("rank error"));
    let mut report = CriterionReport::below(10, name, if all { 0.0 } else { 1.0 }, 0.5);
    report.details = details;
    report
        .details
        .push("measured: 0 when every case raises the rank error".into());
    report
}

/// Random start for the almost-globality probe: elbow error `phi0` uniform,
/// `eta0` uniform in `[-2, 2]`, shoulder at the `s5` initial state.
pub fn almost_global_starts(count: usize) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 11);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let phi: f64 = rng.random_range(-PI..PI);
        let eta: f64 = rng.random_range(-2.0..=2.0);
        // Skip the 1e-3 ball around the saddle (E, eta) = (-id, 0).
        let to_saddle = ((PI - phi.abs()).powi(2) + eta * eta).sqrt();
        if to_saddle > 1e-3 {
            out.push((phi, eta));
        }
    }
    out
}

/// The `s5` plant and gains holding the elbow at the identity from a given
/// error.
pub fn almost_global_scenario(phi0: f64, eta0: f64) -> Scenario {
    let mut s = scenario::find_scenario("s5").expect("built-in");
    s.name = format!("s5-hold(phi0 = {phi0:.3}, eta0 = {eta0:.3})");
    s.reference = ReferenceTrajectory::identity();
    // E = R_ref R2^T = exp(-theta2) and eta = -w2.
    s.initial.r2 = so2::exp(-phi0);
    s.initial.w2 = -eta0;
    s
}

pub fn almost_global() -> CriterionReport {
    let th = TrackingThresholds::standard();
    let mut report = CriterionReport::below(11, "almost-global convergence", 0.0, 1.0);
    let mut failures = 0;
    for (phi, eta) in almost_global_starts(50) {
        let s = almost_global_scenario(phi, eta);
        let start = agat::error_state(&s.initial, &s.reference, 0.0);
        debug_assert!((so2::log(&start.e) - phi).abs() < 1e-12 || (phi.abs() - PI).abs() < 1e-12);
        let check = tracking_check(&s, &s.controller());
        report.measured = report.measured.max(check.severity(&th));
        if !check.passes(&th) {
            failures += 1;
            report.details.push(check.to_string());
        }
    }
    report.passed = failures == 0;
    report.details.push(format!(
        "{failures} of 50 starts failed; measured: worst ratio of measured value to threshold"
    ));
    report
}

pub type Criterion = fn() -> CriterionReport;

/// The criteria of a named suite: `full` (all eleven) or `quick` (the ones
/// that take well under a second).
pub fn suite(name: &str) -> Result<Vec<Criterion>> {
    let full: Vec<Criterion> = vec![
        euler_lagrange_oracle,
        energy_conservation,
        integrator_order,
        navigation_function,
        tracking,
        stabilization,
        separation_principle,
        specialization,
        chain_closed_loop_identity,
        strong_coupling,
        almost_global,
    ];
    match name {
        "full" => Ok(full),
        "quick" => Ok(vec![
            euler_lagrange_oracle,
            energy_conservation,
            navigation_function,
            specialization,
            chain_closed_loop_identity,
            strong_coupling,
        ]),
        other => Err(Error::InvalidParameter(format!(
            "unknown suite `{other}` (expected `full` or `quick`)"
        ))),
    }
}

/// Runs every criterion of the suite, each on its own thread; reports come
/// back in suite order.
pub fn run_suite(name: &str) -> Result<Vec<CriterionReport>> {
    let criteria = suite(name)?;
    Ok(std::thread::scope(|scope| {
        let handles: Vec<_> = criteria.into_iter().map(|c| scope.spawn(c)).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("criterion panicked"))
            .collect()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_scale_defaults_to_one() {
        if std::env::var(TOL_SCALE_ENV).is_err() {
            assert_eq!(tol_scale(), 1.0);
        }
    }

    #[test]
    fn unknown_suite_is_an_error() {
        assert!(suite("nosuch").is_err());
        assert_eq!(suite("full").unwrap().len(), 11);
    }

    #[test]
    fn almost_global_starts_avoid_saddle() {
        let starts = almost_global_starts(50);
        assert_eq!(starts.len(), 50);
        assert_eq!(starts, almost_global_starts(50));
        let s = almost_global_scenario(2.0, -1.5);
        let err = agat::error_state(&s.initial, &s.reference, 0.0);
        assert!((so2::log(&err.e) - 2.0).abs() < 1e-12);
        assert_eq!(err.eta, -1.5);
    }

    #[test]
    fn report_line_format() {
        let r = CriterionReport::below(3, "x", 0.5, 1.0);
        assert!(r.to_string().starts_with("[PASS] criterion  3 x: measured"));
    }
}
