//! Built-in tracking scenarios, the flat `section.key = value` config format,
//! and the CSV runner behind the command line.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Matrix2;

use crate::agat::{AgatController, GainSet, ReferenceTrajectory};
use crate::error::{Error, Result};
use crate::integrator::{self, IntegratorSpec, TrajectoryRecord};
use crate::pendubot::{PendubotParams, PendubotState, PotentialPairing};
use crate::so2::{self, Rotation2};

/// CSV header written by [`run`].
pub const CSV_HEADER: [&str; 12] = [
    "t", "R2_11", "R2_12", "Rref_11", "Rref_12", "E_11", "u1", "omega1", "omega2", "psi", "E_cl", "energy",
];

/// Rotations read from a config may be rounded; within this orthogonality
/// defect they are projected onto SO(2), beyond it they are rejected.
pub const CONFIG_PROJECTION_TOL: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub params: PendubotParams,
    pub initial: PendubotState,
    pub reference: ReferenceTrajectory,
    pub gains: GainSet,
    pub spec: IntegratorSpec,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.chars().any(char::is_whitespace) {
            return Err(Error::InvalidParameter(format!(
                "scenario name `{}` must be a non-empty word",
                self.name
            )));
        }
        self.params.validate()?;
        self.gains.validate()?;
        self.spec.validate()?;
        for r in [&self.initial.r1, &self.initial.r2] {
            Rotation2::try_from_matrix(*r.matrix())?;
        }
        if !self.initial.is_finite() {
            return Err(Error::InvalidParameter("initial state must be finite".into()));
        }
        Ok(())
    }

    pub fn controller(&self) -> AgatController {
        AgatController::new(self.reference, self.gains, self.params)
    }

    pub fn with_overrides(mut self, o: &Overrides) -> Result<Self> {
        if let Some(dt) = o.dt {
            self.spec.dt = dt;
        }
        if let Some(t_end) = o.t_end {
            self.spec.t_end = t_end;
        }
        if let Some(stride) = o.stride {
            self.spec.record_stride = stride;
        }
        if let Some(kp) = o.kp {
            self.gains.kp = kp;
        }
        if let Some((a, b)) = o.fd {
            self.gains.fd = Matrix2::new(a, 0.0, 0.0, b);
        }
        if let Some((c1, c2)) = o.p {
            self.gains.p = Matrix2::new(c1, 0.0, 0.0, c2);
        }
        self.validate()?;
        Ok(self)
    }

    /// Runs the closed loop, keeping the rows recorded before any failure.
    pub fn simulate(&self) -> (TrajectoryRecord, Option<Error>) {
        let controller = self.controller();
        integrator::simulate_partial(&self.initial, &controller, &self.spec, &self.params, Some(&controller))
    }
}

/// Command line overrides applied on top of a scenario.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Overrides {
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub stride: Option<usize>,
    pub kp: Option<f64>,
    /// Diagonal of `Fd`.
    pub fd: Option<(f64, f64)>,
    /// Diagonal of `P`.
    pub p: Option<(f64, f64)>,
}

/// The rounded initial elbow rotation used by `s1` and `s4`.
pub fn rounded_initial_elbow() -> Rotation2 {
    Rotation2::project(&Matrix2::new(0.4794, 0.87758, -0.87758, 0.4794)).expect("nonzero first column")
}

pub fn builtin_scenarios() -> Vec<Scenario> {
    let plant = PendubotParams::uniform_rods(0.25, 0.2, 0.5, 0.5, 9.8).expect("valid plant");
    let light_shoulder = PendubotParams::uniform_rods(0.1, 0.4, 0.25, 0.5, 9.8).expect("valid plant");
    let spec = IntegratorSpec::default();

    let first = PendubotState::new(Rotation2::identity(), rounded_initial_elbow(), -1.0, 2.0);
    let second = PendubotState::new(Rotation2::identity(), so2::exp(-FRAC_PI_2), -1.0, 2.0);
    let gains = |kp, fd, c| GainSet::diagonal(kp, fd, c).expect("valid gains");

    vec![
        Scenario {
            name: "s1".into(),
            params: plant,
            initial: first,
            // [[sin(t + pi/4), cos(t + pi/4)], [-cos(t + pi/4), sin(t + pi/4)]] = exp(t - pi/4)
            reference: ReferenceTrajectory::Rate {
                phase: -FRAC_PI_4,
                rate: 1.0,
            },
            gains: gains(2.3, (-1.5, -2.0), (1.0, 1.5)),
            spec,
        },
        Scenario {
            name: "s2".into(),
            params: plant,
            initial: second,
            reference: ReferenceTrajectory::Rate { phase: 0.0, rate: 1.0 },
            gains: gains(3.0, (-1.5, -2.0), (2.0, 1.5)),
            spec,
        },
        Scenario {
            name: "s3".into(),
            params: plant,
            initial: second,
            reference: ReferenceTrajectory::identity(),
            gains: gains(3.0, (-1.5, -2.0), (2.0, 1.5)),
            spec,
        },
        Scenario {
            name: "s4".into(),
            params: plant,
            // Same initial state as s1, tracking the antipodal-phase reference
            // [[-cos t, sin t], [-sin t, -cos t]] = exp(t + pi).
            initial: first,
            reference: ReferenceTrajectory::Rate { phase: PI, rate: 1.0 },
            gains: gains(2.5, (-1.5, -2.2), (2.0, 1.5)),
            spec,
        },
        Scenario {
            name: "s5".into(),
            params: light_shoulder,
            initial: second,
            reference: ReferenceTrajectory::Rate { phase: 0.0, rate: 1.0 },
            gains: gains(5.0, (-1.5, -2.5), (1.5, 1.3)),
            spec,
        },
    ]
}

pub fn find_scenario(name: &str) -> Result<Scenario> {
    builtin_scenarios()
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::UnknownScenario(name.to_string()))
}

fn fmt_matrix(m: &Matrix2<f64>) -> String {
    format!("{}, {}, {}, {}", m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)])
}

/// Serializes a scenario to the flat config format.
///
/// Numbers use the shortest representation that parses back to the same
/// `f64`, so [`parse_config`] reproduces the scenario exactly.
pub fn to_config(s: &Scenario) -> String {
    let mut out = String::new();
    let p = &s.params;
    let _ = writeln!(out, "name = {}", s.name);
    let _ = writeln!(out);
    for (k, v) in [
        ("m1", p.m1),
        ("m2", p.m2),
        ("l1", p.l1),
        ("l2", p.l2),
        ("i1", p.i1),
        ("i2", p.i2),
        ("g", p.g),
    ] {
        let _ = writeln!(out, "plant.{k} = {v}");
    }
    let _ = writeln!(out, "plant.pairing = {}", p.pairing.as_str());
    let _ = writeln!(out);
    let _ = writeln!(out, "initial.r1 = {}", fmt_matrix(s.initial.r1.matrix()));
    let _ = writeln!(out, "initial.r2 = {}", fmt_matrix(s.initial.r2.matrix()));
    let _ = writeln!(out, "initial.omega1 = {}", s.initial.w1);
    let _ = writeln!(out, "initial.omega2 = {}", s.initial.w2);
    let _ = writeln!(out);
    match s.reference {
        ReferenceTrajectory::Rate { phase, rate } => {
            let _ = writeln!(out, "reference.kind = rate");
            let _ = writeln!(out, "reference.phase = {phase}");
            let _ = writeln!(out, "reference.rate = {rate}");
        }
        ReferenceTrajectory::Sinusoid {
            offset,
            amplitude,
            frequency,
        } => {
            let _ = writeln!(out, "reference.kind = sinusoid");
            let _ = writeln!(out, "reference.offset = {offset}");
            let _ = writeln!(out, "reference.amplitude = {amplitude}");
            let _ = writeln!(out, "reference.frequency = {frequency}");
        }
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "gains.kp = {}", s.gains.kp);
    let _ = writeln!(out, "gains.fd = {}", fmt_matrix(&s.gains.fd));
    let _ = writeln!(out, "gains.p = {}, {}", s.gains.p[(0, 0)], s.gains.p[(1, 1)]);
    let _ = writeln!(out);
    let _ = writeln!(out, "integrator.dt = {}", s.spec.dt);
    let _ = writeln!(out, "integrator.t_end = {}", s.spec.t_end);
    let _ = writeln!(out, "integrator.stride = {}", s.spec.record_stride);
    out
}

const KEYS: &[&str] = &[
    "name",
    "plant.m1",
    "plant.m2",
    "plant.l1",
    "plant.l2",
    "plant.i1",
    "plant.i2",
    "plant.g",
    "plant.pairing",
    "initial.r1",
    "initial.r2",
    "initial.theta1",
    "initial.theta2",
    "initial.omega1",
    "initial.omega2",
    "reference.kind",
    "reference.phase",
    "reference.rate",
    "reference.offset",
    "reference.amplitude",
    "reference.frequency",
    "gains.kp",
    "gains.fd",
    "gains.p",
    "integrator.dt",
    "integrator.t_end",
    "integrator.stride",
];

struct Entries {
    values: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn raw(&self, key: &str) -> Option<(usize, &str)> {
        self.values.get(key).map(|(line, v)| (*line, v.as_str()))
    }

    fn number(&self, key: &str) -> Result<Option<f64>> {
        self.raw(key)
            .map(|(line, v)| {
                v.parse::<f64>().map_err(|_| Error::Config {
                    line,
                    message: format!("`{key}` expects a number, got `{v}`"),
                })
            })
            .transpose()
    }

    fn required(&self, key: &str) -> Result<f64> {
        self.number(key)?.ok_or_else(|| Error::Config {
            line: 0,
            message: format!("missing `{key}`"),
        })
    }

    fn list(&self, key: &str, len: usize) -> Result<Option<(usize, Vec<f64>)>> {
        let Some((line, v)) = self.raw(key) else {
            return Ok(None);
        };
        let items: std::result::Result<Vec<f64>, _> = v.split(',').map(|x| x.trim().parse::<f64>()).collect();
        match items {
            Ok(items) if items.len() == len => Ok(Some((line, items))),
            _ => Err(Error::Config {
                line,
                message: format!("`{key}` expects {len} comma-separated numbers, got `{v}`"),
            }),
        }
    }

    fn matrix(&self, key: &str) -> Result<Option<(usize, Matrix2<f64>)>> {
        Ok(self
            .list(key, 4)?
            .map(|(line, v)| (line, Matrix2::new(v[0], v[1], v[2], v[3]))))
    }

    /// A rotation given either as `prefix.rN` (row-major matrix) or
    /// `prefix.thetaN` (radians).
    fn rotation(&self, matrix_key: &str, angle_key: &str) -> Result<Rotation2> {
        match (self.matrix(matrix_key)?, self.number(angle_key)?) {
            (Some(_), Some(_)) => Err(Error::Config {
                line: self.raw(angle_key).map_or(0, |(l, _)| l),
                message: format!("give either `{matrix_key}` or `{angle_key}`, not both"),
            }),
            (Some((line, m)), None) => {
                let defect = (m.transpose() * m - Matrix2::identity()).norm();
                if defect > CONFIG_PROJECTION_TOL || m.determinant() <= 0.0 {
                    return Err(Error::Config {
                        line,
                        message: format!("`{matrix_key}` is not a rotation (defect {defect:e})"),
                    });
                }
                Rotation2::from_matrix_or_project(m).map_err(|e| Error::Config {
                    line,
                    message: e.to_string(),
                })
            }
            (None, Some(theta)) => Ok(so2::exp(theta)),
            (None, None) => Ok(Rotation2::identity()),
        }
    }
}

/// Parses the flat config format.
///
/// Blank lines and lines starting with `#` are ignored. Plant masses and
/// lengths and all gains are required; hinge inertias default to uniform
/// rods, the initial state to rest at the identity, the reference to the
/// constant identity and the integrator to `dt = 1e-3`, `t_end = 60`,
/// `stride = 10`.
pub fn parse_config(text: &str) -> Result<Scenario> {
    let mut values = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some((key, value)) = trimmed.split_once('=') else {
            return Err(Error::Config {
                line,
                message: format!("expected `key = value`, got `{trimmed}`"),
            });
        };
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(Error::Config {
                line,
                message: format!("unknown key `{key}`"),
            });
        }
        if values
            .insert(key.to_string(), (line, value.trim().to_string()))
            .is_some()
        {
            return Err(Error::Config {
                line,
                message: format!("duplicate key `{key}`"),
            });
        }
    }
    let e = Entries { values };

    let (m1, m2) = (e.required("plant.m1")?, e.required("plant.m2")?);
    let (l1, l2) = (e.required("plant.l1")?, e.required("plant.l2")?);
    let i1 = e.number("plant.i1")?.unwrap_or(m1 * l1 * l1 / 3.0);
    let i2 = e.number("plant.i2")?.unwrap_or(m2 * l2 * l2 / 3.0);
    let g = e.number("plant.g")?.unwrap_or(9.8);
    let pairing = match e.raw("plant.pairing") {
        None => PotentialPairing::default(),
        Some((line, v)) => PotentialPairing::parse(v).ok_or_else(|| Error::Config {
            line,
            message: format!("`plant.pairing` must be `product` or `relative`, got `{v}`"),
        })?,
    };
    let params = PendubotParams::new(m1, m2, l1, l2, i1, i2, g)?.with_pairing(pairing);

    let initial = PendubotState::new(
        e.rotation("initial.r1", "initial.theta1")?,
        e.rotation("initial.r2", "initial.theta2")?,
        e.number("initial.omega1")?.unwrap_or(0.0),
        e.number("initial.omega2")?.unwrap_or(0.0),
    );

    let reference = match e.raw("reference.kind").map(|(l, v)| (l, v.to_string())) {
        None => ReferenceTrajectory::Rate {
            phase: e.number("reference.phase")?.unwrap_or(0.0),
            rate: e.number("reference.rate")?.unwrap_or(0.0),
        },
        Some((_, kind)) if kind == "rate" => ReferenceTrajectory::Rate {
            phase: e.number("reference.phase")?.unwrap_or(0.0),
            rate: e.number("reference.rate")?.unwrap_or(0.0),
        },
        Some((_, kind)) if kind == "sinusoid" => ReferenceTrajectory::Sinusoid {
            offset: e.number("reference.offset")?.unwrap_or(0.0),
            amplitude: e.required("reference.amplitude")?,
            frequency: e.required("reference.frequency")?,
        },
        Some((line, kind)) => {
            return Err(Error::Config {
                line,
                message: format!("`reference.kind` must be `rate` or `sinusoid`, got `{kind}`"),
            })
        }
    };

    // Fd is either a full row-major matrix or the two diagonal entries.
    let fd_len = e.raw("gains.fd").map_or(0, |(_, v)| v.split(',').count());
    let fd = match e.list("gains.fd", if fd_len == 2 { 2 } else { 4 })? {
        Some((_, d)) if d.len() == 2 => Matrix2::new(d[0], 0.0, 0.0, d[1]),
        Some((_, m)) => Matrix2::new(m[0], m[1], m[2], m[3]),
        None => {
            return Err(Error::Config {
                line: 0,
                message: "missing `gains.fd`".into(),
            })
        }
    };
    let gains = GainSet {
        kp: e.required("gains.kp")?,
        fd,
        p: match e.list("gains.p", 2)? {
            Some((_, c)) => Matrix2::new(c[0], 0.0, 0.0, c[1]),
            None => {
                return Err(Error::Config {
                    line: 0,
                    message: "missing `gains.p`".into(),
                })
            }
        },
    };

    let defaults = IntegratorSpec::default();
    let stride = match e.raw("integrator.stride") {
        None => defaults.record_stride,
        Some((line, v)) => v.parse::<usize>().map_err(|_| Error::Config {
            line,
            message: format!("`integrator.stride` expects a positive integer, got `{v}`"),
        })?,
    };
    let spec = IntegratorSpec {
        dt: e.number("integrator.dt")?.unwrap_or(defaults.dt),
        t_end: e.number("integrator.t_end")?.unwrap_or(defaults.t_end),
        record_stride: stride,
    };

    let scenario = Scenario {
        name: e.raw("name").map_or("custom", |(_, v)| v).to_string(),
        params,
        initial,
        reference,
        gains,
        spec,
    };
    scenario.validate()?;
    Ok(scenario)
}

pub fn load_config(path: &Path) -> Result<Scenario> {
    parse_config(&std::fs::read_to_string(path)?)
}

/// Where the scenario of a run comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum ScenarioSource<'a> {
    Builtin(&'a str),
    Config(&'a Path),
}

impl ScenarioSource<'_> {
    pub fn load(&self) -> Result<Scenario> {
        match self {
            ScenarioSource::Builtin(name) => find_scenario(name),
            ScenarioSource::Config(path) => load_config(path),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub scenario: String,
    pub rows: usize,
    pub final_e11: f64,
    pub final_psi: f64,
    pub max_abs_omega1: f64,
}

fn row_fields(row: &integrator::TrajectoryRow) -> [f64; 12] {
    let probe = row.probe.expect("runs are recorded with the controller probe");
    let r2 = row.state.r2.matrix();
    let rref = probe.r_ref.matrix();
    [
        row.t,
        r2[(0, 0)],
        r2[(0, 1)],
        rref[(0, 0)],
        rref[(0, 1)],
        probe.error.e.matrix()[(0, 0)],
        row.torque,
        row.state.w1,
        row.state.w2,
        probe.psi,
        probe.e_cl,
        row.energy,
    ]
}

/// Writes the trajectory as CSV with the [`CSV_HEADER`] columns.
pub fn write_csv<W: std::io::Write>(record: &TrajectoryRecord, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in &record.rows {
        w.write_record(row_fields(row).iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Simulates the scenario and writes its CSV to `out`.
///
/// Rows recorded before a model or non-finite failure are still written; the
/// failure is then returned.
pub fn run(source: &ScenarioSource, overrides: &Overrides, out: &Path) -> Result<RunSummary> {
    let scenario = source.load()?.with_overrides(overrides)?;
    let (record, failure) = scenario.simulate();
    write_csv(&record, std::fs::File::create(out)?)?;
    if let Some(e) = failure {
        return Err(e);
    }
    let last = record.last().expect("at least the initial row");
    let probe = last.probe.expect("probe recorded");
    Ok(RunSummary {
        scenario: scenario.name,
        rows: record.len(),
        final_e11: probe.error.e.matrix()[(0, 0)],
        final_psi: probe.psi,
        max_abs_omega1: record.rows.iter().map(|r| r.state.w1.abs()).fold(0.0, f64::max),
    })
}

/// Exit code of a run: 0 on success, otherwise [`Error::exit_code`].
pub fn run_exit_code(source: &ScenarioSource, overrides: &Overrides, out: &Path) -> i32 {
    match run(source, overrides, out) {
        Ok(_) => 0,
        Err(e) => e.exit_code(),
    }
}
