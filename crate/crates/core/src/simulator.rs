//! Fixed-step RK4 integration of the closed loop and the conversion of
//! trajectories into source-relative error coordinates.

use std::f64::consts::{PI, TAU};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::{self, ControllerParams, ParamError, WashoutState};
use crate::fields::{eval_field, FieldError, FieldSpec};
use crate::vehicle::{self, VehicleState};
use crate::Vec3;

/// Header of the trajectory CSV export.
pub const CSV_HEADER: [&str; 11] = ["t", "x", "y", "z", "alpha", "theta", "J", "xi", "v", "psi_alpha", "psi_theta"];

/// Minimum number of integrator steps per probing period.
pub const MIN_STEPS_PER_PERIOD: f64 = 32.0;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("non-finite state after step {step} (t = {t}), trajectory row {row}")]
    Diverged { step: usize, row: usize, t: f64 },
    #[error("trajectory io: {0}")]
    Io(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: ControllerParams,
    pub field: FieldSpec,
    pub initial: VehicleState,
    pub dt: f64,
    pub t_end: f64,
    pub record_stride: usize,
}

impl SimConfig {
    /// 64 steps per probing period.
    pub fn default_dt(omega: f64) -> f64 {
        TAU / omega / 64.0
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.params.validate()?;
        self.field.validate()?;
        if !self.initial.is_finite() {
            return Err(SimError::Config("initial state must be finite".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(SimError::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(SimError::Config(format!("t_end must be non-negative, got {}", self.t_end)));
        }
        if self.dt * self.params.omega > TAU / MIN_STEPS_PER_PERIOD * (1.0 + 1e-12) {
            return Err(SimError::Config(format!(
                "dt = {} gives fewer than {MIN_STEPS_PER_PERIOD} steps per probing period",
                self.dt
            )));
        }
        if self.record_stride == 0 {
            return Err(SimError::Config("record_stride must be at least 1".into()));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt + 1e-9).floor() as usize
    }
}

/// Everything the closed loop produces at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Evaluation {
    j: f64,
    xi: f64,
    input: controller::ControlInput,
    rate: [f64; 6],
}

fn pack(state: &VehicleState, ws: &WashoutState) -> [f64; 6] {
    [state.r_c.x, state.r_c.y, state.r_c.z, state.alpha, state.theta, ws.eta]
}

fn unpack(y: &[f64; 6]) -> (VehicleState, WashoutState) {
    (VehicleState::new(Vec3::new(y[0], y[1], y[2]), y[3], y[4]), WashoutState { eta: y[5] })
}

fn evaluate(y: &[f64; 6], t: f64, params: &ControllerParams, field: &FieldSpec) -> Result<Evaluation, FieldError> {
    let (state, ws) = unpack(y);
    let j = eval_field(field, &vehicle::sensor_position(&state, params.sensor_offset))?;
    let xi = controller::xi(&ws, j);
    let input = controller::control(xi, t, params);
    let d = vehicle::kinematics_rhs(&state, input.v, input.psi_alpha, input.psi_theta);
    let rate = [d.r_c.x, d.r_c.y, d.r_c.z, d.alpha, d.theta, controller::washout_rhs(&ws, j, params.h)];
    Ok(Evaluation { j, xi, input, rate })
}

fn axpy(y: &[f64; 6], h: f64, k: &[f64; 6]) -> [f64; 6] {
    std::array::from_fn(|i| y[i] + h * k[i])
}

/// One classical RK4 step of the joint vehicle and filter state. The field
/// and the control law are evaluated at every stage.
pub fn step(
    state: &VehicleState,
    washout: &WashoutState,
    t: f64,
    config: &SimConfig,
) -> Result<(VehicleState, WashoutState), SimError> {
    let y = pack(state, washout);
    let next = rk4(&y, t, config)?;
    if next.iter().any(|v| !v.is_finite()) {
        return Err(SimError::Diverged { step: 0, row: 0, t: t + config.dt });
    }
    Ok(unpack(&next))
}

fn rk4(y: &[f64; 6], t: f64, config: &SimConfig) -> Result<[f64; 6], FieldError> {
    let (p, f, h) = (&config.params, &config.field, config.dt);
    let k1 = evaluate(y, t, p, f)?.rate;
    let k2 = evaluate(&axpy(y, 0.5 * h, &k1), t + 0.5 * h, p, f)?.rate;
    let k3 = evaluate(&axpy(y, 0.5 * h, &k2), t + 0.5 * h, p, f)?.rate;
    let k4 = evaluate(&axpy(y, h, &k3), t + h, p, f)?.rate;
    Ok(std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub alpha: f64,
    pub theta: f64,
    #[serde(rename = "J")]
    pub j: f64,
    pub xi: f64,
    pub v: f64,
    pub psi_alpha: f64,
    pub psi_theta: f64,
}

impl TrajectoryRow {
    pub fn state(&self) -> VehicleState {
        VehicleState::new(Vec3::new(self.x, self.y, self.z), self.alpha, self.theta)
    }

    /// Filter state recovered from `xi = J - eta`.
    pub fn washout(&self) -> WashoutState {
        WashoutState { eta: self.j - self.xi }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub rows: Vec<TrajectoryRow>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn last(&self) -> Option<&TrajectoryRow> {
        self.rows.last()
    }

    /// Distance of the vehicle center from `source` per row.
    pub fn distances(&self, source: &Vec3) -> Vec<f64> {
        self.rows.iter().map(|r| (r.state().r_c - source).norm()).collect()
    }

    pub fn error_coords(&self, params: &ControllerParams, field: &FieldSpec) -> Vec<ErrorCoords> {
        self.rows.iter().map(|r| error_coords(&r.state(), &r.washout(), r.t, params, field)).collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), csv::Error> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
        w.write_record(CSV_HEADER)?;
        for r in &self.rows {
            let vals = [r.t, r.x, r.y, r.z, r.alpha, r.theta, r.j, r.xi, r.v, r.psi_alpha, r.psi_theta];
            // `Display` for f64 is the shortest string that round-trips.
            w.write_record(vals.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self, csv::Error> {
        let mut rdr = csv::Reader::from_reader(reader);
        let rows = rdr.deserialize().collect::<Result<Vec<TrajectoryRow>, _>>()?;
        Ok(Self { rows })
    }
}

/// Integrates from `t = 0` to `t_end`, starting with the washout filter
/// settled on the initial sensor reading (zero initial washout output).
pub fn run(config: &SimConfig) -> Result<Trajectory, SimError> {
    config.validate()?;
    let r_s = vehicle::sensor_position(&config.initial, config.params.sensor_offset);
    let ws = WashoutState::settled_on(eval_field(&config.field, &r_s)?);
    run_from(config, ws)
}

/// Same as [`run`] with an explicit initial filter state.
pub fn run_from(config: &SimConfig, washout: WashoutState) -> Result<Trajectory, SimError> {
    config.validate()?;
    let n = config.n_steps();
    let stride = config.record_stride;
    let mut rows = Vec::with_capacity(n / stride + 1);
    let mut y = pack(&config.initial, &washout);
    for i in 0..=n {
        let t = i as f64 * config.dt;
        if i % stride == 0 {
            let e = evaluate(&y, t, &config.params, &config.field)?;
            rows.push(TrajectoryRow {
                t,
                x: y[0],
                y: y[1],
                z: y[2],
                alpha: y[3],
                theta: y[4],
                j: e.j,
                xi: e.xi,
                v: e.input.v,
                psi_alpha: e.input.psi_alpha,
                psi_theta: e.input.psi_theta,
            });
        }
        if i == n {
            break;
        }
        y = rk4(&y, t, config)?;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(SimError::Diverged { step: i + 1, row: (i + 1) / stride, t: (i + 1) as f64 * config.dt });
        }
    }
    Ok(Trajectory { rows })
}

/// Source-relative coordinates of the error system.
///
/// `theta_star` is the polar angle of the direction from the vehicle to the
/// source (`-(r_c - r*)`), `alpha_star` its elevation. Angles are NaN and
/// `degenerate` is set when the vehicle sits on the source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorCoords {
    pub r_tilde: f64,
    pub alpha_star: f64,
    pub theta_star: f64,
    pub alpha_hat: f64,
    pub theta_hat: f64,
    /// `theta_hat - theta_star` wrapped to (-pi, pi].
    pub theta_tilde: f64,
    /// Shifted filter error; only defined for the spherical quadratic field.
    pub e_hat: Option<f64>,
    pub degenerate: bool,
}

impl ErrorCoords {
    /// Rebuild `r_c - r*` from distance and angles.
    pub fn offset(&self) -> Vec3 {
        -self.r_tilde * vehicle::heading(self.alpha_star, self.theta_star)
    }
}

/// Wrap an angle to (-pi, pi].
pub fn wrap_angle(x: f64) -> f64 {
    let y = x.rem_euclid(TAU);
    if y > PI {
        y - TAU
    } else {
        y
    }
}

pub fn error_coords(
    state: &VehicleState,
    washout: &WashoutState,
    t: f64,
    params: &ControllerParams,
    field: &FieldSpec,
) -> ErrorCoords {
    let d = state.r_c - field.source();
    let r_tilde = d.norm();
    let (s, c) = (params.omega * t).sin_cos();
    let alpha_hat = state.alpha - params.a * s;
    let theta_hat = state.theta - params.a * c;
    let e_hat = field.spherical_coeffs().map(|(f_star, q_r)| washout.eta - f_star + q_r * params.sensor_offset.powi(2));
    if r_tilde == 0.0 {
        return ErrorCoords {
            r_tilde,
            alpha_star: f64::NAN,
            theta_star: f64::NAN,
            alpha_hat,
            theta_hat,
            theta_tilde: f64::NAN,
            e_hat,
            degenerate: true,
        };
    }
    let alpha_star = (-d.z).atan2(d.x.hypot(d.y));
    let theta_star = (-d.y).atan2(-d.x);
    ErrorCoords {
        r_tilde,
        alpha_star,
        theta_star,
        alpha_hat,
        theta_hat,
        theta_tilde: wrap_angle(theta_hat - theta_star),
        e_hat,
        degenerate: false,
    }
}

/// Continuous version of an angle series: removes the 2 pi jumps between
/// consecutive samples.
pub fn unwrap_angles(values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut offset = 0.0;
    let mut prev: Option<f64> = None;
    for &v in values {
        if let Some(p) = prev {
            let jump = v + offset - p;
            offset -= TAU * (jump / TAU).round();
        }
        let u = v + offset;
        out.push(u);
        prev = Some(u);
    }
    out
}

/// Means of `values` over consecutive windows `[t_from + kT, t_from + (k+1)T)`.
/// Only complete windows are reported; an empty vector means the series does
/// not cover one period after `t_from`.
pub fn per_period_average(times: &[f64], values: &[f64], period: f64, t_from: f64) -> Vec<f64> {
    assert_eq!(times.len(), values.len());
    if times.len() < 2 || period.is_nan() || period <= 0.0 {
        return Vec::new();
    }
    let spacing = times[1] - times[0];
    let last = times[times.len() - 1];
    let n_windows = ((last - t_from + spacing) / period + 1e-9).floor();
    if n_windows.is_nan() || n_windows < 1.0 {
        return Vec::new();
    }
    let n_windows = n_windows as usize;
    let mut sums = vec![0.0; n_windows];
    let mut counts = vec![0usize; n_windows];
    for (&t, &v) in times.iter().zip(values) {
        if t < t_from - 1e-9 * period {
            continue;
        }
        let k = ((t - t_from) / period + 1e-9).floor() as usize;
        if k < n_windows {
            sums[k] += v;
            counts[k] += 1;
        }
    }
    sums.iter().zip(&counts).filter(|(_, &c)| c > 0).map(|(s, &c)| s / c as f64).collect()
}

/// Per-period means of the quantities the convergence claims are stated in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodMeans {
    pub t_start: Vec<f64>,
    pub distance: Vec<f64>,
    pub alpha: Vec<f64>,
    /// Mean of the unwrapped heading error, wrapped afterwards.
    pub theta_tilde: Vec<f64>,
    /// Mean of the unwrapped bearing to the source, not wrapped.
    pub theta_star: Vec<f64>,
}

/// Window means aligned to `t_from` over the whole remaining trajectory.
pub fn period_means(traj: &Trajectory, params: &ControllerParams, field: &FieldSpec, t_from: f64) -> PeriodMeans {
    let times = traj.times();
    let period = params.period();
    let coords = traj.error_coords(params, field);
    let dist: Vec<f64> = coords.iter().map(|c| c.r_tilde).collect();
    let alpha: Vec<f64> = traj.rows.iter().map(|r| r.alpha).collect();
    let raw_tt: Vec<f64> = coords.iter().map(|c| if c.degenerate { 0.0 } else { c.theta_tilde }).collect();
    let raw_ts: Vec<f64> = coords.iter().map(|c| if c.degenerate { 0.0 } else { c.theta_star }).collect();
    let tt = unwrap_angles(&raw_tt);
    let ts = unwrap_angles(&raw_ts);
    let distance = per_period_average(&times, &dist, period, t_from);
    let n = distance.len();
    PeriodMeans {
        t_start: (0..n).map(|k| t_from + k as f64 * period).collect(),
        distance,
        alpha: per_period_average(&times, &alpha, period, t_from),
        theta_tilde: per_period_average(&times, &tt, period, t_from).into_iter().map(wrap_angle).collect(),
        theta_star: per_period_average(&times, &ts, period, t_from),
    }
}

/// Summary written next to every trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub t_end: f64,
    pub final_distance: f64,
    /// Number of trailing probing periods the means below are taken over.
    pub window_periods: usize,
    /// The three means are absent when not even one full period was recorded.
    pub mean_distance: Option<f64>,
    pub mean_alpha: Option<f64>,
    pub mean_theta_tilde: Option<f64>,
    /// Start of the first period after which every per-period mean distance
    /// stays within 10% (or 1e-3, whichever is larger) of the final one.
    pub settle_time: Option<f64>,
}

pub const SUMMARY_PERIODS: usize = 10;

pub fn summarize(traj: &Trajectory, params: &ControllerParams, field: &FieldSpec) -> Option<SimSummary> {
    let last = traj.last()?;
    let final_distance = (last.state().r_c - field.source()).norm();
    let t0 = traj.rows[0].t;
    let means = period_means(traj, params, field, t0);
    let n = means.distance.len();
    let window = n.min(SUMMARY_PERIODS);
    let tail = |v: &[f64]| (window > 0).then(|| v[n - window..].iter().sum::<f64>() / window as f64);
    // Circular mean so a heading error near pi does not average to zero.
    let mean_theta_tilde = (window > 0).then(|| {
        let (s, c) = means.theta_tilde[n - window..].iter().fold((0.0, 0.0), |(s, c), x| (s + x.sin(), c + x.cos()));
        s.atan2(c)
    });
    let settle_time = means.distance.last().and_then(|&fin| {
        let band = (0.1 * fin).max(1e-3);
        let first_bad = means.distance.iter().rposition(|d| (d - fin).abs() > band);
        match first_bad {
            None => means.t_start.first().copied(),
            Some(k) => means.t_start.get(k + 1).copied(),
        }
    });
    Some(SimSummary {
        t_end: last.t,
        final_distance,
        window_periods: window,
        mean_distance: tail(&means.distance),
        mean_alpha: tail(&means.alpha),
        mean_theta_tilde,
        settle_time,
    })
}
