//! Extremum-seeking control law: sinusoidal probing of pitch and yaw,
//! demodulation of the washed-out sensor signal, and a forward speed that
//! follows the same signal.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("controller parameter `{name}` must be strictly positive and finite, got {value}")]
pub struct ParamError {
    pub name: &'static str,
    pub value: f64,
}

/// Tunable scalars of the scheme. All must be strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerParams {
    /// Perturbation amplitude (rad).
    pub a: f64,
    /// Pitch demodulation gain.
    pub c_alpha: f64,
    /// Yaw demodulation gain.
    pub c_theta: f64,
    /// Forward-speed gain on the washout output.
    pub b: f64,
    /// Washout cutoff (1/s).
    pub h: f64,
    /// Bias forward velocity.
    pub v_c: f64,
    /// Probing frequency (rad/s).
    pub omega: f64,
    /// Distance from the vehicle center to the sensor.
    pub sensor_offset: f64,
}

impl ControllerParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        let fields = [
            ("a", self.a),
            ("c_alpha", self.c_alpha),
            ("c_theta", self.c_theta),
            ("b", self.b),
            ("h", self.h),
            ("v_c", self.v_c),
            ("omega", self.omega),
            ("sensor_offset", self.sensor_offset),
        ];
        for (name, value) in fields {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ParamError { name, value });
            }
        }
        Ok(())
    }

    /// Length of one probing period, `2 pi / omega`.
    pub fn period(&self) -> f64 {
        std::f64::consts::TAU / self.omega
    }
}

/// Low-pass state `eta = h/(s+h)[J]`. The washout output is `J - eta`, so the
/// filter never needs the unknown peak value of the field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WashoutState {
    pub eta: f64,
}

impl WashoutState {
    /// Filter already settled on `j`, so the first washout output is zero.
    pub fn settled_on(j: f64) -> Self {
        Self { eta: j }
    }
}

/// `d eta/dt = h (J - eta)`.
pub fn washout_rhs(ws: &WashoutState, j: f64, h: f64) -> f64 {
    h * (j - ws.eta)
}

/// Washout output `xi = s/(s+h)[J] = J - eta`.
pub fn xi(ws: &WashoutState, j: f64) -> f64 {
    j - ws.eta
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlInput {
    pub v: f64,
    pub psi_alpha: f64,
    pub psi_theta: f64,
}

/// Velocity commands for washout output `xi` at time `t`. The forward speed
/// is not clamped and may go negative.
pub fn control(xi: f64, t: f64, p: &ControllerParams) -> ControlInput {
    let (s, c) = (p.omega * t).sin_cos();
    ControlInput {
        v: p.v_c + p.b * xi,
        psi_alpha: p.a * p.omega * c + p.c_alpha * xi * s,
        psi_theta: -p.a * p.omega * s + p.c_theta * xi * c,
    }
}
