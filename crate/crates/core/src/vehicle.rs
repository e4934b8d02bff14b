//! Kinematics of the vehicle center and the sensor mounted ahead of it.
//!
//! Roll does not enter: the sensor sits on the body axis, so only pitch
//! (`alpha`) and yaw (`theta`) matter. Angles are never wrapped here; the
//! shifted-variable transforms downstream need them continuous.

use serde::{Deserialize, Serialize};

use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    /// Position of the vehicle center.
    pub r_c: Vec3,
    /// Pitch (azimuthal) angle, radians.
    pub alpha: f64,
    /// Yaw (polar) angle, radians.
    pub theta: f64,
}

/// Time derivative of a [`VehicleState`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleRate {
    pub r_c: Vec3,
    pub alpha: f64,
    pub theta: f64,
}

impl VehicleState {
    pub fn new(r_c: Vec3, alpha: f64, theta: f64) -> Self {
        Self { r_c, alpha, theta }
    }

    pub fn is_finite(&self) -> bool {
        self.r_c.iter().all(|x| x.is_finite()) && self.alpha.is_finite() && self.theta.is_finite()
    }

    pub fn heading(&self) -> Vec3 {
        heading(self.alpha, self.theta)
    }
}

/// Unit body axis for pitch `alpha` and yaw `theta`.
pub fn heading(alpha: f64, theta: f64) -> Vec3 {
    let (sa, ca) = alpha.sin_cos();
    let (st, ct) = theta.sin_cos();
    Vec3::new(ca * ct, ca * st, sa)
}

pub fn kinematics_rhs(state: &VehicleState, v: f64, psi_alpha: f64, psi_theta: f64) -> VehicleRate {
    VehicleRate { r_c: v * state.heading(), alpha: psi_alpha, theta: psi_theta }
}

/// Sensor location `r_c + R * heading`.
pub fn sensor_position(state: &VehicleState, offset: f64) -> Vec3 {
    state.r_c + offset * state.heading()
}
