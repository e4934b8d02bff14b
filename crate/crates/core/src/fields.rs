//! Scalar signal landscapes sampled by the vehicle's sensor.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Vec3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("acoustic field is singular at the source {0:?}")]
    Singular([f64; 3]),
    #[error("invalid field: {0}")]
    Invalid(String),
}

/// Signal landscape with a single isolated maximum at `r_star`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldSpec {
    /// `f* - q_r |p - r*|^2`.
    QuadraticSpherical { f_star: f64, q_r: f64, r_star: [f64; 3] },
    /// `f* - sum_i c_i (p - r*)_i^2`.
    QuadraticElliptical { f_star: f64, diag_coeffs: [f64; 3], r_star: [f64; 3] },
    /// Unit-power point source, fed to the controller as `-exp(-1/(4 pi d^2))`.
    Acoustic { r_star: [f64; 3] },
    /// `-x^2 - (y - x^2)^2 - y^2 - (z - y^2)^2` in coordinates relative to `r_star`.
    Rosenbrock { r_star: [f64; 3] },
}

impl FieldSpec {
    pub fn spherical(f_star: f64, q_r: f64, r_star: [f64; 3]) -> Self {
        FieldSpec::QuadraticSpherical { f_star, q_r, r_star }
    }

    pub fn source(&self) -> Vec3 {
        let r = match self {
            FieldSpec::QuadraticSpherical { r_star, .. }
            | FieldSpec::QuadraticElliptical { r_star, .. }
            | FieldSpec::Acoustic { r_star }
            | FieldSpec::Rosenbrock { r_star } => r_star,
        };
        Vec3::from(*r)
    }

    /// Least upper bound of the field, attained at the source (for the
    /// acoustic field only as a limit).
    pub fn peak(&self) -> f64 {
        match self {
            FieldSpec::QuadraticSpherical { f_star, .. } | FieldSpec::QuadraticElliptical { f_star, .. } => *f_star,
            FieldSpec::Acoustic { .. } | FieldSpec::Rosenbrock { .. } => 0.0,
        }
    }

    /// `(f*, q_r)` for the spherical quadratic map, the only field where the
    /// averaged error coordinates are defined.
    pub fn spherical_coeffs(&self) -> Option<(f64, f64)> {
        match self {
            FieldSpec::QuadraticSpherical { f_star, q_r, .. } => Some((*f_star, *q_r)),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), FieldError> {
        let finite3 = |v: &[f64; 3]| v.iter().all(|x| x.is_finite());
        match self {
            FieldSpec::QuadraticSpherical { f_star, q_r, r_star } => {
                if !(f_star.is_finite() && finite3(r_star)) {
                    return Err(FieldError::Invalid("non-finite field parameter".into()));
                }
                if !(*q_r > 0.0 && q_r.is_finite()) {
                    return Err(FieldError::Invalid(format!("q_r must be positive, got {q_r}")));
                }
            }
            FieldSpec::QuadraticElliptical { f_star, diag_coeffs, r_star } => {
                if !(f_star.is_finite() && finite3(r_star)) {
                    return Err(FieldError::Invalid("non-finite field parameter".into()));
                }
                if diag_coeffs.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
                    return Err(FieldError::Invalid(format!(
                        "elliptical curvatures must be positive, got {diag_coeffs:?}"
                    )));
                }
            }
            FieldSpec::Acoustic { r_star } | FieldSpec::Rosenbrock { r_star } => {
                if !finite3(r_star) {
                    return Err(FieldError::Invalid("non-finite source position".into()));
                }
            }
        }
        Ok(())
    }
}

/// Signal strength at `point`.
pub fn eval_field(spec: &FieldSpec, point: &Vec3) -> Result<f64, FieldError> {
    let d = point - spec.source();
    let j = match spec {
        FieldSpec::QuadraticSpherical { f_star, q_r, .. } => f_star - q_r * d.norm_squared(),
        FieldSpec::QuadraticElliptical { f_star, diag_coeffs, .. } => {
            f_star - diag_coeffs[0] * d.x * d.x - diag_coeffs[1] * d.y * d.y - diag_coeffs[2] * d.z * d.z
        }
        FieldSpec::Acoustic { .. } => -(-acoustic_intensity(spec, point)?).exp(),
        FieldSpec::Rosenbrock { .. } => {
            let (x, y, z) = (d.x, d.y, d.z);
            -x * x - (y - x * x).powi(2) - y * y - (z - y * y).powi(2)
        }
    };
    Ok(j)
}

/// Raw inverse-square intensity `1/(4 pi d^2)` of the acoustic field. Only
/// used for diagnostics; the controller sees [`eval_field`].
pub fn acoustic_intensity(spec: &FieldSpec, point: &Vec3) -> Result<f64, FieldError> {
    let src = spec.source();
    let d2 = (point - src).norm_squared();
    if d2 == 0.0 {
        return Err(FieldError::Singular([src.x, src.y, src.z]));
    }
    Ok(1.0 / (4.0 * PI * d2))
}
