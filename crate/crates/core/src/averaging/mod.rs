//! Period-averaged error dynamics.
//!
//! In the time scale `tau = omega t` and the coordinates
//! `(r_tilde, alpha_star, alpha_hat, theta_tilde, e_hat)` the closed loop on a
//! spherical quadratic field is `2 pi`-periodic in `tau`. Averaging over one
//! period turns every trigonometric function of the sinusoidal probing into
//! a Bessel coefficient; this module holds those closed forms, the averaged
//! vector field, the constants that parameterize its equilibria, and the four
//! equilibria themselves.

pub mod bessel;

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bessel::{bessel_j0, bessel_j1};

use crate::controller::ControllerParams;

/// Below this `|cos(alpha_star)|` the averaged field is treated as singular.
pub const COS_ALPHA_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AveragingError {
    #[error("averaged system is singular: {0}")]
    Singular(&'static str),
    #[error("degenerate parameters: {0} vanishes")]
    Degenerate(&'static str),
    #[error("averaged trajectory became non-finite at tau = {0}")]
    NonFinite(f64),
    #[error("invalid averaged integration: {0}")]
    Invalid(String),
}

/// State of the averaged error system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AveragedState {
    #[serde(with = "nan_as_null")]
    pub r_tilde: f64,
    #[serde(with = "nan_as_null")]
    pub alpha_star: f64,
    #[serde(with = "nan_as_null")]
    pub alpha_hat: f64,
    #[serde(with = "nan_as_null")]
    pub theta_tilde: f64,
    #[serde(with = "nan_as_null")]
    pub e_hat: f64,
}

/// Undefined coordinates of absent equilibria are NaN; JSON carries them as null.
mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_nan() {
            s.serialize_none()
        } else {
            s.serialize_f64(*x)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

impl AveragedState {
    pub fn new(r_tilde: f64, alpha_star: f64, alpha_hat: f64, theta_tilde: f64, e_hat: f64) -> Self {
        Self { r_tilde, alpha_star, alpha_hat, theta_tilde, e_hat }
    }

    pub fn to_array(&self) -> [f64; 5] {
        [self.r_tilde, self.alpha_star, self.alpha_hat, self.theta_tilde, self.e_hat]
    }

    pub fn from_array(x: [f64; 5]) -> Self {
        Self::new(x[0], x[1], x[2], x[3], x[4])
    }
}

/// The Bessel values every closed form is built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesselTerms {
    /// J0(a)
    pub j0_a: f64,
    /// J0(sqrt(2) a)
    pub j0_s2a: f64,
    /// J0(2a)
    pub j0_2a: f64,
    /// J0(2 sqrt(2) a)
    pub j0_2s2a: f64,
    /// J0(sqrt(5) a)
    pub j0_s5a: f64,
    /// J1(a)
    pub j1_a: f64,
    /// J1(sqrt(2) a)
    pub j1_s2a: f64,
}

impl BesselTerms {
    pub fn new(a: f64) -> Self {
        Self {
            j0_a: bessel_j0(a),
            j0_s2a: bessel_j0(SQRT_2 * a),
            j0_2a: bessel_j0(2.0 * a),
            j0_2s2a: bessel_j0(2.0 * SQRT_2 * a),
            j0_s5a: bessel_j0(5f64.sqrt() * a),
            j1_a: bessel_j1(a),
            j1_s2a: bessel_j1(SQRT_2 * a),
        }
    }
}

/// Period averages of the trigonometric groups appearing in the error system,
/// with `A = alpha_hat + a sin(tau)`, `T = theta_tilde + a cos(tau)` and
/// `xi_c = cos A cos(alpha_star) cos T + sin A sin(alpha_star)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XiAverages {
    /// avg xi_c
    pub c: f64,
    /// avg xi_c^2
    pub c2: f64,
    /// avg (sin A cos(alpha_star) - cos A sin(alpha_star) cos T)
    pub alpha: f64,
    /// avg xi_c (sin A cos(alpha_star) - cos A sin(alpha_star) cos T)
    pub c_alpha: f64,
    /// avg xi_c sin(tau)
    pub c_sin: f64,
    /// avg xi_c cos(tau)
    pub c_cos: f64,
    /// avg xi_c cos A sin T
    pub c_cossin: f64,
    /// avg cos A sin T
    pub cossin: f64,
}

pub fn xi_averages(s: &AveragedState, a: f64) -> XiAverages {
    xi_averages_with(s, &BesselTerms::new(a))
}

pub fn xi_averages_with(s: &AveragedState, b: &BesselTerms) -> XiAverages {
    let (sas, cas) = s.alpha_star.sin_cos();
    let (sah, cah) = s.alpha_hat.sin_cos();
    let (stt, ctt) = s.theta_tilde.sin_cos();
    let (s2as, c2as) = (2.0 * s.alpha_star).sin_cos();
    let (s2ah, c2ah) = (2.0 * s.alpha_hat).sin_cos();
    let (s2tt, c2tt) = (2.0 * s.theta_tilde).sin_cos();

    let c = b.j0_s2a * cas * cah * ctt + b.j0_a * sas * sah;
    let c2 = 0.25 * cas * cas * (b.j0_2s2a * c2ah * c2tt + b.j0_2a * (c2ah + c2tt) + 1.0)
        + 0.5 * sas * sas * (1.0 - b.j0_2a * c2ah)
        + 0.5 * b.j0_s5a * s2as * s2ah * ctt;
    let alpha = b.j0_a * cas * sah - b.j0_s2a * sas * cah * ctt;
    let c_alpha = 0.5 * b.j0_s5a * c2as * s2ah * ctt
        - 0.125 * s2as * (b.j0_2s2a * c2ah * c2tt + 3.0 * b.j0_2a * c2ah + b.j0_2a * c2tt - 1.0);
    let c_sin = -b.j1_s2a / SQRT_2 * cas * sah * ctt + b.j1_a * sas * cah;
    let c_cos = -b.j1_s2a / SQRT_2 * cas * cah * stt;
    let c_cossin =
        0.25 * b.j0_2s2a * cas * c2ah * s2tt + 0.25 * b.j0_2a * cas * s2tt + 0.5 * b.j0_s5a * sas * s2ah * stt;
    let cossin = b.j0_s2a * cah * stt;
    XiAverages { c, c2, alpha, c_alpha, c_sin, c_cos, c_cossin, cossin }
}

fn check_regular(s: &AveragedState) -> Result<f64, AveragingError> {
    if s.r_tilde.is_nan() || s.r_tilde <= 0.0 {
        return Err(AveragingError::Singular("r_tilde must be positive"));
    }
    let cas = s.alpha_star.cos();
    if cas.abs() < COS_ALPHA_EPS {
        return Err(AveragingError::Singular("cos(alpha_star) = 0"));
    }
    Ok(cas)
}

/// d/dtau of the averaged error system.
pub fn averaged_rhs(s: &AveragedState, p: &ControllerParams, q_r: f64) -> Result<[f64; 5], AveragingError> {
    averaged_rhs_with(s, p, q_r, &BesselTerms::new(p.a))
}

pub fn averaged_rhs_with(
    s: &AveragedState,
    p: &ControllerParams,
    q_r: f64,
    bt: &BesselTerms,
) -> Result<[f64; 5], AveragingError> {
    let cas = check_regular(s)?;
    let x = xi_averages_with(s, bt);
    let (b, r, w, big_r) = (p.b, s.r_tilde, p.omega, p.sensor_offset);
    // b q_r r^2 + b e_hat - V_c
    let k = b * q_r * r * r + b * s.e_hat - p.v_c;
    let bqr2 = 2.0 * b * q_r * big_r;
    Ok([
        (k * x.c - bqr2 * r * x.c2) / w,
        (k / r * x.alpha - bqr2 * x.c_alpha) / w,
        2.0 * p.c_alpha * q_r * big_r * r * x.c_sin / w,
        (2.0 * p.c_theta * q_r * big_r * r * x.c_cos + bqr2 / cas * x.c_cossin - k / (r * cas) * x.cossin) / w,
        (-p.h * q_r * r * r - p.h * s.e_hat + 2.0 * p.h * q_r * big_r * r * x.c) / w,
    ])
}

/// d/dtau of the un-averaged error system at phase `tau`, the periodic
/// system whose period average [`averaged_rhs`] is.
pub fn error_system_rhs(
    s: &AveragedState,
    tau: f64,
    p: &ControllerParams,
    q_r: f64,
) -> Result<[f64; 5], AveragingError> {
    let cas = check_regular(s)?;
    let sas = s.alpha_star.sin();
    let (st, ct) = tau.sin_cos();
    let big_a = s.alpha_hat + p.a * st;
    let big_t = s.theta_tilde + p.a * ct;
    let (sa, ca) = big_a.sin_cos();
    let (sts, cts) = big_t.sin_cos();
    let r = s.r_tilde;
    let xi_c = ca * cas * cts + sa * sas;
    let xi = -q_r * r * r + 2.0 * q_r * p.sensor_offset * r * xi_c - s.e_hat;
    let speed = p.v_c + p.b * xi;
    let w = p.omega;
    Ok([
        -speed * xi_c / w,
        -speed / (w * r) * (sa * cas - ca * sas * cts),
        p.c_alpha * xi * st / w,
        p.c_theta * xi * ct / w + speed / (w * r * cas) * (ca * sts),
        p.h * xi / w,
    ])
}

/// Closed-form constants that parameterize the equilibria.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConstants {
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    pub rho1: f64,
    pub rho2: f64,
    /// `arccos(-sqrt(1/(2 gamma3)))`, absent when `2 gamma3 < 1`.
    pub mu0: Option<f64>,
    pub e1: f64,
    pub e2: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub phi3: f64,
    pub phi4: f64,
    pub bessel: BesselTerms,
}

/// Evaluates the equilibrium constants.
///
/// `rho1` is `2 J0(sqrt2 a)^2 - phi4 / 2` with
/// `phi4 = J0(2 sqrt2 a) + 2 J0(2a) + 1`: that is the value of `2 J0^2 - 2 avg(xi_c^2)`
/// on the heading-aligned manifold, and the only choice that makes
/// `(gamma1, 0, 0, 0, e1)` a zero of the averaged field. The `phi` factors are
/// the matching normalizations of the eq1 Jacobian entries:
/// `m22 = b q_r R phi1 / 2`, `m23 = b q_r R phi3 / 2`, and `phi2` the
/// `a`-only part of `m44`.
pub fn constants(p: &ControllerParams, q_r: f64) -> Result<AnalysisConstants, AveragingError> {
    let bt = BesselTerms::new(p.a);
    let (b, big_r) = (p.b, p.sensor_offset);
    let j = bt.j0_s2a;

    let phi4 = bt.j0_2s2a + 2.0 * bt.j0_2a + 1.0;
    let phi1 = 2.0 * bt.j0_2a - 2.0;
    let phi2 = bt.j0_2s2a - 1.0;
    if j == 0.0 {
        return Err(AveragingError::Degenerate("J0(sqrt(2) a)"));
    }
    let phi3 = bt.j0_a * phi4 / j - 4.0 * bt.j0_s5a;

    let rho1 = 2.0 * j * j - 0.5 * phi4;
    if rho1 == 0.0 {
        return Err(AveragingError::Degenerate("rho1"));
    }
    if bt.j1_s2a == 0.0 {
        return Err(AveragingError::Degenerate("J1(sqrt(2) a)"));
    }
    let rho2 = SQRT_2 * b * (1.0 - bt.j0_2s2a) / (4.0 * p.c_theta * bt.j1_s2a);
    if rho2 == 0.0 {
        return Err(AveragingError::Degenerate("rho2"));
    }
    if bt.j0_2s2a == 1.0 {
        return Err(AveragingError::Degenerate("J0(2 sqrt(2) a) - 1"));
    }

    let gamma1 = p.v_c * j / (b * q_r * big_r * rho1);
    let gamma2 = 2.0 * j * j + p.v_c * j / (b * q_r * big_r * rho2);
    let gamma3 = (bt.j0_2s2a + bt.j0_2a - gamma2) / (bt.j0_2s2a - 1.0);
    let mu0 = (2.0 * gamma3 >= 1.0).then(|| (-(1.0 / (2.0 * gamma3)).sqrt()).acos());
    let e1 = -(p.v_c * j).powi(2) / (q_r * (b * big_r * rho1).powi(2)) + 2.0 * p.v_c * j * j / (b * rho1);
    let e2 = -2.0 * q_r * gamma3 * rho2 * rho2 - 2.0 * q_r * big_r * rho2 * j;

    Ok(AnalysisConstants { gamma1, gamma2, gamma3, rho1, rho2, mu0, e1, e2, phi1, phi2, phi3, phi4, bessel: bt })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EquilibriumKind {
    Eq1,
    Eq2,
    Eq3,
    Eq4,
}

impl EquilibriumKind {
    pub const ALL: [EquilibriumKind; 4] = [Self::Eq1, Self::Eq2, Self::Eq3, Self::Eq4];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Eq1 => "eq1",
            Self::Eq2 => "eq2",
            Self::Eq3 => "eq3",
            Self::Eq4 => "eq4",
        }
    }
}

/// One of the four candidate equilibria. `exists` is false when the radius
/// would be non-positive or `mu0` is undefined; the state is then still
/// filled with whatever the closed forms give (NaN for an undefined angle).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub kind: EquilibriumKind,
    pub state: AveragedState,
    pub exists: bool,
}

pub fn equilibria(p: &ControllerParams, q_r: f64) -> Result<[Equilibrium; 4], AveragingError> {
    Ok(equilibria_from(&constants(p, q_r)?))
}

pub fn equilibria_from(c: &AnalysisConstants) -> [Equilibrium; 4] {
    let radius3 = c.rho2 * (2.0 * c.gamma3).sqrt();
    let mu0 = c.mu0.unwrap_or(f64::NAN);
    let exists3 = c.mu0.is_some() && radius3 > 0.0;
    [
        Equilibrium {
            kind: EquilibriumKind::Eq1,
            state: AveragedState::new(c.gamma1, 0.0, 0.0, 0.0, c.e1),
            exists: c.gamma1 > 0.0,
        },
        Equilibrium {
            kind: EquilibriumKind::Eq2,
            state: AveragedState::new(-c.gamma1, 0.0, 0.0, PI, c.e1),
            exists: -c.gamma1 > 0.0,
        },
        Equilibrium {
            kind: EquilibriumKind::Eq3,
            state: AveragedState::new(radius3, 0.0, 0.0, mu0, c.e2),
            exists: exists3,
        },
        Equilibrium {
            kind: EquilibriumKind::Eq4,
            state: AveragedState::new(radius3, 0.0, 0.0, -mu0, c.e2),
            exists: exists3,
        },
    ]
}

/// Euclidean norm of the averaged field at `s`.
pub fn residual(s: &AveragedState, p: &ControllerParams, q_r: f64) -> Result<f64, AveragingError> {
    Ok(averaged_rhs(s, p, q_r)?.iter().map(|v| v * v).sum::<f64>().sqrt())
}

/// One recorded sample of an averaged trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AveragedSample {
    pub tau: f64,
    #[serde(flatten)]
    pub state: AveragedState,
}

/// Fixed-step RK4 on the averaged field in `tau`, recording every
/// `stride`-th step and the final one.
pub fn integrate_averaged(
    s0: &AveragedState,
    p: &ControllerParams,
    q_r: f64,
    dtau: f64,
    tau_end: f64,
    stride: usize,
) -> Result<Vec<AveragedSample>, AveragingError> {
    if !(dtau > 0.0 && dtau.is_finite()) {
        return Err(AveragingError::Invalid(format!("dtau must be positive, got {dtau}")));
    }
    if !(tau_end >= 0.0 && tau_end.is_finite()) {
        return Err(AveragingError::Invalid(format!("tau_end must be non-negative, got {tau_end}")));
    }
    if stride == 0 {
        return Err(AveragingError::Invalid("stride must be at least 1".into()));
    }
    let bt = BesselTerms::new(p.a);
    let f = |x: &[f64; 5]| averaged_rhs_with(&AveragedState::from_array(*x), p, q_r, &bt);
    let n = (tau_end / dtau + 1e-9).floor() as usize;
    let mut x = s0.to_array();
    let mut out = vec![AveragedSample { tau: 0.0, state: *s0 }];
    for k in 1..=n {
        let k1 = f(&x)?;
        let k2 = f(&std::array::from_fn(|i| x[i] + 0.5 * dtau * k1[i]))?;
        let k3 = f(&std::array::from_fn(|i| x[i] + 0.5 * dtau * k2[i]))?;
        let k4 = f(&std::array::from_fn(|i| x[i] + dtau * k3[i]))?;
        x = std::array::from_fn(|i| x[i] + dtau / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
        let tau = k as f64 * dtau;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(AveragingError::NonFinite(tau));
        }
        if k % stride == 0 || k == n {
            out.push(AveragedSample { tau, state: AveragedState::from_array(x) });
        }
    }
    Ok(out)
}
