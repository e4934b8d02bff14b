//! Local stability of the averaged equilibria.
//!
//! The eq1/eq2 Jacobians are known in closed form and split into a 2×2
//! `(alpha_star, alpha_hat)` block, a scalar `theta_tilde` block and a 2×2
//! `(r_tilde, e_hat)` block. The eq3/eq4 Jacobians are only available
//! numerically; they split into the same 2×2 angle block and a 3×3
//! `(r_tilde, theta_tilde, e_hat)` block. Roots are always taken from these
//! blocks in closed form.
//!
//! Polynomials and roots are expressed in the variable `omega s`, so the
//! eigenvalues reported are rates per second and do not depend on `omega`.

pub mod roots;

use std::f64::consts::SQRT_2;

use nalgebra::Matrix5;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::averaging::{
    averaged_rhs, constants, equilibria_from, residual, AnalysisConstants, AveragedState, AveragingError, Equilibrium,
    EquilibriumKind,
};
use crate::controller::ControllerParams;
pub use roots::C64;

/// Eigenvalues with `|Re| <= HURWITZ_MARGIN` are classified as marginal.
pub const HURWITZ_MARGIN: f64 = 1e-8;

/// Relative finite-difference step, floored at the same absolute value.
pub const FD_STEP: f64 = 1e-6;

/// Pitch amplitudes covered by the heading-away corollary.
pub const S_A1: (f64, f64) = (1.25, 1.65);
/// Pitch amplitudes covered by the heading-toward corollary.
pub const S_A2: (f64, f64) = (1.75, 2.5);

/// Indices of the angle block and of the radial block.
const ANGLE_BLOCK: [usize; 2] = [1, 2];
const RADIAL_BLOCK: [usize; 3] = [0, 3, 4];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StabilityError {
    #[error(transparent)]
    Averaging(#[from] AveragingError),
    #[error("equilibrium {0} does not exist for these parameters")]
    Missing(&'static str),
}

impl StabilityError {
    fn missing(kind: EquilibriumKind) -> Self {
        Self::Missing(kind.name())
    }
}

/// The eight nonzero eq1 entries other than `-h`, before the `1/omega` factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eq1Entries {
    pub m11: f64,
    pub m15: f64,
    pub m22: f64,
    pub m23: f64,
    pub m32: f64,
    pub m33: f64,
    pub m44: f64,
    pub m51: f64,
    pub h: f64,
}

impl Eq1Entries {
    /// Assembled Jacobian, including the `1/omega` factor. `Eq2` flips the
    /// sign of entries (1,5), (2,3), (3,2) and (5,1).
    pub fn matrix(&self, kind: EquilibriumKind, omega: f64) -> Matrix5<f64> {
        let s = match kind {
            EquilibriumKind::Eq2 => -1.0,
            _ => 1.0,
        };
        let mut m = Matrix5::zeros();
        m[(0, 0)] = self.m11;
        m[(0, 4)] = s * self.m15;
        m[(1, 1)] = self.m22;
        m[(1, 2)] = s * self.m23;
        m[(2, 1)] = s * self.m32;
        m[(2, 2)] = self.m33;
        m[(3, 3)] = self.m44;
        m[(4, 0)] = s * self.m51;
        m[(4, 4)] = -self.h;
        m / omega
    }
}

pub fn jacobian_eq1_analytic(p: &ControllerParams, q_r: f64) -> Result<Eq1Entries, StabilityError> {
    Ok(eq1_entries(p, q_r, &constants(p, q_r)?))
}

pub fn eq1_entries(p: &ControllerParams, q_r: f64, c: &AnalysisConstants) -> Eq1Entries {
    let bt = &c.bessel;
    let j = bt.j0_s2a;
    let (b, r, v) = (p.b, p.sensor_offset, p.v_c);
    let bqr = b * q_r * r;
    let vj = v * j / (b * c.rho1);
    Eq1Entries {
        m11: 2.0 * v * j * j / (r * c.rho1) - 0.5 * bqr * c.phi4,
        m15: b * j,
        m22: 0.5 * bqr * c.phi1,
        m23: 0.5 * bqr * c.phi3,
        m32: 2.0 * p.c_alpha * vj * bt.j1_a,
        m33: -SQRT_2 * p.c_alpha * vj * bt.j1_s2a,
        m44: -SQRT_2 * p.c_theta * vj * bt.j1_s2a + 0.5 * bqr * c.phi2,
        m51: -2.0 * p.h * vj / r + 2.0 * p.h * q_r * r * j,
        h: p.h,
    }
}

/// Central-difference Jacobian of [`averaged_rhs`] at an existing equilibrium.
pub fn jacobian_numeric(eq: &Equilibrium, p: &ControllerParams, q_r: f64) -> Result<Matrix5<f64>, StabilityError> {
    if !eq.exists {
        return Err(StabilityError::missing(eq.kind));
    }
    jacobian_at(&eq.state, p, q_r)
}

/// Central-difference Jacobian of [`averaged_rhs`] at any regular state.
pub fn jacobian_at(s: &AveragedState, p: &ControllerParams, q_r: f64) -> Result<Matrix5<f64>, StabilityError> {
    let x = s.to_array();
    let mut jac = Matrix5::zeros();
    for i in 0..5 {
        let step = FD_STEP.max(FD_STEP * x[i].abs());
        let (mut hi, mut lo) = (x, x);
        hi[i] += step;
        lo[i] -= step;
        let fh = averaged_rhs(&AveragedState::from_array(hi), p, q_r)?;
        let fl = averaged_rhs(&AveragedState::from_array(lo), p, q_r)?;
        for k in 0..5 {
            jac[(k, i)] = (fh[k] - fl[k]) / (hi[i] - lo[i]);
        }
    }
    Ok(jac)
}

/// Factored characteristic polynomial of the eq1 (and eq2) Jacobian in `omega s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicEq1 {
    /// `(omega s)^2 + q1[0] (omega s) + q1[1]`, the angle block.
    pub quadratic1: [f64; 2],
    /// `omega s + linear`, the heading block.
    pub linear: f64,
    /// `(omega s)^2 + q2[0] (omega s) + q2[1]`, the distance/filter block.
    pub quadratic2: [f64; 2],
}

impl CharacteristicEq1 {
    pub fn eval(&self, z: C64) -> C64 {
        roots::eval_monic(&self.quadratic1, z)
            * roots::eval_monic(&[self.linear], z)
            * roots::eval_monic(&self.quadratic2, z)
    }

    /// Expanded monic degree-5 coefficients, leading one omitted.
    pub fn coefficients(&self) -> [f64; 5] {
        let c = roots::mul_monic(&roots::mul_monic(&self.quadratic1, &[self.linear]), &self.quadratic2);
        [c[0], c[1], c[2], c[3], c[4]]
    }

    pub fn roots(&self) -> [C64; 5] {
        let [a, b] = roots::quadratic(self.quadratic1[0], self.quadratic1[1]);
        let [c, d] = roots::quadratic(self.quadratic2[0], self.quadratic2[1]);
        [a, b, C64::new(-self.linear, 0.0), c, d]
    }
}

pub fn characteristic_eq1(m: &Eq1Entries) -> CharacteristicEq1 {
    CharacteristicEq1 {
        quadratic1: [-(m.m22 + m.m33), m.m22 * m.m33 - m.m23 * m.m32],
        linear: -m.m44,
        quadratic2: [m.h - m.m11, -m.m11 * m.h - m.m15 * m.m51],
    }
}

/// Monic characteristic polynomial of a 5×5 matrix by Faddeev-LeVerrier,
/// leading one omitted.
pub fn charpoly(a: &Matrix5<f64>) -> [f64; 5] {
    let mut c = [0.0; 5];
    let mut m = Matrix5::<f64>::zeros();
    let id = Matrix5::<f64>::identity();
    let mut prev = 1.0;
    for k in 1..=5 {
        m = a * m + prev * id;
        let am = a * m;
        let ck = -am.trace() / k as f64;
        c[k - 1] = ck;
        prev = ck;
    }
    c
}

/// Roots of `omega * jac` taken blockwise: the `(alpha_star, alpha_hat)` 2×2
/// block and the `(r_tilde, theta_tilde, e_hat)` 3×3 block. `coupling` is the
/// largest off-block magnitude of `omega * jac`, which the split assumes
/// negligible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockRoots {
    pub roots: [C64; 5],
    pub coupling: f64,
}

pub fn block_roots(jac: &Matrix5<f64>, omega: f64) -> BlockRoots {
    let l = jac * omega;
    let [i, j] = ANGLE_BLOCK;
    let [a, b] = roots::quadratic(-(l[(i, i)] + l[(j, j)]), l[(i, i)] * l[(j, j)] - l[(i, j)] * l[(j, i)]);
    let k = cubic_coeffs(&l);
    let [c, d, e] = roots::cubic(k[0], k[1], k[2]);
    let mut coupling: f64 = 0.0;
    for r in ANGLE_BLOCK {
        for col in RADIAL_BLOCK {
            coupling = coupling.max(l[(r, col)].abs()).max(l[(col, r)].abs());
        }
    }
    BlockRoots { roots: [a, b, c, d, e], coupling }
}

/// `(k1, k2, k3)` of the radial 3×3 block of `l`, using its own (5,5) entry.
fn cubic_coeffs(l: &Matrix5<f64>) -> [f64; 3] {
    let e = |r: usize, c: usize| l[(RADIAL_BLOCK[r], RADIAL_BLOCK[c])];
    let trace = e(0, 0) + e(1, 1) + e(2, 2);
    let minors = e(0, 0) * e(1, 1) - e(0, 1) * e(1, 0) + e(0, 0) * e(2, 2) - e(0, 2) * e(2, 0) + e(1, 1) * e(2, 2)
        - e(1, 2) * e(2, 1);
    let det = e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1)) - e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0))
        + e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0));
    [-trace, minors, -det]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Hurwitz,
    NotHurwitz,
    Marginal,
}

pub fn max_real(roots: &[C64]) -> f64 {
    roots.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

pub fn classify(roots: &[C64]) -> Verdict {
    let m = max_real(roots);
    if m < -HURWITZ_MARGIN {
        Verdict::Hurwitz
    } else if m > HURWITZ_MARGIN {
        Verdict::NotHurwitz
    } else {
        Verdict::Marginal
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eq1Hurwitz {
    /// Routh-Hurwitz conditions on the three factors, in factor order:
    /// `m22+m33<0`, `m22 m33 - m23 m32 > 0`, `m44<0`, `h-m11>0`, `-m11 h - m15 m51 > 0`.
    pub raw: [bool; 5],
    /// The same conditions rewritten in Bessel terms, in the order
    /// pitch gain, yaw gain, bias speed, `a`-only angle block, `a`-only radial block.
    pub explicit: [bool; 5],
    pub verdict: bool,
}

pub fn hurwitz_eq1(p: &ControllerParams, q_r: f64) -> Result<Eq1Hurwitz, StabilityError> {
    let c = constants(p, q_r)?;
    Ok(hurwitz_eq1_from(p, q_r, &c))
}

pub fn hurwitz_eq1_from(p: &ControllerParams, q_r: f64, c: &AnalysisConstants) -> Eq1Hurwitz {
    let m = eq1_entries(p, q_r, c);
    let raw = [
        m.m22 + m.m33 < 0.0,
        m.m22 * m.m33 - m.m23 * m.m32 > 0.0,
        m.m44 < 0.0,
        m.h - m.m11 > 0.0,
        -m.m11 * m.h - m.m15 * m.m51 > 0.0,
    ];
    let bt = &c.bessel;
    let j = bt.j0_s2a;
    let (b, r, v) = (p.b, p.sensor_offset, p.v_c);
    let gain_rhs = 2.0 * SQRT_2 * v * j / c.rho1 * bt.j1_s2a;
    let explicit = [
        b * b * q_r * r * c.phi1 < p.c_alpha * gain_rhs,
        b * b * q_r * r * c.phi2 < p.c_theta * gain_rhs,
        2.0 * v * j * j / c.rho1 < p.h * r + 0.5 * b * q_r * r * r * c.phi4,
        j / c.rho1 * (0.5 * SQRT_2 * c.phi1 * bt.j1_s2a + c.phi3 * bt.j1_a) < 0.0,
        4.0 * j * j - c.phi4 < 0.0,
    ];
    Eq1Hurwitz { raw, explicit, verdict: raw.iter().all(|&x| x) }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eq3Hurwitz {
    /// `omega` times the numeric eq3 Jacobian.
    pub l: [[f64; 5]; 5],
    pub k: [f64; 3],
    /// `l22+l33<0`, `l22 l33 - l23 l32 > 0`, `k1>0`, `k2>0`, `k3>0`, `k1 k2 - k3 > 0`.
    pub conditions: [bool; 6],
    pub verdict: bool,
}

pub fn hurwitz_eq3(p: &ControllerParams, q_r: f64) -> Result<Eq3Hurwitz, StabilityError> {
    let eqs = equilibria_from(&constants(p, q_r)?);
    hurwitz_eq3_at(&eqs[2], p, q_r)
}

fn hurwitz_eq3_at(eq: &Equilibrium, p: &ControllerParams, q_r: f64) -> Result<Eq3Hurwitz, StabilityError> {
    let jac = jacobian_numeric(eq, p, q_r)?;
    let l = jac * p.omega;
    let h = p.h;
    let g = |r: usize, c: usize| l[(r - 1, c - 1)];
    let k1 = h - g(1, 1) - g(4, 4);
    let k2 = g(1, 1) * g(4, 4) - g(1, 1) * h - g(4, 4) * h - g(4, 5) * g(5, 4) - g(1, 4) * g(4, 1) - g(1, 5) * g(5, 1);
    let k3 = g(1, 1) * g(4, 4) * h - g(1, 4) * g(4, 1) * h + g(1, 1) * g(4, 5) * g(5, 4) + g(1, 5) * g(4, 4) * g(5, 1)
        - g(1, 4) * g(4, 5) * g(5, 1)
        - g(1, 5) * g(4, 1) * g(5, 4);
    let conditions = [
        g(2, 2) + g(3, 3) < 0.0,
        g(2, 2) * g(3, 3) - g(2, 3) * g(3, 2) > 0.0,
        k1 > 0.0,
        k2 > 0.0,
        k3 > 0.0,
        k1 * k2 - k3 > 0.0,
    ];
    let mut rows = [[0.0; 5]; 5];
    for (r, row) in rows.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = l[(r, c)];
        }
    }
    Ok(Eq3Hurwitz { l: rows, k: [k1, k2, k3], conditions, verdict: conditions.iter().all(|&x| x) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorollaryGate {
    pub corollary1: bool,
    pub corollary2: bool,
    /// Upper bound on the bias speed, given when `a` lies in the heading-away interval.
    pub vc_bar: Option<f64>,
}

pub fn in_interval(a: f64, (lo, hi): (f64, f64)) -> bool {
    (lo..=hi).contains(&a)
}

pub fn corollary_gate(p: &ControllerParams, q_r: f64) -> CorollaryGate {
    let corollary1 = in_interval(p.a, S_A2);
    let vc_bar = in_interval(p.a, S_A1).then(|| vc_bar(p, q_r)).flatten();
    CorollaryGate { corollary1, corollary2: vc_bar.is_some_and(|bar| p.v_c < bar), vc_bar }
}

/// `sqrt2 b^2 q_r R / (4 J0(sqrt2 a) J1(sqrt2 a)) * min(phi1 rho1 / c_alpha, phi2 rho1 / c_theta)`.
pub fn vc_bar(p: &ControllerParams, q_r: f64) -> Option<f64> {
    let c = constants(p, q_r).ok()?;
    let bt = &c.bessel;
    let lead = SQRT_2 * p.b * p.b * q_r * p.sensor_offset / (4.0 * bt.j0_s2a * bt.j1_s2a);
    let bar = lead * (c.phi1 * c.rho1 / p.c_alpha).min(c.phi2 * c.rho1 / p.c_theta);
    bar.is_finite().then_some(bar)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Root {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for Root {
    fn from(z: C64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobianReport {
    pub kind: EquilibriumKind,
    /// Jacobian of the averaged field, including the `1/omega` factor.
    pub entries: [[f64; 5]; 5],
    pub analytic_entries: Option<Eq1Entries>,
    /// Eigenvalues of `omega * entries`.
    pub roots: Vec<Root>,
    pub verdict: Verdict,
    pub hurwitz: bool,
    /// Smallest `|Re|` over the roots.
    pub margin: f64,
    pub max_real: f64,
}

impl JacobianReport {
    fn new(kind: EquilibriumKind, jac: &Matrix5<f64>, analytic: Option<Eq1Entries>, roots: [C64; 5]) -> Self {
        let mut entries = [[0.0; 5]; 5];
        for (r, row) in entries.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = jac[(r, c)];
            }
        }
        let verdict = classify(&roots);
        Self {
            kind,
            entries,
            analytic_entries: analytic,
            roots: roots.iter().copied().map(Root::from).collect(),
            verdict,
            hurwitz: verdict == Verdict::Hurwitz,
            margin: roots.iter().map(|z| z.re.abs()).fold(f64::INFINITY, f64::min),
            max_real: max_real(&roots),
        }
    }
}

/// Jacobian report for one equilibrium: closed form for eq1/eq2, finite
/// differences for eq3/eq4.
pub fn jacobian_report(eq: &Equilibrium, p: &ControllerParams, q_r: f64) -> Result<JacobianReport, StabilityError> {
    if !eq.exists {
        return Err(StabilityError::missing(eq.kind));
    }
    match eq.kind {
        EquilibriumKind::Eq1 | EquilibriumKind::Eq2 => {
            let m = jacobian_eq1_analytic(p, q_r)?;
            let jac = m.matrix(eq.kind, p.omega);
            Ok(JacobianReport::new(eq.kind, &jac, Some(m), characteristic_eq1(&m).roots()))
        }
        EquilibriumKind::Eq3 | EquilibriumKind::Eq4 => {
            let jac = jacobian_numeric(eq, p, q_r)?;
            Ok(JacobianReport::new(eq.kind, &jac, None, block_roots(&jac, p.omega).roots))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    #[serde(flatten)]
    pub equilibrium: Equilibrium,
    /// Norm of the averaged field at the state, when it exists.
    pub residual: Option<f64>,
    pub jacobian: Option<JacobianReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub params: ControllerParams,
    pub q_r: f64,
    pub constants: AnalysisConstants,
    pub equilibria: Vec<EquilibriumReport>,
    pub hurwitz_eq1: Eq1Hurwitz,
    pub hurwitz_eq3: Option<Eq3Hurwitz>,
    pub corollary: CorollaryGate,
}

/// Constants, equilibria, Jacobians and gates for one parameter set.
pub fn analyze(p: &ControllerParams, q_r: f64) -> Result<StabilityReport, StabilityError> {
    let c = constants(p, q_r)?;
    let eqs = equilibria_from(&c);
    let mut equilibria = Vec::with_capacity(4);
    for eq in eqs {
        let (res, jac) = if eq.exists {
            (Some(residual(&eq.state, p, q_r)?), Some(jacobian_report(&eq, p, q_r)?))
        } else {
            (None, None)
        };
        equilibria.push(EquilibriumReport { equilibrium: eq, residual: res, jacobian: jac });
    }
    let hurwitz_eq3 = if eqs[2].exists { Some(hurwitz_eq3_at(&eqs[2], p, q_r)?) } else { None };
    Ok(StabilityReport {
        params: *p,
        q_r,
        constants: c,
        equilibria,
        hurwitz_eq1: hurwitz_eq1_from(p, q_r, &c),
        hurwitz_eq3,
        corollary: corollary_gate(p, q_r),
    })
}
