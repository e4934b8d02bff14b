//! Test-only oracles and samplers shared by the integration suites.
#![allow(dead_code)]

use std::f64::consts::{PI, TAU};

use nalgebra::{Complex, Matrix5};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use srcseek::{AveragedState, ControllerParams};

pub const SEED: u64 = 0x5eed_50c3;

pub fn rng() -> StdRng {
    StdRng::seed_from_u64(SEED)
}

pub fn preset_params(a: f64, v_c: f64) -> ControllerParams {
    ControllerParams { a, c_alpha: 100.0, c_theta: 100.0, b: 5.0, h: 10.0, v_c, omega: 40.0, sensor_offset: 0.1 }
}

/// Parameter set with `a` given and the rest uniform over the sampling box,
/// `V_c` log-uniform. Returns `(params, q_r)`.
pub fn sample_params(rng: &mut StdRng, a: f64) -> (ControllerParams, f64) {
    let p = ControllerParams {
        a,
        c_alpha: rng.random_range(1.0..=200.0),
        c_theta: rng.random_range(1.0..=200.0),
        b: rng.random_range(0.5..=10.0),
        h: rng.random_range(1.0..=20.0),
        v_c: 10f64.powf(rng.random_range(-4.0..=0.0)),
        omega: 40.0,
        sensor_offset: rng.random_range(0.01..=0.5),
    };
    (p, rng.random_range(0.1..=5.0))
}

pub fn sample_state(rng: &mut StdRng) -> AveragedState {
    AveragedState::new(
        rng.random_range(0.05..=5.0),
        rng.random_range(-1.2..=1.2),
        rng.random_range(-1.2..=1.2),
        rng.random_range(-PI..=PI),
        rng.random_range(-2.0..=2.0),
    )
}

/// Composite trapezoid over one period; spectrally accurate for smooth
/// periodic integrands.
pub fn period_mean(n: usize, f: impl Fn(f64) -> f64) -> f64 {
    (0..n).map(|i| f(TAU * i as f64 / n as f64)).sum::<f64>() / n as f64
}

pub const QUADRATURE_NODES: usize = 4096;

/// Brute-force averages of the eight trigonometric groups, in the order
/// c, c2, alpha, c_alpha, c_sin, c_cos, c_cossin, cossin.
pub fn brute_force_averages(s: &AveragedState, a: f64) -> [f64; 8] {
    let (sas, cas) = s.alpha_star.sin_cos();
    let parts = |tau: f64| {
        let big_a = s.alpha_hat + a * tau.sin();
        let big_t = s.theta_tilde + a * tau.cos();
        let xc = big_a.cos() * cas * big_t.cos() + big_a.sin() * sas;
        let xa = big_a.sin() * cas - big_a.cos() * sas * big_t.cos();
        let cs = big_a.cos() * big_t.sin();
        (xc, xa, cs, tau)
    };
    let n = QUADRATURE_NODES;
    [
        period_mean(n, |t| parts(t).0),
        period_mean(n, |t| parts(t).0.powi(2)),
        period_mean(n, |t| parts(t).1),
        period_mean(n, |t| parts(t).0 * parts(t).1),
        period_mean(n, |t| parts(t).0 * parts(t).3.sin()),
        period_mean(n, |t| parts(t).0 * parts(t).3.cos()),
        period_mean(n, |t| parts(t).0 * parts(t).2),
        period_mean(n, |t| parts(t).2),
    ]
}

/// Brute-force period average of the un-averaged error system, written out
/// independently of the library.
pub fn brute_force_rhs(s: &AveragedState, p: &ControllerParams, q_r: f64) -> [f64; 5] {
    let (sas, cas) = s.alpha_star.sin_cos();
    let r = s.r_tilde;
    let field = |tau: f64| -> [f64; 5] {
        let big_a = s.alpha_hat + p.a * tau.sin();
        let big_t = s.theta_tilde + p.a * tau.cos();
        let xc = big_a.cos() * cas * big_t.cos() + big_a.sin() * sas;
        let xi = -q_r * r * r + 2.0 * q_r * p.sensor_offset * r * xc - s.e_hat;
        let v = p.v_c + p.b * xi;
        [
            -v * xc,
            -v / r * (big_a.sin() * cas - big_a.cos() * sas * big_t.cos()),
            p.c_alpha * xi * tau.sin(),
            p.c_theta * xi * tau.cos() + v / (r * cas) * big_a.cos() * big_t.sin(),
            p.h * xi,
        ]
    };
    std::array::from_fn(|k| period_mean(QUADRATURE_NODES, |t| field(t)[k]) / p.omega)
}

/// General dense eigenvalues, for cross-checking block-structured roots.
pub fn eigenvalues(m: &Matrix5<f64>) -> Vec<Complex<f64>> {
    m.complex_eigenvalues().iter().copied().collect()
}

pub fn max_re(v: &[Complex<f64>]) -> f64 {
    v.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

pub fn min_abs_re(v: &[Complex<f64>]) -> f64 {
    v.iter().map(|z| z.re.abs()).fold(f64::INFINITY, f64::min)
}

/// Sorts by real then imaginary part.
pub fn sorted(mut v: Vec<Complex<f64>>) -> Vec<Complex<f64>> {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    v
}
