//! Acceptance criteria A1-A12. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

mod common;

use std::f64::consts::PI;
use std::process::ExitCode;

use common::{eigenvalues, max_re, preset_params, rng, sample_params, sample_state};
use rand::Rng;
use srcseek::averaging::{equilibria, residual, xi_averages, EquilibriumKind};
use srcseek::cli::{Preset, ScenarioConfig};
use srcseek::simulator::{self, period_means, wrap_angle, PeriodMeans, SimConfig, Trajectory};
use srcseek::stability::{
    characteristic_eq1, charpoly, corollary_gate, hurwitz_eq1, hurwitz_eq3, in_interval, jacobian_eq1_analytic,
    jacobian_numeric, HURWITZ_MARGIN, S_A1, S_A2,
};

const A1_TOL: f64 = 1e-8;
const A2_TOL: f64 = 1e-9;
const A3_REL_TOL: f64 = 1e-6;
const A3_PATTERN_TOL: f64 = 1e-7;
const A4_PRODUCT_TOL: f64 = 1e-8;
const A4_POLY_TOL: f64 = 1e-10;
const SETTLE_WINDOW: usize = 10;
const RADIUS_BAND: f64 = 0.5;
const OMEGA_ALLOWANCE: f64 = 5.0;
const ALPHA_MAX: f64 = 0.2;
const HEADING_BAND: f64 = 0.3;
const A10_MIN_RATIO: f64 = 1.5;
const A11_FRACTION: f64 = 0.2;
const A12_ORDER: (f64, f64) = (3.5, 4.5);

// Horizons long enough for the averaged dynamics (slowest rate ~0.003/s) to settle.
const A7_T_END: f64 = 600.0;
const A8_T_END: f64 = 2000.0;
const A9_T_END: f64 = 2000.0;
const A10_T_END: f64 = 2000.0;
const A11_T_END: f64 = 300.0;
const A12_PERIODS: f64 = 5.0;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Draws `a` uniformly from the union of the two corollary intervals.
fn sample_interval_a(rng: &mut impl Rng) -> f64 {
    let (l1, l2) = (S_A1.1 - S_A1.0, S_A2.1 - S_A2.0);
    let u = rng.random_range(0.0..l1 + l2);
    if u < l1 {
        S_A1.0 + u
    } else {
        S_A2.0 + (u - l1)
    }
}

fn a1() -> Outcome {
    let mut rng = rng();
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let s = sample_state(&mut rng);
        let a = rng.random_range(0.5..=2.7);
        let x = xi_averages(&s, a);
        let got = [x.c, x.c2, x.alpha, x.c_alpha, x.c_sin, x.c_cos, x.c_cossin, x.cossin];
        for (g, w) in got.iter().zip(common::brute_force_averages(&s, a)) {
            worst = worst.max((g - w).abs());
        }
    }
    check(worst < A1_TOL, format!("100 states, max |closed form - quadrature| = {worst:.2e} (tol {A1_TOL:e})"))
}

fn a2() -> Outcome {
    let mut rng = rng();
    let (mut worst, mut count) = (0.0f64, 0);
    for _ in 0..50 {
        let a = sample_interval_a(&mut rng);
        let (p, q_r) = sample_params(&mut rng, a);
        for eq in equilibria(&p, q_r).map_err(|e| e.to_string())? {
            if eq.exists {
                worst = worst.max(residual(&eq.state, &p, q_r).map_err(|e| e.to_string())?);
                count += 1;
            }
        }
    }
    check(worst < A2_TOL, format!("50 sets, {count} equilibria, max residual = {worst:.2e} (tol {A2_TOL:e})"))
}

/// Entry-wise relative error with a floor for structurally small entries.
fn rel_err(x: f64, y: f64, scale: f64) -> f64 {
    (x - y).abs() / x.abs().max(1e-6 * scale)
}

fn a3() -> Outcome {
    let mut rng = rng();
    let mut worst_rel = 0.0f64;
    let mut sets = 0;
    while sets < 20 {
        let a = rng.random_range(S_A2.0..=S_A2.1);
        let (p, q_r) = if sets == 0 { (preset_params(2.0, 0.001), 1.0) } else { sample_params(&mut rng, a) };
        let eq = equilibria(&p, q_r).map_err(|e| e.to_string())?[0];
        if !eq.exists {
            continue;
        }
        let an = jacobian_eq1_analytic(&p, q_r).map_err(|e| e.to_string())?.matrix(EquilibriumKind::Eq1, p.omega);
        let fd = jacobian_numeric(&eq, &p, q_r).map_err(|e| e.to_string())?;
        let scale = an.amax();
        for (x, y) in an.iter().zip(fd.iter()) {
            worst_rel = worst_rel.max(rel_err(*x, *y, scale));
        }
        sets += 1;
    }

    let flips = [(0, 3), (3, 0), (3, 4), (4, 3)];
    let block = |i: usize| matches!(i, 1 | 2);
    let mut worst_pattern = 0.0f64;
    let mut eq3_sets = 0;
    for _ in 0..400 {
        if eq3_sets == 20 {
            break;
        }
        let a = rng.random_range(1.0..1.69);
        let (p, q_r) = if eq3_sets == 0 { (preset_params(1.5, 0.1), 1.0) } else { sample_params(&mut rng, a) };
        let eqs = equilibria(&p, q_r).map_err(|e| e.to_string())?;
        if !eqs[2].exists {
            continue;
        }
        let j3 = jacobian_numeric(&eqs[2], &p, q_r).map_err(|e| e.to_string())?;
        let j4 = jacobian_numeric(&eqs[3], &p, q_r).map_err(|e| e.to_string())?;
        let scale = j3.amax().max(j4.amax());
        for i in 0..5 {
            for j in 0..5 {
                let dev = if block(i) != block(j) {
                    j3[(i, j)].abs().max(j4[(i, j)].abs())
                } else {
                    let s = if flips.contains(&(i, j)) { -1.0 } else { 1.0 };
                    (j4[(i, j)] - s * j3[(i, j)]).abs()
                };
                worst_pattern = worst_pattern.max(dev / scale);
            }
        }
        eq3_sets += 1;
    }
    check(
        worst_rel < A3_REL_TOL && worst_pattern < A3_PATTERN_TOL && eq3_sets == 20,
        format!(
            "eq1 analytic vs FD over {sets} sets: max rel err {worst_rel:.2e} (tol {A3_REL_TOL:e}); \
             eq3/eq4 pattern over {eq3_sets} sets: max scaled dev {worst_pattern:.2e} (tol {A3_PATTERN_TOL:e})"
        ),
    )
}

fn a4() -> Outcome {
    let mut rng = rng();
    let (mut worst_raw, mut worst_unitless, mut worst_poly) = (0.0f64, 0.0f64, 0.0f64);
    let scenarios = [preset_params(2.0, 0.001), preset_params(1.5, 0.001), preset_params(1.5, 0.1)];
    for k in 0..scenarios.len() + 50 {
        let (p, q_r) = match scenarios.get(k) {
            Some(p) => (*p, 1.0),
            None => {
                let a = sample_interval_a(&mut rng);
                sample_params(&mut rng, a)
            }
        };
        let m = jacobian_eq1_analytic(&p, q_r).map_err(|e| e.to_string())?;
        let ch = characteristic_eq1(&m);
        let j1 = m.matrix(EquilibriumKind::Eq1, p.omega) * p.omega;
        let j2 = m.matrix(EquilibriumKind::Eq2, p.omega) * p.omega;
        let eig = eigenvalues(&j1);
        // The product carries units of rate^5; measure rates in units of the spectral radius.
        let rho = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for z in eig {
            let r = ch.eval(z).norm();
            if k < scenarios.len() {
                worst_raw = worst_raw.max(r);
            }
            worst_unitless = worst_unitless.max(r / rho.powi(5));
        }
        let (c1, c2) = (charpoly(&j1), charpoly(&j2));
        for i in 0..5 {
            worst_poly = worst_poly.max((c1[i] - c2[i]).abs() / (1.0 + c1[i].abs()));
        }
    }
    check(
        worst_unitless < A4_PRODUCT_TOL && worst_poly < A4_POLY_TOL,
        format!(
            "3 scenario + 50 random sets: max factor product at eigenvalue {worst_unitless:.2e} in spectral-radius \
             units (tol {A4_PRODUCT_TOL:e}; scenario sets in 1/s: {worst_raw:.2e}); \
             max eq1/eq2 coefficient gap {worst_poly:.2e} (tol {A4_POLY_TOL:e})"
        ),
    )
}

fn a5() -> Outcome {
    let mut rng = rng();
    let (mut agree, mut used, mut excluded, mut mismatches) = (0, 0, 0, Vec::new());
    for _ in 0..200 {
        let a = rng.random_range(0.5..=2.7);
        let (p, q_r) = sample_params(&mut rng, a);
        let Ok(h) = hurwitz_eq1(&p, q_r) else {
            excluded += 1;
            continue;
        };
        let eqs = equilibria(&p, q_r).map_err(|e| e.to_string())?;
        let Some(eq) = eqs[..2].iter().find(|e| e.exists) else {
            excluded += 1;
            continue;
        };
        let jac = jacobian_numeric(eq, &p, q_r).map_err(|e| e.to_string())? * p.omega;
        let m = max_re(&eigenvalues(&jac));
        if m.abs() < HURWITZ_MARGIN {
            excluded += 1;
            continue;
        }
        used += 1;
        if h.verdict == (m < 0.0) {
            agree += 1;
        } else {
            mismatches.push(format!("a={a:.4} max_re={m:.3e}"));
        }
    }

    let (mut agree3, mut used3, mut tries) = (0, 0, 0);
    while used3 < 100 && tries < 5000 {
        tries += 1;
        let a = rng.random_range(0.5..=2.7);
        let (p, q_r) = sample_params(&mut rng, a);
        let Ok(eqs) = equilibria(&p, q_r) else { continue };
        if !eqs[2].exists {
            continue;
        }
        let Ok(h) = hurwitz_eq3(&p, q_r) else { continue };
        let jac = jacobian_numeric(&eqs[2], &p, q_r).map_err(|e| e.to_string())? * p.omega;
        let m = max_re(&eigenvalues(&jac));
        if m.abs() < HURWITZ_MARGIN {
            continue;
        }
        used3 += 1;
        if h.verdict == (m < 0.0) {
            agree3 += 1;
        } else {
            mismatches.push(format!("eq3 a={a:.4} max_re={m:.3e}"));
        }
    }
    check(
        agree == used && agree3 == used3 && used3 == 100,
        format!(
            "eq1: {agree}/{used} agree ({excluded} excluded); eq3: {agree3}/{used3} agree{}",
            if mismatches.is_empty() { String::new() } else { format!("; mismatches: {}", mismatches.join(", ")) }
        ),
    )
}

fn a6() -> Outcome {
    let mut rng = rng();
    let (mut passing, mut hurwitz, mut tries) = (0, 0, 0);
    let mut largest_failure: Option<f64> = None;
    while passing < 100 && tries < 100_000 {
        tries += 1;
        let a = sample_interval_a(&mut rng);
        let (p, q_r) = sample_params(&mut rng, a);
        let g = corollary_gate(&p, q_r);
        if !(g.corollary1 || g.corollary2) {
            continue;
        }
        passing += 1;
        match hurwitz_eq1(&p, q_r) {
            Ok(h) if h.verdict => hurwitz += 1,
            _ => largest_failure = Some(largest_failure.map_or(a, |x: f64| x.max(a))),
        }
    }

    // Hurwitz-true outside both intervals.
    let counterexample = (0..=40).map(|k| 2.55 + 0.005 * k as f64).find(|&a| {
        let p = preset_params(a, 0.001);
        let g = corollary_gate(&p, 1.0);
        let outside = !in_interval(a, S_A1) && !in_interval(a, S_A2) && !g.corollary1 && !g.corollary2;
        outside && hurwitz_eq1(&p, 1.0).is_ok_and(|h| h.verdict)
    });
    let detail = format!(
        "{hurwitz}/{passing} gate-passing sets are Hurwitz{}; counterexample with both gates false: {}",
        largest_failure.map_or(String::new(), |a| format!(" (largest non-Hurwitz a = {a:.4})")),
        counterexample.map_or("none".to_string(), |a| format!("a = {a}")),
    );
    check(passing == 100 && hurwitz == passing && counterexample.is_some(), detail)
}

struct Settled {
    means: PeriodMeans,
    predicted: f64,
}

fn simulate(preset: Preset, omega: f64, t_end: f64) -> Result<(ScenarioConfig, Trajectory), String> {
    let mut cfg = ScenarioConfig::preset(preset);
    cfg.params.omega = omega;
    cfg.t_end = t_end;
    let traj = simulator::run(&cfg.sim_config()).map_err(|e| e.to_string())?;
    Ok((cfg, traj))
}

/// Means over the trailing `periods` probing periods and the radius of `kind`.
fn settle(preset: Preset, omega: f64, t_end: f64, kind: EquilibriumKind, periods: usize) -> Result<Settled, String> {
    let (cfg, traj) = simulate(preset, omega, t_end)?;
    let period = cfg.params.period();
    let t_last = traj.last().ok_or("empty trajectory")?.t;
    let t_from = t_last - periods as f64 * period - 1e-9;
    let means = period_means(&traj, &cfg.params, &cfg.field, t_from);
    let eq = equilibria(&cfg.params, cfg.q_r().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let eq = eq.iter().find(|e| e.kind == kind).ok_or("missing equilibrium")?;
    if !eq.exists {
        return Err(format!("{} does not exist", kind.name()));
    }
    Ok(Settled { means, predicted: eq.state.r_tilde })
}

fn heading_checks(s: &Settled, target_theta: f64, omega: f64) -> Outcome {
    let m = &s.means;
    let band = RADIUS_BAND * s.predicted + OMEGA_ALLOWANCE / omega;
    let r_dev = m.distance.iter().map(|d| (d - s.predicted).abs()).fold(0.0, f64::max);
    let alpha = m.alpha.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let theta = m.theta_tilde.iter().map(|x| wrap_angle(x - target_theta).abs()).fold(0.0, f64::max);
    let mean_r = m.distance.iter().sum::<f64>() / m.distance.len() as f64;
    check(
        m.distance.len() == SETTLE_WINDOW && r_dev <= band && alpha < ALPHA_MAX && theta < HEADING_BAND,
        format!(
            "{} periods: mean r {mean_r:.5} vs predicted {:.5}, max dev {r_dev:.5} (band {band:.5}); \
             max |mean alpha| {alpha:.4} (< {ALPHA_MAX}); max heading error {theta:.4} (< {HEADING_BAND})",
            m.distance.len(),
            s.predicted
        ),
    )
}

fn a7() -> Outcome {
    let s = settle(Preset::Corollary1, 40.0, A7_T_END, EquilibriumKind::Eq1, SETTLE_WINDOW)?;
    heading_checks(&s, 0.0, 40.0)
}

fn a8() -> Outcome {
    let s = settle(Preset::Corollary2, 40.0, A8_T_END, EquilibriumKind::Eq2, SETTLE_WINDOW)?;
    heading_checks(&s, PI, 40.0)
}

fn a9() -> Outcome {
    let s = settle(Preset::Proposition2, 40.0, A9_T_END, EquilibriumKind::Eq3, SETTLE_WINDOW)?;
    let cfg = ScenarioConfig::preset(Preset::Proposition2);
    let c =
        srcseek::averaging::constants(&cfg.params, cfg.q_r().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let predicted = c.rho2 * (2.0 * c.gamma3).sqrt();
    let m = &s.means;
    let r_dev = m.distance.iter().map(|d| (d / predicted - 1.0).abs()).fold(0.0, f64::max);
    let steps: Vec<f64> = m.theta_star.windows(2).map(|w| w[1] - w[0]).collect();
    let monotone = steps.iter().all(|d| *d > 0.0) || steps.iter().all(|d| *d < 0.0);
    let drift = m.theta_star.last().unwrap_or(&0.0) - m.theta_star.first().unwrap_or(&0.0);
    check(
        r_dev <= RADIUS_BAND && monotone && (s.predicted - predicted).abs() < 1e-12,
        format!(
            "{} periods: per-period r within {:.1}% of {predicted:.5} (band {:.0}%); bearing drift {drift:.4} rad, monotone {monotone}",
            m.distance.len(),
            100.0 * r_dev,
            100.0 * RADIUS_BAND
        ),
    )
}

fn a10() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (preset, kind) in [(Preset::Corollary1, EquilibriumKind::Eq1), (Preset::Corollary2, EquilibriumKind::Eq2)] {
        let dev = |omega: f64| -> Result<f64, String> {
            let s = settle(preset, omega, A10_T_END, kind, SETTLE_WINDOW)?;
            let mean = s.means.distance.iter().sum::<f64>() / s.means.distance.len() as f64;
            Ok((mean - s.predicted).abs())
        };
        let (d40, d80) = (dev(40.0)?, dev(80.0)?);
        let ratio = d40 / d80;
        ok &= ratio >= A10_MIN_RATIO;
        parts.push(format!("{}: dev {d40:.5} -> {d80:.5}, ratio {ratio:.2}", preset.name()));
    }
    check(ok, format!("{} (min {A10_MIN_RATIO})", parts.join("; ")))
}

fn a11() -> Outcome {
    let limit = A11_FRACTION * 3f64.sqrt();
    let mut parts = Vec::new();
    let mut ok = true;
    for preset in [Preset::Elliptical, Preset::Acoustic, Preset::Rosenbrock] {
        let (cfg, traj) = simulate(preset, 40.0, A11_T_END)?;
        let means = period_means(&traj, &cfg.params, &cfg.field, 0.0);
        let last = *means.distance.last().ok_or("no full period")?;
        ok &= last < limit;
        parts.push(format!("{} {last:.4}", preset.name()));
    }
    check(ok, format!("final per-period mean distance: {} (limit {limit:.4})", parts.join(", ")))
}

fn final_state(cfg: &SimConfig) -> Result<[f64; 6], String> {
    let traj = simulator::run(cfg).map_err(|e| e.to_string())?;
    let r = traj.last().ok_or("empty trajectory")?;
    Ok([r.x, r.y, r.z, r.alpha, r.theta, r.j - r.xi])
}

fn a12() -> Outcome {
    let base = ScenarioConfig::preset(Preset::Corollary1);
    let period = base.params.period();
    let mut finals = Vec::new();
    for steps_per_period in [32.0, 64.0, 128.0] {
        let mut cfg = base.sim_config();
        cfg.dt = period / steps_per_period;
        cfg.t_end = A12_PERIODS * period;
        finals.push(final_state(&cfg)?);
    }
    let gap = |x: &[f64; 6], y: &[f64; 6]| x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let (e1, e2) = (gap(&finals[0], &finals[1]), gap(&finals[1], &finals[2]));
    let order = (e1 / e2).log2();
    check(
        (A12_ORDER.0..=A12_ORDER.1).contains(&order),
        format!("self-convergence gaps {e1:.3e}, {e2:.3e}; order {order:.3} (in [{}, {}])", A12_ORDER.0, A12_ORDER.1),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("A1", a1),
        ("A2", a2),
        ("A3", a3),
        ("A4", a4),
        ("A5", a5),
        ("A6", a6),
        ("A7", a7),
        ("A8", a8),
        ("A9", a9),
        ("A10", a10),
        ("A11", a11),
        ("A12", a12),
    ];
    let results: Vec<Outcome> = std::thread::scope(|s| {
        let handles: Vec<_> = criteria.iter().map(|(_, f)| s.spawn(f)).collect();
        handles.into_iter().map(|h| h.join().unwrap_or_else(|_| Err("panicked".into()))).collect()
    });
    let mut failed = 0;
    for ((name, _), r) in criteria.iter().zip(results) {
        match r {
            Ok(d) => println!("{name} PASS {d}"),
            Err(d) => {
                failed += 1;
                println!("{name} FAIL {d}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
