//! Roots of low-degree real polynomials in closed form.
//!
//! Coefficients are monic and listed from the highest power down, without
//! the leading one: `s^2 + c[0] s + c[1]`, `s^3 + c[0] s^2 + c[1] s + c[2]`.

use nalgebra::Complex;

pub type C64 = Complex<f64>;

const NEWTON_ITERS: usize = 4;

/// Roots of `s^2 + b s + c`, using the cancellation-free form for real pairs.
pub fn quadratic(b: f64, c: f64) -> [C64; 2] {
    let disc = b * b - 4.0 * c;
    if disc >= 0.0 {
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        if q == 0.0 {
            return [C64::new(0.0, 0.0); 2];
        }
        [C64::new(q, 0.0), C64::new(c / q, 0.0)]
    } else {
        let im = 0.5 * (-disc).sqrt();
        [C64::new(-0.5 * b, im), C64::new(-0.5 * b, -im)]
    }
}

/// Roots of `s^3 + k1 s^2 + k2 s + k3`: one real root from Cardano's formula
/// (trigonometric branch when all three are real), polished by Newton, then
/// deflation to a quadratic.
pub fn cubic(k1: f64, k2: f64, k3: f64) -> [C64; 3] {
    let p = k2 - k1 * k1 / 3.0;
    let q = 2.0 * k1.powi(3) / 27.0 - k1 * k2 / 3.0 + k3;
    let disc = 0.25 * q * q + p.powi(3) / 27.0;
    let t = if disc > 0.0 {
        let sd = disc.sqrt();
        (-0.5 * q + sd).cbrt() + (-0.5 * q - sd).cbrt()
    } else if p == 0.0 {
        0.0
    } else {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        m * (arg.acos() / 3.0).cos()
    };
    let mut s = t - k1 / 3.0;
    for _ in 0..NEWTON_ITERS {
        let f = ((s + k1) * s + k2) * s + k3;
        let df = (3.0 * s + 2.0 * k1) * s + k2;
        if df == 0.0 || f == 0.0 {
            break;
        }
        let next = s - f / df;
        if !next.is_finite() {
            break;
        }
        s = next;
    }
    let [r1, r2] = quadratic(k1 + s, k2 + s * (k1 + s));
    [C64::new(s, 0.0), r1, r2]
}

/// Evaluates a monic polynomial (leading one omitted) at `z` by Horner.
pub fn eval_monic(coeffs: &[f64], z: C64) -> C64 {
    coeffs.iter().fold(C64::new(1.0, 0.0), |acc, &c| acc * z + c)
}

/// Coefficients of the product of two monic polynomials.
pub fn mul_monic(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() + 1];
    let full_a: Vec<f64> = std::iter::once(1.0).chain(a.iter().copied()).collect();
    let full_b: Vec<f64> = std::iter::once(1.0).chain(b.iter().copied()).collect();
    for (i, x) in full_a.iter().enumerate() {
        for (j, y) in full_b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out.remove(0);
    out
}
