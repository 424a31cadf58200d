//! All roots of a complex polynomial by Aberth–Ehrlich simultaneous iteration.

use num_complex::Complex64;

use crate::{Error, Result};

pub const MAX_ITERATIONS: usize = 200;

/// Horner evaluation of `p(z)`, `p'(z)` and the rounding bound `Σ |a_k| |z|^k`.
fn eval(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64, f64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    let mut bound = 0.0;
    let az = z.norm();
    for &a in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + a;
        bound = bound * az + a.norm();
    }
    (p, dp, bound)
}

/// Roots of `Σ_k coeffs[k] z^k` (ascending powers), with multiplicity.
///
/// Trailing zero coefficients are trimmed; leading zeros (`coeffs[0] = 0`)
/// are returned as exact zero roots.
pub fn poly_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let top = coeffs
        .iter()
        .rposition(|c| *c != Complex64::new(0.0, 0.0))
        .ok_or_else(|| Error::InvalidArgument("zero polynomial".into()))?;
    let low = coeffs
        .iter()
        .position(|c| *c != Complex64::new(0.0, 0.0))
        .unwrap_or(0);
    let mut roots = vec![Complex64::new(0.0, 0.0); low];
    let a = &coeffs[low..=top];
    let deg = a.len() - 1;
    match deg {
        0 => return Ok(roots),
        1 => {
            roots.push(-a[0] / a[1]);
            return Ok(roots);
        }
        _ => {}
    }

    let lead = a[deg].norm();
    let cauchy = 1.0 + a[..deg].iter().map(|c| c.norm() / lead).fold(0.0, f64::max);
    let radius = (a[0].norm() / lead).powf(1.0 / deg as f64).min(cauchy);
    let mut z: Vec<Complex64> = (0..deg)
        .map(|k| Complex64::from_polar(radius, std::f64::consts::TAU * k as f64 / deg as f64 + 0.4))
        .collect();
    let mut done = vec![false; deg];
    let eps = f64::EPSILON;

    for _ in 0..MAX_ITERATIONS {
        let mut moved = false;
        for k in 0..deg {
            if done[k] {
                continue;
            }
            let (p, dp, bound) = eval(a, z[k]);
            if p.norm() <= 8.0 * eps * bound {
                done[k] = true;
                continue;
            }
            moved = true;
            if dp == Complex64::new(0.0, 0.0) {
                z[k] *= Complex64::from_polar(1.0 + 1e-3, 0.1);
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex64 = (0..deg)
                .filter(|&m| m != k)
                .map(|m| {
                    let diff = z[k] - z[m];
                    if diff == Complex64::new(0.0, 0.0) {
                        Complex64::new(0.0, 0.0)
                    } else {
                        diff.inv()
                    }
                })
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            z[k] -= step;
            if step.norm() <= eps * z[k].norm() {
                done[k] = true;
            }
        }
        if !moved {
            roots.extend(z);
            return Ok(roots);
        }
    }
    Err(Error::NoConvergence(MAX_ITERATIONS))
}
