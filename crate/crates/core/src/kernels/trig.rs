//! Real trigonometric polynomials `a_0 + Σ_k a_k cos kθ + b_k sin kθ`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use super::roots::poly_roots;
use crate::{Error, Result};

/// Relative size of harmonics above the fitted degree tolerated by [`dft_fit`].
pub const ALIAS_TOL: f64 = 1e-9;
/// Relative reproduction error tolerated by [`dft_fit`].
pub const REPRO_TOL: f64 = 1e-11;
/// Relative derivative residual accepted for a critical point.
pub const CRITICAL_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct TrigPoly {
    pub a0: f64,
    /// `a[k - 1]` multiplies `cos kθ`.
    pub a: Vec<f64>,
    /// `b[k - 1]` multiplies `sin kθ`.
    pub b: Vec<f64>,
}

impl TrigPoly {
    pub fn new(a0: f64, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::InvalidArgument(
                "cosine and sine coefficient counts differ".into(),
            ));
        }
        if !std::iter::once(&a0)
            .chain(&a)
            .chain(&b)
            .all(|v| v.is_finite())
        {
            return Err(Error::InvalidArgument("non-finite coefficient".into()));
        }
        Ok(Self { a0, a, b })
    }

    pub fn degree(&self) -> usize {
        self.a.len()
    }

    fn harmonics(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.a
            .iter()
            .zip(&self.b)
            .enumerate()
            .map(|(k, (&a, &b))| ((k + 1) as f64, a, b))
    }

    pub fn eval(&self, theta: f64) -> f64 {
        self.a0
            + self
                .harmonics()
                .map(|(k, a, b)| {
                    let (s, c) = (k * theta).sin_cos();
                    a * c + b * s
                })
                .sum::<f64>()
    }

    /// `p(θ) − p(0)`, computed without cancellation for small `θ`.
    pub fn gain_from_zero(&self, theta: f64) -> f64 {
        self.harmonics()
            .map(|(k, a, b)| {
                let half = (0.5 * k * theta).sin();
                -2.0 * a * half * half + b * (k * theta).sin()
            })
            .sum()
    }

    pub fn derivative(&self, theta: f64) -> f64 {
        self.harmonics()
            .map(|(k, a, b)| {
                let (s, c) = (k * theta).sin_cos();
                k * (b * c - a * s)
            })
            .sum()
    }

    pub fn second_derivative(&self, theta: f64) -> f64 {
        self.harmonics()
            .map(|(k, a, b)| {
                let (s, c) = (k * theta).sin_cos();
                -k * k * (a * c + b * s)
            })
            .sum()
    }

    /// Upper bound on `sup |p'|`.
    pub fn derivative_bound(&self) -> f64 {
        self.harmonics()
            .map(|(k, a, b)| k * (a.abs() + b.abs()))
            .sum()
    }

    /// Sum of coefficient magnitudes, an upper bound on `sup |p|`.
    pub fn magnitude(&self) -> f64 {
        self.a0.abs()
            + self
                .harmonics()
                .map(|(_, a, b)| a.abs() + b.abs())
                .sum::<f64>()
    }
}

fn grid_cos_sin(k: usize, m: usize, n: usize) -> (f64, f64) {
    let ang = TAU * ((k * m) % n) as f64 / n as f64;
    (ang.cos(), ang.sin())
}

/// Exact trigonometric interpolation of `samples` taken at `θ_m = 2πm/N`.
///
/// Harmonics above `degree` that the grid can resolve must vanish to
/// [`ALIAS_TOL`] relative to the sample magnitude.
pub fn dft_fit(samples: &[f64], degree: usize) -> Result<TrigPoly> {
    let n = samples.len();
    if n < 2 * degree + 1 {
        return Err(Error::FitFailure(format!(
            "{n} samples cannot determine degree {degree}"
        )));
    }
    let scale = samples
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let inv = 1.0 / n as f64;
    let coeff = |k: usize| -> (f64, f64) {
        let (mut a, mut b) = (0.0, 0.0);
        for (m, &s) in samples.iter().enumerate() {
            let (c, sn) = grid_cos_sin(k, m, n);
            a += s * c;
            b += s * sn;
        }
        (2.0 * a * inv, 2.0 * b * inv)
    };
    let a0 = samples.iter().sum::<f64>() * inv;
    let (a, b): (Vec<f64>, Vec<f64>) = (1..=degree).map(coeff).unzip();

    for k in degree + 1..=n / 2 {
        let (mut ak, bk) = coeff(k);
        if 2 * k == n {
            ak *= 0.5;
        }
        let mag = ak.hypot(bk);
        if mag > ALIAS_TOL * scale {
            return Err(Error::FitFailure(format!(
                "harmonic {k} has relative size {:e}; degree bound {degree} violated",
                mag / scale
            )));
        }
    }
    let poly = TrigPoly::new(a0, a, b)?;
    for (m, &s) in samples.iter().enumerate() {
        let err = (poly.eval(TAU * m as f64 / n as f64) - s).abs();
        if err > REPRO_TOL * scale {
            return Err(Error::FitFailure(format!(
                "sample {m} reproduced with relative error {:e}",
                err / scale
            )));
        }
    }
    Ok(poly)
}

fn wrap(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(TAU);
    if t > PI {
        t -= TAU;
    }
    t
}

/// Real critical points of `p` in `(−π, π]`, found as the unit-circle roots
/// of `z^m p'(θ)` with `z = e^{iθ}` and polished by Newton steps in `θ`.
pub fn trig_critical_points(p: &TrigPoly) -> Result<Vec<f64>> {
    let bound = p.derivative_bound();
    if bound == 0.0 {
        return Err(Error::InvalidArgument(
            "constant polynomial has no isolated critical points".into(),
        ));
    }
    let m = p
        .harmonics()
        .filter(|(k, a, b)| k * (a.abs() + b.abs()) > 1e-14 * bound)
        .map(|(k, _, _)| k as usize)
        .max()
        .unwrap_or(0);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * m + 1];
    for (k, a, b) in p.harmonics().take(m) {
        let ck = Complex64::new(b, a) * (0.5 * k);
        let ki = k as usize;
        coeffs[m + ki] = ck;
        coeffs[m - ki] = ck.conj();
    }
    let roots = poly_roots(&coeffs)?;

    let mut found: Vec<(f64, f64)> = Vec::new();
    for z in roots {
        if (z.norm() - 1.0).abs() > 0.05 {
            continue;
        }
        let mut theta = z.arg();
        let mut resid = p.derivative(theta).abs();
        for _ in 0..12 {
            let curv = p.second_derivative(theta);
            if curv == 0.0 {
                break;
            }
            let next = theta - p.derivative(theta) / curv;
            let r = p.derivative(next).abs();
            if !(r < resid) || (next - theta).abs() > 0.1 {
                break;
            }
            theta = next;
            resid = r;
        }
        if resid <= CRITICAL_TOL * bound {
            found.push((wrap(theta), resid));
        }
    }
    found.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(found.len());
    for (t, r) in found {
        match out.last_mut() {
            Some(last) if (t - last.0).abs() < 1e-7 => {
                if r < last.1 {
                    *last = (t, r);
                }
            }
            _ => out.push((t, r)),
        }
    }
    // −π and π coincide on the circle.
    if out.len() > 1 && out[0].0 - (-PI) + (PI - out[out.len() - 1].0) < 1e-7 {
        out.remove(0);
    }
    Ok(out.into_iter().map(|(t, _)| t).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(p: &TrigPoly, n: usize) -> Vec<f64> {
        (0..n).map(|m| p.eval(TAU * m as f64 / n as f64)).collect()
    }

    #[test]
    fn fits_cos_2theta() {
        let s: Vec<f64> = (0..13)
            .map(|m| (2.0 * TAU * m as f64 / 13.0).cos())
            .collect();
        let p = dft_fit(&s, 6).unwrap();
        assert!((p.a[1] - 1.0).abs() < 1e-12);
        assert!(p.a0.abs() < 1e-12);
        for k in 0..6 {
            if k != 1 {
                assert!(p.a[k].abs() < 1e-12);
            }
            assert!(p.b[k].abs() < 1e-12);
        }
    }

    #[test]
    fn fits_constants() {
        let p = dft_fit(&[2.5; 9], 4).unwrap();
        assert_eq!(p.a0, 2.5);
        assert!(p.a.iter().chain(&p.b).all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn too_few_samples_and_aliasing_are_errors() {
        assert!(dft_fit(&[1.0; 8], 4).is_err());
        let s: Vec<f64> = (0..15)
            .map(|m| (5.0 * TAU * m as f64 / 15.0).cos())
            .collect();
        assert!(dft_fit(&s, 3).is_err());
        assert!(dft_fit(&s, 5).is_ok());
    }

    #[test]
    fn critical_points_of_cos_2theta() {
        let p = TrigPoly::new(0.0, vec![0.0, 1.0], vec![0.0, 0.0]).unwrap();
        let mut got = trig_critical_points(&p).unwrap();
        got.sort_by(f64::total_cmp);
        let want = [-PI / 2.0, 0.0, PI / 2.0, PI];
        assert_eq!(got.len(), 4, "{got:?}");
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-10);
        }
    }

    /// Sign changes of p' on a fine grid, refined by bisection.
    fn grid_oracle(p: &TrigPoly, n: usize) -> Vec<f64> {
        let mut out = Vec::new();
        let h = TAU / n as f64;
        for m in 0..n {
            // Offset so that ±π and 0 are interior to a cell.
            let (mut lo, mut hi) = (-PI + (m as f64 + 0.37) * h, -PI + (m as f64 + 1.37) * h);
            let (flo, fhi) = (p.derivative(lo), p.derivative(hi));
            if flo == 0.0 {
                out.push(lo);
                continue;
            }
            if flo * fhi > 0.0 {
                continue;
            }
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if p.derivative(lo) * p.derivative(mid) <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        out
    }

    #[test]
    fn critical_points_match_grid_oracle() {
        let p = TrigPoly::new(0.0, vec![1.0, 1.0], vec![0.0, 0.0]).unwrap();
        let got = trig_critical_points(&p).unwrap();
        let want = grid_oracle(&p, (TAU / 1e-4) as usize);
        for w in &want {
            let w = wrap(*w);
            assert!(
                got.iter()
                    .any(|g| (g - w).abs() < 1e-9 || (g - w).abs() > TAU - 1e-9),
                "missing {w}"
            );
        }
        assert_eq!(got.len(), want.len());
    }

    #[test]
    fn degenerate_critical_point_at_zero() {
        // (1 − cos θ)² = 3/2 − 2 cos θ + cos(2θ)/2
        let p = TrigPoly::new(1.5, vec![-2.0, 0.5], vec![0.0, 0.0]).unwrap();
        let got = trig_critical_points(&p).unwrap();
        assert!(got.iter().any(|t| t.abs() < 1e-4), "{got:?}");
        assert!(got.iter().any(|t| (t.abs() - PI).abs() < 1e-9));
    }

    #[test]
    fn gain_matches_direct_difference() {
        let p = TrigPoly::new(0.3, vec![1.0, -0.5, 0.2], vec![0.1, 0.7, -0.3]).unwrap();
        for t in [-2.0, -0.1, 1e-6, 0.5, 3.0] {
            assert!((p.gain_from_zero(t) - (p.eval(t) - p.eval(0.0))).abs() < 1e-14);
        }
    }

    fn arb_poly(max_degree: usize) -> impl Strategy<Value = TrigPoly> {
        (1..=max_degree).prop_flat_map(|m| {
            (
                -1.0f64..1.0,
                proptest::collection::vec(-1.0f64..1.0, m),
                proptest::collection::vec(-1.0f64..1.0, m),
            )
                .prop_map(|(a0, a, b)| TrigPoly::new(a0, a, b).unwrap())
        })
    }

    proptest! {
        #[test]
        fn round_trip_recovers_coefficients(p in arb_poly(6)) {
            let m = p.degree();
            let q = dft_fit(&sample(&p, 2 * m + 1), m).unwrap();
            prop_assert!((q.a0 - p.a0).abs() < 1e-12);
            for k in 0..m {
                prop_assert!((q.a[k] - p.a[k]).abs() < 1e-12);
                prop_assert!((q.b[k] - p.b[k]).abs() < 1e-12);
            }
        }

        #[test]
        fn critical_points_cover_grid_maximum(p in arb_poly(8)) {
            prop_assume!(p.derivative_bound() > 1e-6);
            let crit = trig_critical_points(&p).unwrap();
            let bound = p.derivative_bound();
            for &t in &crit {
                prop_assert!(p.derivative(t).abs() <= 1e-9 * bound);
            }
            let best = crit.iter().map(|&t| p.eval(t)).fold(f64::NEG_INFINITY, f64::max);
            let grid = (0..100_000)
                .map(|m| p.eval(-PI + TAU * m as f64 / 1e5))
                .fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(best >= grid - 1e-9 * p.magnitude());
        }
    }
}
