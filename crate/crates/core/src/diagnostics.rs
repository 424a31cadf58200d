//! Post-hoc analysis of runs: stationarity, the Hessian surrogate built from
//! `Γ`, and convergence-rate classification.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cost::{CostSpec, Objective, TermKind, TransformedState};
use crate::driver::{RunTrace, SafeguardAudit};
use crate::gradient::skew_part;
use crate::rotation::gamma_for_pair;
use crate::scalar::{GroupScalar, Scalar};
use crate::tensor::increment;
use crate::{Error, Mat, Result};

/// Minimum quality for a rate model to be accepted.
pub const MIN_QUALITY: f64 = 0.9;
/// Points excluded from the end of a trace when `X*` is its final iterate.
pub const TAIL_EXCLUDE: usize = 5;
/// Minimum number of points in a fitted tail.
pub const MIN_FIT_POINTS: usize = 5;
/// Rates are asymptotic: trace fits start once the distance to the limit has
/// fallen to this fraction of its value at the start of the decreasing tail.
pub const LOCAL_FRACTION: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stationarity {
    pub stationary: bool,
    pub grad_norm: f64,
    pub tol: f64,
}

/// Euclidean gradient `∇f` at `x`, assembled in the original coordinates by
/// contracting every tensor with the columns of `x` on all but one mode.
pub fn euclidean_gradient<T: Scalar>(obj: &Objective<T>, x: &Mat<T>) -> Mat<T> {
    let n = obj.dim();
    let mut grad = Mat::<T>::zeros(n, n);
    let two = T::from_real(2.0);
    for term in obj.terms() {
        let a = &term.tensor;
        let d = a.order();
        let alpha = T::from_real(term.weight);
        for p in 0..n {
            let cols: Vec<Vec<T>> = (0..d)
                .map(|m| {
                    (0..n)
                        .map(|b| {
                            if m < term.conj_modes {
                                x[(b, p)].conj()
                            } else {
                                x[(b, p)]
                            }
                        })
                        .collect()
                })
                .collect();
            // partial[m][b]: contraction over every mode except m, index b left free.
            let mut partial = vec![vec![T::zero(); n]; d];
            let mut idx = vec![0usize; d];
            for &v in a.values() {
                for (m, row) in partial.iter_mut().enumerate() {
                    let mut w = v;
                    for (mm, &im) in idx.iter().enumerate() {
                        if mm != m {
                            w *= cols[mm][im];
                        }
                    }
                    row[idx[m]] += w;
                }
                increment(&mut idx, n);
            }
            let wp = (0..n).fold(T::zero(), |s, b| s + cols[0][b] * partial[0][b]);
            for (m, row) in partial.iter().enumerate() {
                let conj = m < term.conj_modes;
                for b in 0..n {
                    let v = row[b];
                    let c = match (term.kind, conj) {
                        (TermKind::DiagEnergy, false) => two * wp * v.conj(),
                        (TermKind::DiagEnergy, true) => two * wp.conj() * v,
                        (TermKind::Trace, false) => v.conj(),
                        (TermKind::Trace, true) => v,
                    };
                    grad[(b, p)] += alpha * c;
                }
            }
        }
    }
    grad
}

/// Projected gradient `skew(Xᴴ∇f)` by the Euclidean route.
pub fn projected_gradient_euclidean<T: Scalar>(obj: &Objective<T>, x: &Mat<T>) -> Mat<T> {
    skew_part(&(x.adjoint() * euclidean_gradient(obj, x)))
}

/// Recomputes `‖Proj grad f(x)‖` independently of the driver and compares it to `tol`.
pub fn stationarity_check<T: GroupScalar>(
    spec: &CostSpec,
    x: &Mat<T>,
    tol: f64,
) -> Result<Stationarity> {
    let obj = T::objective(spec)?;
    if x.nrows() != obj.dim() || x.ncols() != obj.dim() {
        return Err(Error::DimensionMismatch {
            expected: obj.dim(),
            got: x.nrows(),
        });
    }
    let grad_norm = projected_gradient_euclidean(&obj, x).norm();
    Ok(Stationarity {
        stationary: grad_norm <= tol,
        grad_norm,
        tol,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HessSurrogate {
    pub i: usize,
    pub j: usize,
    /// `2 (Γ_{2:3,2:3} − Γ₁₁ I₂)`.
    pub h: [[f64; 2]; 2],
    /// Descending.
    pub eigenvalues: [f64; 2],
    pub gamma_norm: f64,
    /// `λ_max(H) + 1e−8 (1 + ‖Γ‖)`; negative means strictly negative definite.
    pub margin: f64,
    pub negative_definite: bool,
}

impl HessSurrogate {
    pub fn from_gamma(gamma: &crate::rotation::GammaMatrix) -> Self {
        let h = gamma.hessian_surrogate();
        let mean = 0.5 * (h[0][0] + h[1][1]);
        let rad = (0.5 * (h[0][0] - h[1][1])).hypot(h[0][1]);
        let eigenvalues = [mean + rad, mean - rad];
        let gamma_norm = gamma.norm();
        let margin = eigenvalues[0] + 1e-8 * (1.0 + gamma_norm);
        Self {
            i: gamma.i,
            j: gamma.j,
            h,
            eigenvalues,
            gamma_norm,
            margin,
            negative_definite: margin < 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HessScan {
    pub pairs: Vec<HessSurrogate>,
    pub all_negative_definite: bool,
    /// Largest margin over all pairs.
    pub worst_margin: f64,
}

/// Builds `Γ` and the Hessian surrogate for every pair at `u`.
pub fn hess_surrogate_scan(spec: &CostSpec, u: &Mat<Complex64>, seed: u64) -> Result<HessScan> {
    let obj = Complex64::objective(spec)?;
    let state = TransformedState::new(&obj, u)?;
    let n = obj.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            pairs.push(HessSurrogate::from_gamma(&gamma_for_pair(
                &state, i, j, &mut rng,
            )?));
        }
    }
    let worst_margin = pairs
        .iter()
        .map(|p| p.margin)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(HessScan {
        all_negative_definite: pairs.iter().all(|p| p.negative_definite),
        pairs,
        worst_margin,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateMode {
    Linear,
    Sublinear,
    Undetermined,
}

/// Fitted rate model. Linear: `e_k ≈ C e^{−ck}`, `ζ = 1/2`. Sublinear:
/// `e_k ≈ C k^{−α}` with `α = ζ/(1 − 2ζ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LojasiewiczFit {
    pub mode: RateMode,
    pub zeta: Option<f64>,
    /// Rate `c` (linear) or exponent `α` (sublinear).
    pub c: f64,
    #[serde(rename = "C")]
    pub big_c: f64,
    /// Coefficient of determination of the selected model, clamped to `[0, 1]`.
    pub quality: f64,
    pub linear_quality: f64,
    pub power_quality: f64,
    pub points: usize,
}

/// Least squares line `y = a + bx` and its `R²`.
fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let r2 = if syy > 0.0 {
        let sse: f64 = x.iter().zip(y).map(|(u, v)| (v - a - b * u).powi(2)).sum();
        (1.0 - sse / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    (a, b, r2)
}

/// Fits both rate models to `(k, e_k)` with `k ≥ 1` and `e_k > 0`.
pub fn rate_fit_series(ks: &[f64], es: &[f64]) -> Result<LojasiewiczFit> {
    if ks.len() != es.len() {
        return Err(Error::DimensionMismatch {
            expected: ks.len(),
            got: es.len(),
        });
    }
    if es.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientTrace(format!(
            "{} points, need {MIN_FIT_POINTS}",
            es.len()
        )));
    }
    if ks.iter().any(|&k| !(k >= 1.0)) || es.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::InvalidArgument(
            "rate fit needs k >= 1 and positive finite distances".into(),
        ));
    }
    if es.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::InvalidArgument(
            "distances are not monotonically decreasing".into(),
        ));
    }
    let log_e: Vec<f64> = es.iter().map(|e| e.ln()).collect();
    let log_k: Vec<f64> = ks.iter().map(|k| k.ln()).collect();
    let (la, lb, lr2) = line_fit(ks, &log_e);
    let (pa, pb, pr2) = line_fit(&log_k, &log_e);
    let lin_q = if lb < 0.0 { lr2 } else { 0.0 };
    let pow_q = if pb < 0.0 { pr2 } else { 0.0 };
    let points = es.len();
    let fit = if lin_q.max(pow_q) < MIN_QUALITY {
        LojasiewiczFit {
            mode: RateMode::Undetermined,
            zeta: None,
            c: f64::NAN,
            big_c: f64::NAN,
            quality: lin_q.max(pow_q),
            linear_quality: lin_q,
            power_quality: pow_q,
            points,
        }
    } else if lin_q >= pow_q {
        LojasiewiczFit {
            mode: RateMode::Linear,
            zeta: Some(0.5),
            c: -lb,
            big_c: la.exp(),
            quality: lin_q,
            linear_quality: lin_q,
            power_quality: pow_q,
            points,
        }
    } else {
        let alpha = -pb;
        LojasiewiczFit {
            mode: RateMode::Sublinear,
            zeta: Some(alpha / (1.0 + 2.0 * alpha)),
            c: alpha,
            big_c: pa.exp(),
            quality: pow_q,
            linear_quality: lin_q,
            power_quality: pow_q,
            points,
        }
    };
    Ok(fit)
}

/// Fits a distance sequence indexed `k = 1, 2, …`.
pub fn rate_fit_distances(es: &[f64]) -> Result<LojasiewiczFit> {
    let ks: Vec<f64> = (1..=es.len()).map(|k| k as f64).collect();
    rate_fit_series(&ks, es)
}

/// Longest non-increasing suffix of positive values above `floor`, as `(k, e_k)`
/// pairs, trimmed to the local regime: points before the distance first drops
/// to [`LOCAL_FRACTION`] of the suffix's initial distance are discarded while
/// at least [`MIN_FIT_POINTS`] remain.
fn decreasing_tail(ks: &[f64], es: &[f64], floor: f64) -> (Vec<f64>, Vec<f64>) {
    let mut end = es.len();
    while end > 0 && !(es[end - 1] > floor) {
        end -= 1;
    }
    let mut start = end.saturating_sub(1);
    while start > 0 && es[start - 1] >= es[start] && ks[start - 1] >= 1.0 {
        start -= 1;
    }
    if start < end {
        let cut = LOCAL_FRACTION * es[start];
        while end - start > MIN_FIT_POINTS && es[start] > cut {
            start += 1;
        }
    }
    (ks[start..end].to_vec(), es[start..end].to_vec())
}

/// Rate fit of `e_k = ‖X_k − X*‖_F` over the decreasing tail of a full trace.
/// `X*` defaults to the final iterate, in which case the last
/// [`TAIL_EXCLUDE`] points are dropped.
pub fn rate_fit<T: Scalar>(trace: &RunTrace<T>, x_star: Option<&Mat<T>>) -> Result<LojasiewiczFit> {
    if trace.iterates.len() != trace.rows.len() {
        return Err(Error::InsufficientTrace(
            "rate fit needs iterates (record level full)".into(),
        ));
    }
    let (star, keep) = match x_star {
        Some(x) => (x, trace.iterates.len()),
        None => (
            trace
                .iterates
                .last()
                .ok_or_else(|| Error::InsufficientTrace("empty trace".into()))?,
            trace.iterates.len().saturating_sub(TAIL_EXCLUDE),
        ),
    };
    let floor = 1e-12 * (1.0 + star.norm());
    let ks: Vec<f64> = trace.rows[..keep].iter().map(|r| r.k as f64).collect();
    let es: Vec<f64> = trace.iterates[..keep]
        .iter()
        .map(|x| (x - star).norm())
        .collect();
    let (ks, es) = decreasing_tail(&ks, &es, floor);
    rate_fit_series(&ks, &es)
}

/// Rate fit using tail sums of recorded step norms, `e_k = Σ_{m>k} ‖X_m − X_{m−1}‖`,
/// an upper bound on the distance to the limit that needs no iterates.
pub fn rate_fit_from_steps(step_norms: &[f64]) -> Result<LojasiewiczFit> {
    let mut es = vec![0.0; step_norms.len()];
    let mut acc = 0.0;
    for k in (0..step_norms.len()).rev() {
        es[k] = acc;
        acc += step_norms[k];
    }
    let scale = step_norms.iter().sum::<f64>();
    let ks: Vec<f64> = (0..es.len()).map(|k| k as f64).collect();
    let (ks, es) = decreasing_tail(&ks, &es, 1e-14 * scale.max(f64::MIN_POSITIVE));
    rate_fit_series(&ks, &es)
}

/// Structured diagnostic report.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub stationarity: Option<Stationarity>,
    pub hess_scan: Option<HessScan>,
    pub rate: Option<LojasiewiczFit>,
    pub audit: Option<SafeguardAudit>,
    /// Stages that could not be computed, with the reason.
    pub skipped: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::NamedCost;
    use crate::driver::{run, PairRule, RecordLevel, SolverConfig};
    use crate::gradient::projected_gradient;
    use crate::rotation::GammaMatrix;
    use crate::scalar::Group;
    use crate::testutil::{rand_complex_tensor, random_orthogonal, random_unitary, sym_real};
    use crate::{ComplexTerm, DenseTensor};
    use nalgebra::DVector;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn euclidean_route_matches_driver_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let spec = CostSpec::RealSymmetric {
            tensors: vec![sym_real(&mut rng, 3, 4), sym_real(&mut rng, 3, 4)],
        };
        let obj = f64::objective(&spec).unwrap();
        let q = random_orthogonal(&mut rng, 4);
        let a = projected_gradient_euclidean(&obj, &q);
        let b = projected_gradient(&TransformedState::new(&obj, &q).unwrap()).unwrap();
        assert!((a - &b).norm() <= 1e-12 * b.norm().max(1.0));

        let spec = CostSpec::ComplexGeneral {
            terms: vec![
                ComplexTerm {
                    tensor: rand_complex_tensor(&mut rng, 3, 3),
                    conj_modes: 1,
                    weight: 1.0,
                },
                ComplexTerm {
                    tensor: rand_complex_tensor(&mut rng, 2, 3),
                    conj_modes: 2,
                    weight: -0.3,
                },
            ],
        };
        let form = crate::cost::build_hermitian_form(&spec).unwrap();
        let u = random_unitary(&mut rng, 3);
        for s in [spec, form] {
            let obj = Complex64::objective(&s).unwrap();
            let a = projected_gradient_euclidean(&obj, &u);
            let b = projected_gradient(&TransformedState::new(&obj, &u).unwrap()).unwrap();
            assert!((a - &b).norm() <= 1e-10 * b.norm().max(1.0));
        }
    }

    #[test]
    fn stationarity_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let q = random_orthogonal(&mut rng, 4);
        let d = Mat::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, -1.0, 0.5]));
        let a = DenseTensor::from_matrix(&(&q * d * q.transpose())).unwrap();
        let spec = CostSpec::RealSymmetric { tensors: vec![a] };
        assert!(stationarity_check(&spec, &q, 1e-10).unwrap().stationary);
        let other = random_orthogonal(&mut rng, 4);
        let s = stationarity_check(&spec, &other, 1e-10).unwrap();
        assert!(!s.stationary && s.grad_norm > 1e-3);
    }

    #[test]
    fn surrogate_examples() {
        let jade = HessSurrogate::from_gamma(&GammaMatrix {
            i: 0,
            j: 1,
            entries: [[2.0, 0.0, 0.0], [0.0; 3], [0.0; 3]],
        });
        assert_eq!(jade.h, [[-4.0, 0.0], [0.0, -4.0]]);
        assert!(jade.negative_definite);
        let id = HessSurrogate::from_gamma(&GammaMatrix {
            i: 0,
            j: 1,
            entries: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        });
        assert_eq!(id.eigenvalues, [0.0, 0.0]);
        assert!(!id.negative_definite);
    }

    fn planted_jade(rng: &mut ChaCha8Rng, n: usize) -> (CostSpec, Mat<Complex64>) {
        let u = random_unitary(rng, n);
        let mats = (0..3)
            .map(|l| {
                let d = DVector::from_fn(n, |k, _| {
                    c((k as f64 + 1.0) * (1.0 + l as f64) - 0.7 * (l * k) as f64)
                });
                &u * Mat::from_diagonal(&d) * u.adjoint()
            })
            .collect();
        (NamedCost::Jade(mats).into_spec().unwrap(), u)
    }

    #[test]
    fn planted_jade_scan_is_negative_definite() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (spec, u) = planted_jade(&mut rng, 4);
        let scan = hess_surrogate_scan(&spec, &u, 0).unwrap();
        assert_eq!(scan.pairs.len(), 6);
        assert!(scan.all_negative_definite, "{scan:?}");

        // Relabeling the columns permutes the pairs.
        let perm = [2usize, 0, 3, 1];
        let up = Mat::from_fn(4, 4, |r, k| u[(r, perm[k])]);
        let scan_p = hess_surrogate_scan(&spec, &up, 0).unwrap();
        for s in &scan_p.pairs {
            let (a, b) = (perm[s.i].min(perm[s.j]), perm[s.i].max(perm[s.j]));
            let orig = scan.pairs.iter().find(|o| o.i == a && o.j == b).unwrap();
            assert!(
                (orig.eigenvalues[0] - s.eigenvalues[0]).abs() < 1e-9 * (1.0 + orig.gamma_norm)
            );
        }
    }

    #[test]
    fn synthetic_rates() {
        let geo: Vec<f64> = (1..=40).map(|k| 2f64.powi(-k)).collect();
        let fit = rate_fit_distances(&geo).unwrap();
        assert_eq!(fit.mode, RateMode::Linear);
        assert_eq!(fit.zeta, Some(0.5));
        assert!((fit.c - std::f64::consts::LN_2).abs() < 1e-10);

        let harm: Vec<f64> = (1..=200).map(|k| 1.0 / k as f64).collect();
        let fit = rate_fit_distances(&harm).unwrap();
        assert_eq!(fit.mode, RateMode::Sublinear);
        assert!((fit.zeta.unwrap() - 1.0 / 3.0).abs() <= 1e-3);

        assert!(rate_fit_distances(&[1.0, 0.5]).is_err());
        assert!(rate_fit_distances(&[1.0, 0.5, 0.7, 0.2, 0.1]).is_err());
        let noisy = [1.0, 0.9, 0.9, 0.2, 0.2, 0.19, 0.19, 0.01];
        assert_eq!(
            rate_fit_distances(&noisy).unwrap().mode,
            RateMode::Undetermined
        );
    }

    #[test]
    fn matrix_jacobi_is_mostly_linear() {
        let mut linear = 0;
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let spec = CostSpec::RealSymmetric {
                tensors: vec![sym_real(&mut rng, 2, 10)],
            };
            let cfg = SolverConfig {
                pair_rule: PairRule::GradientMax,
                record_level: RecordLevel::Full,
                grad_tol: 1e-10,
                ..SolverConfig::default()
            };
            let tr = run(&spec, &Mat::<f64>::identity(10, 10), &cfg).unwrap();
            let fit = rate_fit(&tr, None).unwrap();
            assert_ne!(fit.mode, RateMode::Sublinear, "{fit:?}");
            linear += usize::from(fit.mode == RateMode::Linear);
        }
        assert!(linear >= 7, "{linear} of 10 linear");
    }

    #[test]
    fn planted_jade_run_passes_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (spec, _) = planted_jade(&mut rng, 10);
        let cfg = SolverConfig {
            group: Group::Unitary,
            pair_rule: PairRule::GradientMax,
            record_level: RecordLevel::Full,
            grad_tol: 1e-10,
            ..SolverConfig::default()
        };
        let tr = run(&spec, &Mat::<Complex64>::identity(10, 10), &cfg).unwrap();
        let st = stationarity_check(&spec, &tr.final_x, 1e-9).unwrap();
        assert!(st.stationary, "{st:?}");
        assert!((st.grad_norm - tr.final_grad_norm()).abs() <= 1e-9);
        let scan = hess_surrogate_scan(&spec, &tr.final_x, 1).unwrap();
        assert!(scan.all_negative_definite, "{scan:?}");
        let fit = rate_fit(&tr, None).unwrap();
        assert_eq!(fit.mode, RateMode::Linear, "{fit:?}");
        assert!(fit.quality >= MIN_QUALITY);
        let steps: Vec<f64> = tr.rows[1..].iter().map(|r| r.step_norm).collect();
        assert_eq!(rate_fit_from_steps(&steps).unwrap().mode, RateMode::Linear);
    }
}
