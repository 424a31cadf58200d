//! Riemannian gradients, pairwise derivatives and Jacobi-G pair selection.
//!
//! Tangent vectors at `X` are written `XΩ` with `Ω` skew-symmetric
//! (skew-Hermitian on `U(n)`). The projected gradient `P` is the skew part of
//! `Λ = Xᴴ∇f`, assembled here directly from the cached transformed tensors.
//! On `O(n)` the derivative of `h(θ) = f(X G(i, j, θ))` at zero is
//! `g_ij = 2 P_ij`; on `U(n)` the gradient norm restricted to the `(i, j)`
//! plane is `√2 |P_ij|`.

use num_complex::Complex64;

use crate::cost::{Objective, TermKind, TransformedState};
use crate::kernels::{fd_directional, DEFAULT_FD_STEP};
use crate::scalar::{Field, Group, GroupScalar, Scalar};
use crate::{Error, Mat, Result};

/// Relative bound on the diagonal of `P` enforced on `U(n)`.
pub const PHASE_TOL: f64 = 1e-10;

/// Strictly upper triangular table indexed by pairs `i < j`, stored in cyclic order.
#[derive(Clone, Debug, PartialEq)]
pub struct PairTable {
    n: usize,
    values: Vec<f64>,
}

impl PairTable {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            values: vec![0.0; n * n.saturating_sub(1) / 2],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.n);
        i * self.n - i * (i + 1) / 2 + (j - i - 1)
    }

    pub fn pair(&self, idx: usize) -> (usize, usize) {
        let mut i = 0;
        let mut rem = idx;
        while rem >= self.n - 1 - i {
            rem -= self.n - 1 - i;
            i += 1;
        }
        (i, i + 1 + rem)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.index(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.index(i, j);
        self.values[k] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairDerivatives {
    pub group: Group,
    /// `‖Proj grad f‖`.
    pub grad_norm: f64,
    /// `h′_(i,j)(0)` on `O(n)`; `‖Proj grad h_(i,j)(I₂)‖` on `U(n)`.
    pub pairs: PairTable,
}

impl PairDerivatives {
    pub fn dim(&self) -> usize {
        self.pairs.dim()
    }

    /// Magnitude compared against `δ‖grad‖` by the selection rule.
    pub fn measure(&self, i: usize, j: usize) -> f64 {
        self.pairs.get(i, j).abs()
    }

    /// `Σ g_ij² / 2` on `O(n)`, `Σ local_ij²` on `U(n)`; equals `grad_norm²`.
    pub fn pair_energy(&self) -> f64 {
        let s: f64 = self.pairs.values().iter().map(|v| v * v).sum();
        match self.group {
            Group::Orthogonal => s / 2.0,
            Group::Unitary => s,
        }
    }

    /// Builds the table from a projected gradient `P` (skew part of `Λ`).
    pub fn from_projected<T: Scalar>(p: &Mat<T>) -> Self {
        let n = p.nrows();
        let mut pairs = PairTable::zeros(n);
        let group = match T::FIELD {
            Field::Real => Group::Orthogonal,
            Field::Complex => Group::Unitary,
        };
        for i in 0..n {
            for j in i + 1..n {
                let v = match group {
                    Group::Orthogonal => 2.0 * p[(i, j)].re(),
                    Group::Unitary => std::f64::consts::SQRT_2 * p[(i, j)].abs2().sqrt(),
                };
                pairs.set(i, j, v);
            }
        }
        Self {
            group,
            grad_norm: p.norm(),
            pairs,
        }
    }
}

/// `Λ = Xᴴ∇f` from the transformed tensors:
/// `Λ_ap = Σ_ℓ α_ℓ Σ_m c_m(W_p, W^{(m)}_{p;a})`, where `W^{(m)}_{p;a}` is the
/// entry with every index `p` except index `a` in mode `m`.
pub fn lambda_matrix<T: Scalar>(state: &TransformedState<'_, T>) -> Mat<T> {
    let n = state.dim();
    let mut lam = Mat::<T>::zeros(n, n);
    let two = T::from_real(2.0);
    for (term, w) in state.objective().terms().iter().zip(state.tensors()) {
        let alpha = T::from_real(term.weight);
        for p in 0..n {
            let wp = w.values()[w.diagonal_offset(p)];
            for mode in 0..w.order() {
                let conj = mode < term.conj_modes;
                for a in 0..n {
                    let v = w.near_diagonal(p, mode, a);
                    let c = match (term.kind, conj) {
                        (TermKind::DiagEnergy, false) => two * wp * v.conj(),
                        (TermKind::DiagEnergy, true) => two * wp.conj() * v,
                        (TermKind::Trace, false) => v.conj(),
                        (TermKind::Trace, true) => v,
                    };
                    lam[(a, p)] += alpha * c;
                }
            }
        }
    }
    lam
}

/// Skew part `(Λ − Λᴴ)/2`.
pub fn skew_part<T: Scalar>(lam: &Mat<T>) -> Mat<T> {
    (lam - lam.adjoint()) * T::from_real(0.5)
}

fn check_phase<T: Scalar>(p: &Mat<T>, scale: f64) -> Result<()> {
    let worst = (0..p.nrows())
        .map(|k| p[(k, k)].abs2().sqrt())
        .fold(0.0, f64::max);
    if worst > PHASE_TOL * scale {
        return Err(Error::PhaseInvariance(worst));
    }
    Ok(())
}

/// Projected gradient `P` at the state's iterate.
pub fn projected_gradient<T: Scalar>(state: &TransformedState<'_, T>) -> Result<Mat<T>> {
    let p = skew_part(&lambda_matrix(state));
    if T::FIELD == Field::Complex {
        check_phase(&p, state.objective().scale())?;
    }
    Ok(p)
}

/// Pair derivatives on `O(n)`.
pub fn pair_derivatives_real(state: &TransformedState<'_, f64>) -> Result<PairDerivatives> {
    Ok(PairDerivatives::from_projected(&projected_gradient(state)?))
}

/// Projected gradient and pairwise local norms on `U(n)`.
pub fn riemann_gradient_complex(
    state: &TransformedState<'_, Complex64>,
) -> Result<PairDerivatives> {
    Ok(PairDerivatives::from_projected(&projected_gradient(state)?))
}

/// How the driver computes gradients.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientMethod {
    #[default]
    Analytic,
    FiniteDifference,
}

/// Projected gradient by central differences along the basis `E_ij − E_ji`,
/// `i(E_ij + E_ji)` and `iE_pp`. Costs `O(n²)` full evaluations.
pub fn projected_gradient_fd<T: Scalar>(
    obj: &Objective<T>,
    x: &Mat<T>,
    step: f64,
) -> Result<Mat<T>> {
    let n = x.nrows();
    let mut p = Mat::<T>::zeros(n, n);
    let dir = |omega: Mat<T>| fd_directional(|m| obj.evaluate(m), x, &(x * omega), step);
    for i in 0..n {
        for j in i + 1..n {
            let mut om = Mat::<T>::zeros(n, n);
            om[(i, j)] = T::one();
            om[(j, i)] = -T::one();
            let re = dir(om)? / 2.0;
            let im = if T::FIELD == Field::Complex {
                let mut om = Mat::<T>::zeros(n, n);
                let iu = T::from_parts(0.0, 1.0).expect("complex field");
                om[(i, j)] = iu;
                om[(j, i)] = iu;
                dir(om)? / 2.0
            } else {
                0.0
            };
            let v = T::from_parts(re, im).expect("imaginary part is zero on the reals");
            p[(i, j)] = v;
            p[(j, i)] = -v.conj();
        }
        if T::FIELD == Field::Complex {
            let mut om = Mat::<T>::zeros(n, n);
            om[(i, i)] = T::from_parts(0.0, 1.0).expect("complex field");
            p[(i, i)] = T::from_parts(0.0, dir(om)?).expect("complex field");
        }
    }
    Ok(p)
}

/// Gradient information by the selected method.
pub fn pair_derivatives<T: GroupScalar>(
    state: &TransformedState<'_, T>,
    x: &Mat<T>,
    method: GradientMethod,
) -> Result<PairDerivatives> {
    let p = match method {
        GradientMethod::Analytic => projected_gradient(state)?,
        GradientMethod::FiniteDifference => {
            projected_gradient_fd(state.objective(), x, DEFAULT_FD_STEP)?
        }
    };
    Ok(PairDerivatives::from_projected(&p))
}

/// Jacobi-G pair strategy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairStrategy {
    /// Pair with the largest measure; ties go to the earliest in cyclic order.
    Max,
    /// First pair in cyclic order, starting at table index `start`, that
    /// satisfies the selection inequality.
    FirstCyclic { start: usize },
}

/// Chooses `(i, j)` with `measure(i, j) ≥ δ‖grad‖`.
pub fn jacobi_g_pair(
    pd: &PairDerivatives,
    delta: f64,
    strategy: PairStrategy,
) -> Result<(usize, usize)> {
    let n = pd.dim();
    let bound = match pd.group {
        Group::Orthogonal => f64::delta_bound(n),
        Group::Unitary => Complex64::delta_bound(n),
    };
    if !(delta > 0.0 && delta < bound) {
        return Err(Error::InvalidArgument(format!(
            "delta {delta} outside (0, {bound})"
        )));
    }
    if pd.grad_norm == 0.0 {
        return Err(Error::Stationary);
    }
    let len = pd.pairs.len();
    let vals = pd.pairs.values();
    let argmax = || {
        let mut best = 0;
        for k in 1..len {
            if vals[k].abs() > vals[best].abs() {
                best = k;
            }
        }
        best
    };
    let idx = match strategy {
        PairStrategy::Max => argmax(),
        PairStrategy::FirstCyclic { start } => (0..len)
            .map(|o| (start + o) % len)
            .find(|&k| vals[k].abs() >= delta * pd.grad_norm)
            .unwrap_or_else(argmax),
    };
    Ok(pd.pairs.pair(idx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::{ComplexTerm, CostSpec, NamedCost};
    use crate::testutil::{rand_complex_tensor, random_orthogonal, random_unitary, sym_real};
    use crate::DenseTensor;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn real_state_pd(spec: &CostSpec, q: &Mat<f64>) -> PairDerivatives {
        let obj = f64::objective(spec).unwrap();
        let st = TransformedState::new(&obj, q).unwrap();
        pair_derivatives_real(&st).unwrap()
    }

    #[test]
    fn pair_table_indexing() {
        let t = PairTable::zeros(5);
        let mut k = 0;
        for i in 0..5 {
            for j in i + 1..5 {
                assert_eq!(t.index(i, j), k);
                assert_eq!(t.pair(k), (i, j));
                k += 1;
            }
        }
        assert_eq!(t.len(), 10);
    }

    #[test]
    fn matrix_example_derivative() {
        let spec = CostSpec::RealSymmetric {
            tensors: vec![DenseTensor::from_matrix(&Mat::from_row_slice(
                2,
                2,
                &[1.0, 2.0, 2.0, 5.0],
            ))
            .unwrap()],
        };
        let pd = real_state_pd(&spec, &Mat::identity(2, 2));
        assert!((pd.pairs.get(0, 1) - 32.0).abs() < 1e-12);
        assert!((pd.grad_norm - 32.0 / 2f64.sqrt()).abs() < 1e-12);
        let obj = f64::objective(&spec).unwrap();
        let mut om = Mat::zeros(2, 2);
        om[(0, 1)] = 1.0;
        om[(1, 0)] = -1.0;
        let fd = fd_directional(|m| obj.evaluate(m), &Mat::identity(2, 2), &om, 1e-5).unwrap();
        assert!((fd - 32.0).abs() < 1e-5 * 32.0);
    }

    #[test]
    fn planted_diagonal_is_stationary() {
        let t = DenseTensor::from_fn(3, 4, |ix| {
            if ix.iter().all(|&v| v == ix[0]) {
                1.0 + ix[0] as f64
            } else {
                0.0
            }
        })
        .unwrap();
        let pd = real_state_pd(
            &CostSpec::RealSymmetric { tensors: vec![t] },
            &Mat::identity(4, 4),
        );
        assert_eq!(pd.grad_norm, 0.0);
        assert!(pd.pairs.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn real_derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let spec = CostSpec::RealSymmetric {
            tensors: vec![sym_real(&mut rng, 3, 4), sym_real(&mut rng, 3, 4)],
        };
        let obj = f64::objective(&spec).unwrap();
        let q = random_orthogonal(&mut rng, 4);
        let pd = real_state_pd(&spec, &q);
        for i in 0..4 {
            for j in i + 1..4 {
                let mut om = Mat::zeros(4, 4);
                om[(i, j)] = 1.0;
                om[(j, i)] = -1.0;
                let fd = fd_directional(|m| obj.evaluate(m), &q, &(&q * om), 1e-5).unwrap();
                let g = pd.pairs.get(i, j);
                assert!((fd - g).abs() <= 1e-5 * g.abs().max(1.0), "{g} vs {fd}");
            }
        }
        assert!((pd.pair_energy() - pd.grad_norm.powi(2)).abs() <= 1e-10 * pd.grad_norm.powi(2));
    }

    #[test]
    fn basis_identity_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let d = rng.random_range(2..=4);
            let spec = CostSpec::RealSymmetric {
                tensors: vec![sym_real(&mut rng, d, 4)],
            };
            let pd = real_state_pd(&spec, &random_orthogonal(&mut rng, 4));
            assert!(
                (pd.pair_energy() - pd.grad_norm.powi(2)).abs() <= 1e-10 * pd.grad_norm.powi(2)
            );
        }
    }

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> Mat<Complex64> {
        let m = Mat::from_fn(n, n, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        &m + m.adjoint()
    }

    #[test]
    fn exact_jade_diagonalizer_is_stationary() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = random_unitary(&mut rng, 3);
        let d = Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(-2.0, 0.0),
            Complex64::new(0.5, 0.0),
        ]));
        let a = &u * d * u.adjoint();
        let spec = NamedCost::Jade(vec![a]).into_spec().unwrap();
        let obj = Complex64::objective(&spec).unwrap();
        let st = TransformedState::new(&obj, &u).unwrap();
        assert!(riemann_gradient_complex(&st).unwrap().grad_norm <= 1e-10);
    }

    #[test]
    fn complex_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let specs = vec![
            NamedCost::Jade((0..2).map(|_| random_hermitian(&mut rng, 3)).collect())
                .into_spec()
                .unwrap(),
            NamedCost::Complex3(rand_complex_tensor(&mut rng, 3, 3))
                .into_spec()
                .unwrap(),
            CostSpec::ComplexGeneral {
                terms: vec![ComplexTerm {
                    tensor: rand_complex_tensor(&mut rng, 3, 3),
                    conj_modes: 2,
                    weight: -0.4,
                }],
            },
        ];
        for spec in specs {
            let obj = Complex64::objective(&spec).unwrap();
            let u = random_unitary(&mut rng, 3);
            let st = TransformedState::new(&obj, &u).unwrap();
            let p = projected_gradient(&st).unwrap();
            for _ in 0..10 {
                let h = Mat::from_fn(3, 3, |_, _| {
                    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                });
                let om = (&h - h.adjoint()) * Complex64::new(0.5, 0.0);
                let fd = fd_directional(|m| obj.evaluate(m), &u, &(&u * &om), 1e-5).unwrap();
                let an: f64 = p
                    .iter()
                    .zip(om.iter())
                    .map(|(a, b)| (a.conj() * b).re)
                    .sum();
                assert!((fd - an).abs() <= 1e-5 * an.abs().max(1.0), "{an} vs {fd}");
            }
            let pd = PairDerivatives::from_projected(&p);
            assert!(
                (pd.pair_energy() - pd.grad_norm.powi(2)).abs() <= 1e-10 * pd.grad_norm.powi(2)
            );
            let fd = projected_gradient_fd(&obj, &u, 1e-5).unwrap();
            assert!((fd - &p).norm() <= 1e-5 * p.norm().max(1.0));
        }
    }

    #[test]
    fn non_phase_invariant_cost_is_rejected() {
        // A trace of a tensor whose pairing is not Hermitian is not phase invariant.
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let b = rand_complex_tensor(&mut rng, 2, 3);
        let obj = Objective::new(vec![crate::cost::Term {
            tensor: b,
            conj_modes: 0,
            weight: 1.0,
            kind: TermKind::Trace,
        }])
        .unwrap();
        let st = TransformedState::new(&obj, &Mat::identity(3, 3)).unwrap();
        assert!(matches!(
            projected_gradient(&st),
            Err(Error::PhaseInvariance(_))
        ));
    }

    #[test]
    fn selection_rules() {
        let mut pd = PairDerivatives {
            group: Group::Orthogonal,
            grad_norm: 0.0,
            pairs: PairTable::zeros(4),
        };
        pd.pairs.set(0, 2, 3.0);
        pd.grad_norm = (pd.pair_energy()).sqrt();
        assert_eq!(jacobi_g_pair(&pd, 0.1, PairStrategy::Max).unwrap(), (0, 2));
        assert_eq!(
            jacobi_g_pair(&pd, 0.1, PairStrategy::FirstCyclic { start: 0 }).unwrap(),
            (0, 2)
        );
        assert_eq!(
            jacobi_g_pair(&pd, 0.1, PairStrategy::FirstCyclic { start: 4 }).unwrap(),
            (0, 2)
        );
        assert!(jacobi_g_pair(&pd, 0.5, PairStrategy::Max).is_err());
        let zero = PairDerivatives {
            group: Group::Orthogonal,
            grad_norm: 0.0,
            pairs: PairTable::zeros(2),
        };
        assert!(matches!(
            jacobi_g_pair(&zero, 0.1, PairStrategy::Max),
            Err(Error::Stationary)
        ));
    }

    #[test]
    fn max_rule_satisfies_inequality_for_every_admissible_delta() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let n = rng.random_range(2..=10);
            let group = if rng.random_bool(0.5) {
                Group::Orthogonal
            } else {
                Group::Unitary
            };
            let mut pairs = PairTable::zeros(n);
            for k in 0..pairs.len() {
                let (i, j) = pairs.pair(k);
                let v: f64 = rng.random_range(-1.0..1.0);
                pairs.set(i, j, if group == Group::Unitary { v.abs() } else { v });
            }
            let mut pd = PairDerivatives {
                group,
                grad_norm: 0.0,
                pairs,
            };
            pd.grad_norm = pd.pair_energy().sqrt();
            let bound = if group == Group::Orthogonal {
                2.0 / n as f64
            } else {
                2f64.sqrt() / n as f64
            };
            let delta = bound * (1.0 - 1e-9);
            let (i, j) = jacobi_g_pair(&pd, delta, PairStrategy::Max).unwrap();
            assert!(pd.measure(i, j) >= delta * pd.grad_norm);
            let start = rng.random_range(0..pd.pairs.len());
            let (i, j) = jacobi_g_pair(&pd, delta, PairStrategy::FirstCyclic { start }).unwrap();
            assert!(pd.measure(i, j) >= delta * pd.grad_norm);
        }
    }
}
