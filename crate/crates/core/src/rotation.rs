//! Elementary rotations and the exact solvers of their one-pair subproblems.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_8};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cost::{check_pair, CostSpec, Objective, PlaneBlock, Term, TermKind, TransformedState};
use crate::kernels::{dft_fit, sym3_eig, trig_critical_points, TrigPoly};
use crate::scalar::{Group, GroupScalar, Scalar};
use crate::{Error, Mat, Result};

/// Tolerance on `c² + s₁² + s₂² = 1`.
pub const SPHERE_TOL: f64 = 1e-12;
/// Relative value tolerance under which two maximizers count as tied.
pub const TIE_TOL: f64 = 1e-9;
/// Relative round-off floor on predicted gains, per unit of step size.
/// Moves whose gain is below `NOISE_TOL · scale · ‖step‖` are discarded so
/// that rounding cannot select a symmetry-equivalent far rotation.
pub const NOISE_TOL: f64 = 1e-14;
/// Relative residual allowed when certifying a fitted `Γ`.
pub const CERT_TOL: f64 = 1e-9;
/// Number of random plane transforms used to certify `Γ`.
pub const CERT_POINTS: usize = 20;

/// `G(i, j, θ)`: identity except `G_ii = G_jj = cos θ`, `G_ij = sin θ`, `G_ji = −sin θ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GivensRotation {
    pub i: usize,
    pub j: usize,
    pub theta: f64,
}

impl GivensRotation {
    pub fn new(i: usize, j: usize, theta: f64) -> Self {
        Self { i, j, theta }
    }

    pub fn block(&self) -> PlaneBlock<f64> {
        givens_block(self.theta)
    }

    /// Embedding into `n × n`.
    pub fn matrix(&self, n: usize) -> Mat<f64> {
        embed(n, self.i, self.j, &self.block())
    }

    pub fn apply(&self, state: &mut TransformedState<'_, f64>) -> Result<()> {
        check_pair(state.dim(), self.i, self.j)?;
        state.apply_block(self.i, self.j, &self.block());
        Ok(())
    }
}

fn givens_block(theta: f64) -> PlaneBlock<f64> {
    let (s, c) = theta.sin_cos();
    [[c, s], [-s, c]]
}

/// `G(i, j, Ψ)` with `Ψ = [[c, −(s₁ + i s₂)], [s₁ − i s₂, c]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlaneTransform {
    pub i: usize,
    pub j: usize,
    pub c: f64,
    pub s1: f64,
    pub s2: f64,
}

impl PlaneTransform {
    pub fn new(i: usize, j: usize, c: f64, s1: f64, s2: f64) -> Result<Self> {
        if i >= j {
            return Err(Error::InvalidArgument(format!(
                "pair ({i}, {j}) needs i < j"
            )));
        }
        if c < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "c = {c} must be nonnegative"
            )));
        }
        let t = Self { i, j, c, s1, s2 };
        t.check_sphere()?;
        Ok(t)
    }

    pub fn identity(i: usize, j: usize) -> Self {
        Self {
            i,
            j,
            c: 1.0,
            s1: 0.0,
            s2: 0.0,
        }
    }

    /// Uniform on the half sphere `c ≥ 0`.
    pub fn random<R: Rng + ?Sized>(i: usize, j: usize, rng: &mut R) -> Self {
        loop {
            let v: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            let n2: f64 = v.iter().map(|x| x * x).sum();
            if n2 > 1e-4 && n2 <= 1.0 {
                let n = n2.sqrt();
                return Self {
                    i,
                    j,
                    c: v[0].abs() / n,
                    s1: v[1] / n,
                    s2: v[2] / n,
                };
            }
        }
    }

    /// Recovers the transform with `c ≥ 0` from a unit vector `r`.
    pub fn from_r(i: usize, j: usize, r: [f64; 3]) -> Self {
        let c = ((1.0 + r[0]) / 2.0).max(0.0).sqrt().min(1.0);
        let t = r[1].hypot(r[2]);
        // Near the identity `1 − c²` cancels; `‖(r₂, r₃)‖ = 2cs` does not.
        let s = if c > 0.5 {
            t / (2.0 * c)
        } else {
            (1.0 - c * c).max(0.0).sqrt()
        };
        let (s1, s2) = if t > 0.0 {
            (-s * r[1] / t, -s * r[2] / t)
        } else {
            (s, 0.0)
        };
        Self { i, j, c, s1, s2 }
    }

    pub fn check_sphere(&self) -> Result<()> {
        let err = (self.c * self.c + self.s1 * self.s1 + self.s2 * self.s2 - 1.0).abs();
        if !(err <= SPHERE_TOL) {
            return Err(Error::InvalidArgument(format!(
                "plane transform off the unit sphere by {err:e}"
            )));
        }
        Ok(())
    }

    /// `r = (2c² − 1, −2cs₁, −2cs₂)`.
    pub fn r_vector(&self) -> [f64; 3] {
        r_of(self.c, self.s1, self.s2)
    }

    pub fn block(&self) -> PlaneBlock<Complex64> {
        let c = Complex64::new(self.c, 0.0);
        [
            [c, -Complex64::new(self.s1, self.s2)],
            [Complex64::new(self.s1, -self.s2), c],
        ]
    }

    pub fn matrix(&self, n: usize) -> Mat<Complex64> {
        embed(n, self.i, self.j, &self.block())
    }

    pub fn apply(&self, state: &mut TransformedState<'_, Complex64>) -> Result<()> {
        check_pair(state.dim(), self.i, self.j)?;
        self.check_sphere()?;
        state.apply_block(self.i, self.j, &self.block());
        Ok(())
    }
}

fn r_of(c: f64, s1: f64, s2: f64) -> [f64; 3] {
    [2.0 * c * c - 1.0, -2.0 * c * s1, -2.0 * c * s2]
}

fn embed<T: Scalar>(n: usize, i: usize, j: usize, b: &PlaneBlock<T>) -> Mat<T> {
    let mut m = Mat::identity(n, n);
    m[(i, i)] = b[0][0];
    m[(i, j)] = b[0][1];
    m[(j, i)] = b[1][0];
    m[(j, j)] = b[1][1];
    m
}

/// Right-multiplies `x` by the embedded block, touching columns `i` and `j` only.
pub fn apply_to_columns<T: Scalar>(x: &mut Mat<T>, i: usize, j: usize, b: &PlaneBlock<T>) {
    for r in 0..x.nrows() {
        let (xi, xj) = (x[(r, i)], x[(r, j)]);
        x[(r, i)] = xi * b[0][0] + xj * b[1][0];
        x[(r, j)] = xi * b[0][1] + xj * b[1][1];
    }
}

/// Updates cached transformed tensors by an elementary transform.
pub fn apply_rotation<T: Scalar>(
    state: &mut TransformedState<'_, T>,
    i: usize,
    j: usize,
    block: &PlaneBlock<T>,
) -> Result<()> {
    check_pair(state.dim(), i, j)?;
    state.apply_block(i, j, block);
    Ok(())
}

/// Outcome of one elementary subproblem.
#[derive(Clone, Debug, PartialEq)]
pub struct ElementaryStep<T> {
    pub i: usize,
    pub j: usize,
    pub block: PlaneBlock<T>,
    /// `(θ, 0, 0)` on `O(n)`, `(c, s₁, s₂)` on `U(n)`.
    pub params: [f64; 3],
    /// Restricted cost at the returned transform.
    pub h_max: f64,
    /// `h_max − h(identity)`, computed without cancellation.
    pub gain: f64,
}

impl<T: Scalar> ElementaryStep<T> {
    pub fn is_identity(&self) -> bool {
        self.block == [[T::one(), T::zero()], [T::zero(), T::one()]]
    }

    /// `‖G − I‖_F`, which equals `‖XG − X‖_F` for any `X` on the group.
    pub fn step_norm(&self) -> f64 {
        let mut s = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                let id = if r == c { T::one() } else { T::zero() };
                s += (self.block[r][c] - id).abs2();
            }
        }
        s.sqrt()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AngleSolution {
    pub theta: f64,
    pub h_max: f64,
    pub gain: f64,
    pub poly: TrigPoly,
}

/// Exact maximizer of `h(θ) = f(Q G(i, j, θ))` from the cached tensors.
///
/// `h` is fitted as a degree-`2d` trigonometric polynomial from `4d + 1`
/// samples and maximized over its critical points. Among maximizers within
/// [`TIE_TOL`]`·scale` of the best value the smallest `|θ|` wins, `+θ` before
/// `−θ`. The identity is returned when no critical point improves on `h(0)`.
pub fn solve_angle(state: &TransformedState<'_, f64>, i: usize, j: usize) -> Result<AngleSolution> {
    check_pair(state.dim(), i, j)?;
    let obj = state.objective();
    let d = obj.max_order();
    let scale = obj.scale();
    let samples = state.restricted_samples(i, j, 4 * d + 1);
    let poly = dft_fit(&samples, 2 * d)?;
    let h0 = samples[0];
    let identity = AngleSolution {
        theta: 0.0,
        h_max: h0,
        gain: 0.0,
        poly: poly.clone(),
    };
    if poly.derivative_bound() <= 1e-13 * scale {
        return Ok(identity);
    }
    let cands: Vec<(f64, f64)> = trig_critical_points(&poly)?
        .into_iter()
        .map(|t| (t, poly.gain_from_zero(t)))
        .filter(|&(t, g)| g > NOISE_TOL * scale * t.abs())
        .collect();
    let Some(best) = cands.iter().map(|c| c.1).reduce(f64::max) else {
        return Ok(identity);
    };
    let tied: Vec<(f64, f64)> = cands
        .into_iter()
        .filter(|&(_, g)| g >= best - TIE_TOL * scale)
        .collect();
    let min_abs = tied.iter().map(|c| c.0.abs()).fold(f64::INFINITY, f64::min);
    // Angles of equal magnitude may differ in the last bits.
    let (theta, gain) = tied
        .into_iter()
        .filter(|c| c.0.abs() <= min_abs + 1e-9)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .expect("best candidate is within tolerance of itself");
    let h_max = state.restricted_value(i, j, &givens_block(theta));
    Ok(AngleSolution {
        theta,
        h_max,
        gain,
        poly,
    })
}

/// [`solve_angle`] at an arbitrary `Q` for a real symmetric cost.
pub fn solve_angle_real(
    spec: &CostSpec,
    q: &Mat<f64>,
    i: usize,
    j: usize,
) -> Result<AngleSolution> {
    let obj = f64::objective(spec)?;
    let state = TransformedState::new(&obj, q)?;
    solve_angle(&state, i, j)
}

/// The symmetric `Γ` with `h(Ψ) = rᵀΓr` on the `(i, j)` plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaMatrix {
    pub i: usize,
    pub j: usize,
    pub entries: [[f64; 3]; 3],
}

impl GammaMatrix {
    pub fn form(&self, r: &[f64; 3]) -> f64 {
        let g = &self.entries;
        (0..3)
            .map(|a| (0..3).map(|b| r[a] * g[a][b] * r[b]).sum::<f64>())
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.entries
            .iter()
            .flatten()
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    /// `2 (Γ_{2:3,2:3} − Γ₁₁ I₂)`.
    pub fn hessian_surrogate(&self) -> [[f64; 2]; 2] {
        let g = &self.entries;
        [
            [2.0 * (g[1][1] - g[0][0]), 2.0 * g[1][2]],
            [2.0 * g[2][1], 2.0 * (g[2][2] - g[0][0])],
        ]
    }
}

/// Sphere points `(c, s₁, s₂)` used to fit `Γ`. Their images under
/// `r(c, s₁, s₂)` are `e₁, e₂, e₃` and the three normalized bisectors
/// `(e₁+e₂)/√2, (e₁+e₃)/√2, (e₂+e₃)/√2`.
pub fn gamma_fit_points() -> [[f64; 3]; 6] {
    let (c8, s8) = (FRAC_PI_8.cos(), FRAC_PI_8.sin());
    [
        [1.0, 0.0, 0.0],
        [FRAC_1_SQRT_2, -FRAC_1_SQRT_2, 0.0],
        [FRAC_1_SQRT_2, 0.0, -FRAC_1_SQRT_2],
        [c8, -s8, 0.0],
        [c8, 0.0, -s8],
        [FRAC_1_SQRT_2, -0.5, -0.5],
    ]
}

/// Largest `d` for which the restricted cost is a quadratic form in `r`.
pub const GAMMA_MAX_ORDER: usize = 3;

fn effective_order<T: Scalar>(obj: &Objective<T>) -> usize {
    obj.terms()
        .iter()
        .map(|t| match t.kind {
            TermKind::DiagEnergy => t.tensor.order(),
            TermKind::Trace => t.tensor.order() / 2,
        })
        .max()
        .unwrap_or(0)
}

/// Fits `Γ` for the pair `(i, j)` from six restricted evaluations and
/// certifies it at [`CERT_POINTS`] random transforms drawn from `rng`.
pub fn gamma_for_pair<R: Rng + ?Sized>(
    state: &TransformedState<'_, Complex64>,
    i: usize,
    j: usize,
    rng: &mut R,
) -> Result<GammaMatrix> {
    check_pair(state.dim(), i, j)?;
    let d = effective_order(state.objective());
    if d > GAMMA_MAX_ORDER {
        return Err(Error::InvalidArgument(format!(
            "quadratic-form representation needs d <= {GAMMA_MAX_ORDER}, got {d}"
        )));
    }
    let h = |c: f64, s1: f64, s2: f64| {
        let psi = PlaneTransform { i, j, c, s1, s2 };
        state.restricted_value(i, j, &psi.block())
    };
    let v = gamma_fit_points().map(|p| h(p[0], p[1], p[2]));
    let mut g = [[0.0; 3]; 3];
    for k in 0..3 {
        g[k][k] = v[k];
    }
    for (idx, (a, b)) in [(0, 1), (0, 2), (1, 2)].into_iter().enumerate() {
        let off = v[3 + idx] - 0.5 * (v[a] + v[b]);
        g[a][b] = off;
        g[b][a] = off;
    }
    let gamma = GammaMatrix { i, j, entries: g };
    for _ in 0..CERT_POINTS {
        let psi = PlaneTransform::random(i, j, rng);
        let hv = state.restricted_value(i, j, &psi.block());
        let residual = (hv - gamma.form(&psi.r_vector())).abs();
        if residual > CERT_TOL * (1.0 + hv.abs()) {
            return Err(Error::Certification { i, j, residual });
        }
    }
    Ok(gamma)
}

/// [`gamma_for_pair`] at an arbitrary `U` for a complex cost.
pub fn build_gamma(
    spec: &CostSpec,
    u: &Mat<Complex64>,
    i: usize,
    j: usize,
    seed: u64,
) -> Result<GammaMatrix> {
    let obj = Complex64::objective(spec)?;
    let state = TransformedState::new(&obj, u)?;
    gamma_for_pair(&state, i, j, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Maximizer of `rᵀΓr` over the sphere and the maximal value `λ₁(Γ)`.
///
/// Within the top eigenspace the transform closest to the identity is
/// chosen: largest `r₁`, then `s₂ = 0`, then `s₁ ≥ 0`.
pub fn solve_plane_complex(gamma: &GammaMatrix) -> (PlaneTransform, f64) {
    let eig = sym3_eig(&gamma.entries);
    let tol = 1e-10 * (1.0 + gamma.norm());
    let top: Vec<[f64; 3]> = (0..3)
        .filter(|&k| eig.values[k] >= eig.values[0] - tol)
        .map(|k| eig.vectors[k])
        .collect();
    let project = |target: [f64; 3]| -> [f64; 3] {
        let mut p = [0.0; 3];
        for v in &top {
            let dot: f64 = (0..3).map(|k| v[k] * target[k]).sum();
            for k in 0..3 {
                p[k] += dot * v[k];
            }
        }
        p
    };
    let mut r = top[0];
    for target in [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]] {
        let p = project(target);
        let n = p.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-8 {
            r = p.map(|x| x / n);
            break;
        }
    }
    (PlaneTransform::from_r(gamma.i, gamma.j, r), eig.values[0])
}

/// `rᵀΓr − Γ₁₁` written as `2δᵀΓe₁ + δᵀΓδ` with `δ = r − e₁`.
fn gamma_gain(gamma: &GammaMatrix, r: &[f64; 3]) -> f64 {
    let g = &gamma.entries;
    let t2 = r[1] * r[1] + r[2] * r[2];
    // `r₁ − 1 = −(r₂² + r₃²)/(1 + r₁)` on the sphere, without cancellation.
    let d1 = if r[0] > 0.0 {
        -t2 / (1.0 + r[0])
    } else {
        r[0] - 1.0
    };
    let delta = [d1, r[1], r[2]];
    let lin: f64 = (0..3).map(|k| delta[k] * g[k][0]).sum();
    2.0 * lin + gamma.form(&delta)
}

impl GroupScalar for f64 {
    const GROUP: Group = Group::Orthogonal;
    const IDENTITY_PARAMS: [f64; 3] = [0.0; 3];

    fn objective(spec: &CostSpec) -> Result<Objective<Self>> {
        spec.validate()?;
        match spec {
            CostSpec::RealSymmetric { tensors } => Objective::new(
                tensors
                    .iter()
                    .map(|t| Term {
                        tensor: t.clone(),
                        conj_modes: 0,
                        weight: 1.0,
                        kind: TermKind::DiagEnergy,
                    })
                    .collect(),
            ),
            _ => Err(Error::IncompatibleGroup("orthogonal")),
        }
    }

    fn delta_bound(n: usize) -> f64 {
        2.0 / n as f64
    }

    fn solve_pair(
        state: &TransformedState<'_, Self>,
        i: usize,
        j: usize,
        _seed: u64,
    ) -> Result<ElementaryStep<Self>> {
        let sol = solve_angle(state, i, j)?;
        Ok(ElementaryStep {
            i,
            j,
            block: givens_block(sol.theta),
            params: [sol.theta, 0.0, 0.0],
            h_max: sol.h_max,
            gain: sol.gain,
        })
    }
}

impl GroupScalar for Complex64 {
    const GROUP: Group = Group::Unitary;
    const IDENTITY_PARAMS: [f64; 3] = [1.0, 0.0, 0.0];

    fn objective(spec: &CostSpec) -> Result<Objective<Self>> {
        spec.validate()?;
        match spec {
            CostSpec::ComplexGeneral { terms } => Objective::new(
                terms
                    .iter()
                    .map(|t| Term {
                        tensor: t.tensor.clone(),
                        conj_modes: t.conj_modes,
                        weight: t.weight,
                        kind: TermKind::DiagEnergy,
                    })
                    .collect(),
            ),
            CostSpec::TraceForm { b } => Objective::new(vec![Term {
                tensor: b.clone(),
                conj_modes: b.order() / 2,
                weight: 1.0,
                kind: TermKind::Trace,
            }]),
            CostSpec::RealSymmetric { .. } => Err(Error::IncompatibleGroup("unitary")),
        }
    }

    fn delta_bound(n: usize) -> f64 {
        std::f64::consts::SQRT_2 / n as f64
    }

    fn solve_pair(
        state: &TransformedState<'_, Self>,
        i: usize,
        j: usize,
        seed: u64,
    ) -> Result<ElementaryStep<Self>> {
        let gamma = gamma_for_pair(state, i, j, &mut ChaCha8Rng::seed_from_u64(seed))?;
        let (psi, _) = solve_plane_complex(&gamma);
        let gain = gamma_gain(&gamma, &psi.r_vector());
        let r = psi.r_vector();
        let dist = ((r[0] - 1.0).powi(2) + r[1] * r[1] + r[2] * r[2]).sqrt();
        let accept = gain > NOISE_TOL * state.objective().scale() * dist;
        let (psi, gain) = if accept {
            (psi, gain)
        } else {
            (PlaneTransform::identity(i, j), 0.0)
        };
        let block = psi.block();
        Ok(ElementaryStep {
            i,
            j,
            block,
            params: [psi.c, psi.s1, psi.s2],
            h_max: state.restricted_value(i, j, &block),
            gain,
        })
    }
}
