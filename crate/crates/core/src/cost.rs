//! Cost functions on `O(n)` and `U(n)`.
//!
//! Three families are supported:
//!
//! * [`CostSpec::RealSymmetric`]: `f(Q) = Σ_ℓ ‖diag(A_ℓ •_1 Qᵀ ⋯ •_d Qᵀ)‖²` for
//!   real symmetric tensors `A_ℓ`;
//! * [`CostSpec::ComplexGeneral`]: `f(U) = Σ_ℓ α_ℓ ‖diag(W_ℓ)‖²` with
//!   `W_ℓ = A_ℓ •_1 Uᴴ ⋯ •_{t_ℓ} Uᴴ •_{t_ℓ+1} Uᵀ ⋯ •_{d_ℓ} Uᵀ`;
//! * [`CostSpec::TraceForm`]: `f(U) = tr(B •_1 Uᴴ ⋯ •_d Uᴴ •_{d+1} Uᵀ ⋯ •_{2d} Uᵀ)`
//!   for a Hermitian-paired tensor `B` of order `2d`.
//!
//! All of them are lowered to an [`Objective`], a flat list of weighted
//! terms, and evaluated through a [`TransformedState`] which caches the
//! transformed tensors so that elementary rotations only touch the slices
//! they change.

use num_complex::Complex64;

use crate::kernels::orth::drift;
use crate::rotation::{GivensRotation, PlaneTransform};
use crate::scalar::{GroupScalar, Scalar};
use crate::tensor::{DenseTensor, SymmetryKind, SymmetryTag};
use crate::{Error, Mat, Result};

/// Relative bound on the imaginary part of a trace-form value.
const TRACE_IMAG_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexTerm {
    pub tensor: DenseTensor<Complex64>,
    /// Number of leading modes contracted with `Uᴴ`.
    pub conj_modes: usize,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CostSpec {
    RealSymmetric { tensors: Vec<DenseTensor<f64>> },
    ComplexGeneral { terms: Vec<ComplexTerm> },
    TraceForm { b: DenseTensor<Complex64> },
}

/// Named special cases of the complex family.
#[derive(Clone, Debug)]
pub enum NamedCost {
    /// `Σ_ℓ ‖diag(Uᴴ A_ℓ U)‖²`.
    Jade(Vec<Mat<Complex64>>),
    /// `‖diag(A •_1 Uᴴ •_2 Uᵀ •_3 Uᵀ)‖²`.
    Complex3(DenseTensor<Complex64>),
    /// `tr(B •_1 Uᴴ •_2 Uᴴ •_3 Uᵀ •_4 Uᵀ)` for Hermitian order-4 `B`.
    Complex4Trace(DenseTensor<Complex64>),
    /// Real symmetric tensors of a common order on `O(n)`.
    RealOrder(Vec<DenseTensor<f64>>),
}

impl NamedCost {
    pub fn into_spec(self) -> Result<CostSpec> {
        let spec = match self {
            NamedCost::Jade(mats) => CostSpec::ComplexGeneral {
                terms: mats
                    .iter()
                    .map(|m| {
                        Ok(ComplexTerm {
                            tensor: DenseTensor::from_matrix(m)?,
                            conj_modes: 1,
                            weight: 1.0,
                        })
                    })
                    .collect::<Result<_>>()?,
            },
            NamedCost::Complex3(tensor) => {
                if tensor.order() != 3 {
                    return Err(Error::InvalidSpec(
                        "Complex3 needs an order-3 tensor".into(),
                    ));
                }
                CostSpec::ComplexGeneral {
                    terms: vec![ComplexTerm {
                        tensor,
                        conj_modes: 1,
                        weight: 1.0,
                    }],
                }
            }
            NamedCost::Complex4Trace(b) => {
                if b.order() != 4 {
                    return Err(Error::InvalidSpec(
                        "Complex4Trace needs an order-4 tensor".into(),
                    ));
                }
                CostSpec::TraceForm { b }
            }
            NamedCost::RealOrder(tensors) => CostSpec::RealSymmetric { tensors },
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl CostSpec {
    /// Checks the structural invariants of the variant.
    pub fn validate(&self) -> Result<()> {
        match self {
            CostSpec::RealSymmetric { tensors } => {
                let first = tensors
                    .first()
                    .ok_or_else(|| Error::InvalidSpec("no tensors".into()))?;
                for (k, t) in tensors.iter().enumerate() {
                    if t.order() != first.order() || t.dim() != first.dim() {
                        return Err(Error::InvalidSpec(format!(
                            "tensor {k} has order {} dim {}, expected order {} dim {}",
                            t.order(),
                            t.dim(),
                            first.order(),
                            first.dim()
                        )));
                    }
                    let rep = t.check_symmetry(SymmetryTag::new(SymmetryKind::FullySymmetric))?;
                    if !rep.holds {
                        return Err(Error::InvalidSpec(format!(
                            "tensor {k} is not symmetric (violation {:e})",
                            rep.max_violation
                        )));
                    }
                }
            }
            CostSpec::ComplexGeneral { terms } => {
                let first = terms
                    .first()
                    .ok_or_else(|| Error::InvalidSpec("no terms".into()))?;
                for (k, term) in terms.iter().enumerate() {
                    if term.tensor.dim() != first.tensor.dim() {
                        return Err(Error::InvalidSpec(format!(
                            "term {k} has dim {}, expected {}",
                            term.tensor.dim(),
                            first.tensor.dim()
                        )));
                    }
                    if term.conj_modes > term.tensor.order() {
                        return Err(Error::InvalidSpec(format!(
                            "term {k}: {} conjugated modes exceed order {}",
                            term.conj_modes,
                            term.tensor.order()
                        )));
                    }
                    if !term.weight.is_finite() {
                        return Err(Error::InvalidSpec(format!("term {k}: non-finite weight")));
                    }
                }
            }
            CostSpec::TraceForm { b } => {
                let rep = b.check_symmetry(SymmetryTag::new(SymmetryKind::HermitianPaired))?;
                if !rep.holds {
                    return Err(Error::InvalidSpec(format!(
                        "trace-form tensor is not Hermitian (violation {:e})",
                        rep.max_violation
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            CostSpec::RealSymmetric { tensors } => tensors.first().map_or(0, |t| t.dim()),
            CostSpec::ComplexGeneral { terms } => terms.first().map_or(0, |t| t.tensor.dim()),
            CostSpec::TraceForm { b } => b.dim(),
        }
    }

    /// Largest tensor order `d` of the cost (half the order of `B` for trace forms).
    pub fn max_order(&self) -> usize {
        match self {
            CostSpec::RealSymmetric { tensors } => {
                tensors.iter().map(|t| t.order()).max().unwrap_or(0)
            }
            CostSpec::ComplexGeneral { terms } => {
                terms.iter().map(|t| t.tensor.order()).max().unwrap_or(0)
            }
            CostSpec::TraceForm { b } => b.order() / 2,
        }
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            CostSpec::RealSymmetric { .. } => "real_symmetric",
            CostSpec::ComplexGeneral { .. } => "complex_general",
            CostSpec::TraceForm { .. } => "trace_form",
        }
    }
}

/// How a term's transformed tensor contributes to the cost.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TermKind {
    /// `α ‖diag(W)‖²`.
    DiagEnergy,
    /// `α Re tr(W)`.
    Trace,
}

#[derive(Clone, Debug)]
pub struct Term<T> {
    pub tensor: DenseTensor<T>,
    pub conj_modes: usize,
    pub weight: f64,
    pub kind: TermKind,
}

impl<T: Scalar> Term<T> {
    #[inline]
    fn contribution(&self, w: T) -> f64 {
        match self.kind {
            TermKind::DiagEnergy => w.abs2(),
            TermKind::Trace => w.re(),
        }
    }
}

/// A cost lowered to weighted terms over a single scalar field.
#[derive(Clone, Debug)]
pub struct Objective<T> {
    dim: usize,
    terms: Vec<Term<T>>,
    scale: f64,
}

impl<T: Scalar> Objective<T> {
    pub fn new(terms: Vec<Term<T>>) -> Result<Self> {
        let dim = terms
            .first()
            .map(|t| t.tensor.dim())
            .ok_or_else(|| Error::InvalidSpec("objective without terms".into()))?;
        if let Some(t) = terms.iter().find(|t| t.tensor.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: t.tensor.dim(),
            });
        }
        let scale = terms
            .iter()
            .map(|t| match t.kind {
                TermKind::DiagEnergy => t.weight.abs() * t.tensor.frob_norm().powi(2),
                TermKind::Trace => t.weight.abs() * t.tensor.frob_norm() * (dim as f64).sqrt(),
            })
            .sum::<f64>();
        Ok(Self { dim, terms, scale })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[Term<T>] {
        &self.terms
    }

    /// Upper bound on `|f|` over the group; used to scale tolerances. At least 1.
    pub fn scale(&self) -> f64 {
        self.scale.max(1.0)
    }

    pub fn max_order(&self) -> usize {
        self.terms
            .iter()
            .map(|t| t.tensor.order())
            .max()
            .unwrap_or(0)
    }

    fn check_matrix(&self, x: &Mat<T>) -> Result<()> {
        if x.nrows() != self.dim || x.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.nrows(),
            });
        }
        let dr = drift(x);
        if dr > 1e-8 {
            log::warn!("evaluating at a matrix {dr:e} away from the group");
        }
        Ok(())
    }

    /// The transformed tensors `W_ℓ` (or `V`) at `x`.
    pub fn transform(&self, x: &Mat<T>) -> Result<Vec<DenseTensor<T>>> {
        self.check_matrix(x)?;
        self.terms
            .iter()
            .map(|t| {
                let d = t.tensor.order();
                let conj: Vec<usize> = (0..t.conj_modes).collect();
                let plain: Vec<usize> = (t.conj_modes..d).collect();
                t.tensor.multi_transform(x, &conj, &plain)
            })
            .collect()
    }

    /// Cost value of already transformed tensors.
    pub fn value_of(&self, ws: &[DenseTensor<T>]) -> Result<f64> {
        let mut total = 0.0;
        let mut imag = 0.0;
        for (term, w) in self.terms.iter().zip(ws) {
            let mut acc = 0.0;
            for p in 0..self.dim {
                let v = w.values()[w.diagonal_offset(p)];
                acc += term.contribution(v);
                if term.kind == TermKind::Trace {
                    imag += term.weight * v.im();
                }
            }
            total += term.weight * acc;
        }
        if imag.abs() > TRACE_IMAG_TOL * self.scale() {
            return Err(Error::NonRealTrace {
                imag,
                scale: self.scale(),
            });
        }
        Ok(total)
    }

    pub fn evaluate(&self, x: &Mat<T>) -> Result<f64> {
        self.value_of(&self.transform(x)?)
    }
}

/// Transformed tensors of an objective at the current iterate. Owned by a
/// single solver and updated in place by elementary rotations.
#[derive(Clone, Debug)]
pub struct TransformedState<'a, T> {
    objective: &'a Objective<T>,
    ws: Vec<DenseTensor<T>>,
}

/// `[[G_ii, G_ij], [G_ji, G_jj]]` of an elementary transform `G(i, j, ·)`.
pub type PlaneBlock<T> = [[T; 2]; 2];

impl<'a, T: Scalar> TransformedState<'a, T> {
    pub fn new(objective: &'a Objective<T>, x: &Mat<T>) -> Result<Self> {
        Ok(Self {
            objective,
            ws: objective.transform(x)?,
        })
    }

    pub fn objective(&self) -> &'a Objective<T> {
        self.objective
    }

    pub fn tensors(&self) -> &[DenseTensor<T>] {
        &self.ws
    }

    pub fn dim(&self) -> usize {
        self.objective.dim
    }

    pub fn value(&self) -> Result<f64> {
        self.objective.value_of(&self.ws)
    }

    /// Recomputes every transformed tensor from scratch at `x`.
    pub fn reset(&mut self, x: &Mat<T>) -> Result<()> {
        self.ws = self.objective.transform(x)?;
        Ok(())
    }

    /// Cost after right-multiplying the iterate by `G(i, j, block)`, computed
    /// from the `2×…×2` plane subtensors of the cached tensors only.
    pub fn restricted_value(&self, i: usize, j: usize, block: &PlaneBlock<T>) -> f64 {
        let mut total = 0.0;
        for (term, w) in self.objective.terms.iter().zip(&self.ws) {
            let (new_i, new_j) = plane_diagonal(w, term.conj_modes, i, j, block);
            let mut acc = 0.0;
            for p in 0..self.objective.dim {
                let v = if p == i {
                    new_i
                } else if p == j {
                    new_j
                } else {
                    w.values()[w.diagonal_offset(p)]
                };
                acc += term.contribution(v);
            }
            total += term.weight * acc;
        }
        total
    }

    /// Right-multiplies the iterate by `G(i, j, block)`: modes contracted
    /// with `Uᴴ` receive `Gᴴ`, the others `Gᵀ`.
    pub fn apply_block(&mut self, i: usize, j: usize, block: &PlaneBlock<T>) {
        let plain = transpose_block(block);
        let conj = conj_block(&plain);
        for (term, w) in self.objective.terms.iter().zip(self.ws.iter_mut()) {
            for mode in 0..w.order() {
                let b = if mode < term.conj_modes { conj } else { plain };
                w.rotate_plane_mode(mode, i, j, b);
            }
        }
    }
}

impl TransformedState<'_, f64> {
    /// `h(θ_m)` on the grid `θ_m = 2πm/N`.
    pub fn restricted_samples(&self, i: usize, j: usize, count: usize) -> Vec<f64> {
        (0..count)
            .map(|m| {
                let theta = std::f64::consts::TAU * m as f64 / count as f64;
                self.restricted_value(i, j, &GivensRotation::new(i, j, theta).block())
            })
            .collect()
    }
}

#[inline]
fn transpose_block<T: Scalar>(b: &PlaneBlock<T>) -> PlaneBlock<T> {
    [[b[0][0], b[1][0]], [b[0][1], b[1][1]]]
}

#[inline]
fn conj_block<T: Scalar>(b: &PlaneBlock<T>) -> PlaneBlock<T> {
    [
        [b[0][0].conj(), b[0][1].conj()],
        [b[1][0].conj(), b[1][1].conj()],
    ]
}

/// New diagonal entries `(W'[i…i], W'[j…j])` after the plane transform.
fn plane_diagonal<T: Scalar>(
    w: &DenseTensor<T>,
    conj_modes: usize,
    i: usize,
    j: usize,
    block: &PlaneBlock<T>,
) -> (T, T) {
    let d = w.order();
    let mut sub = w.plane_subtensor(i, j);
    let plain = transpose_block(block);
    let conj = conj_block(&plain);
    for mode in 0..d {
        let b = if mode < conj_modes { &conj } else { &plain };
        let stride = 1usize << (d - 1 - mode);
        for base in 0..sub.len() {
            if base & stride != 0 {
                continue;
            }
            let (x, y) = (sub[base], sub[base + stride]);
            sub[base] = b[0][0] * x + b[0][1] * y;
            sub[base + stride] = b[1][0] * x + b[1][1] * y;
        }
    }
    (sub[0], sub[sub.len() - 1])
}

/// Cost value at `x`.
pub fn evaluate<T: GroupScalar>(spec: &CostSpec, x: &Mat<T>) -> Result<f64> {
    T::objective(spec)?.evaluate(x)
}

/// The transformed tensors `W_ℓ` (or `V`) at `x`.
pub fn transformed_tensors<T: GroupScalar>(
    spec: &CostSpec,
    x: &Mat<T>,
) -> Result<Vec<DenseTensor<T>>> {
    T::objective(spec)?.transform(x)
}

/// Samples of `h(θ) = f(Q G(i, j, θ))` at `θ_m = 2πm/N`, `m = 0..N`. Indices are 0-based.
pub fn restricted_samples_real(
    spec: &CostSpec,
    q: &Mat<f64>,
    i: usize,
    j: usize,
    count: usize,
) -> Result<Vec<f64>> {
    let obj = f64::objective(spec)?;
    check_pair(obj.dim(), i, j)?;
    let min = 4 * obj.max_order() + 1;
    if count < min {
        return Err(Error::InvalidArgument(format!(
            "{count} samples cannot determine a degree-{} trigonometric polynomial (need {min})",
            2 * obj.max_order()
        )));
    }
    let state = TransformedState::new(&obj, q)?;
    Ok(state.restricted_samples(i, j, count))
}

/// `h(Ψ) = f(U G(i, j, Ψ))`. Indices are 0-based.
pub fn restricted_value_complex(
    spec: &CostSpec,
    u: &Mat<Complex64>,
    i: usize,
    j: usize,
    psi: &PlaneTransform,
) -> Result<f64> {
    let obj = Complex64::objective(spec)?;
    check_pair(obj.dim(), i, j)?;
    psi.check_sphere()?;
    let state = TransformedState::new(&obj, u)?;
    Ok(state.restricted_value(i, j, &psi.block()))
}

pub(crate) fn check_pair(n: usize, i: usize, j: usize) -> Result<()> {
    if i >= j || j >= n {
        return Err(Error::InvalidArgument(format!(
            "pair ({i}, {j}) invalid for dimension {n}"
        )));
    }
    Ok(())
}

/// Builds the Hermitian tensor `B` of order `2d` whose trace form equals the
/// given complex cost on `U(n)`. Terms of order below `d` are padded with
/// identity pairs, which contract to 1 on unitary columns.
pub fn build_hermitian_form(spec: &CostSpec) -> Result<CostSpec> {
    let CostSpec::ComplexGeneral { terms } = spec else {
        return Err(Error::InvalidSpec(
            "hermitian form is built from a complex_general cost".into(),
        ));
    };
    spec.validate()?;
    let n = spec.dim();
    let d = spec.max_order();
    if n > 4 || d > 3 {
        return Err(Error::InvalidArgument(format!(
            "hermitian form limited to n <= 4 and d <= 3 (got n {n}, d {d})"
        )));
    }
    let mut b = DenseTensor::<Complex64>::zeros(2 * d, n)?;
    let mut idx = vec![0usize; 2 * d];
    for term in terms {
        let dl = term.tensor.order();
        let t = term.conj_modes;
        let pad = d - dl;
        let len = n.pow(dl as u32);
        let pad_len = n.pow(pad as u32);
        for (lo, &al) in term.tensor.values().iter().enumerate() {
            let l = unrank(lo, dl, n);
            for (mo, &am) in term.tensor.values().iter().enumerate() {
                let m = unrank(mo, dl, n);
                let coeff = al * am.conj() * term.weight;
                if coeff == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for ko in 0..pad_len {
                    let k = unrank(ko, pad, n);
                    // conj block: (l_1..l_t, m_{t+1}..m_dl, k), plain block: (m_1..m_t, l_{t+1}..l_dl, k)
                    idx[..t].copy_from_slice(&l[..t]);
                    idx[t..dl].copy_from_slice(&m[t..]);
                    idx[dl..d].copy_from_slice(&k);
                    idx[d..d + t].copy_from_slice(&m[..t]);
                    idx[d + t..d + dl].copy_from_slice(&l[t..]);
                    idx[d + dl..].copy_from_slice(&k);
                    let off = b.offset(&idx);
                    let cur = b.values()[off];
                    b.set(&idx, cur + coeff);
                }
            }
            debug_assert!(lo < len);
        }
    }
    Ok(CostSpec::TraceForm { b })
}

fn unrank(mut off: usize, order: usize, n: usize) -> Vec<usize> {
    let mut idx = vec![0; order];
    for k in (0..order).rev() {
        idx[k] = off % n;
        off /= n;
    }
    idx
}
