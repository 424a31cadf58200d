//! Dense real and complex tensors of arbitrary order over `F^{n×…×n}`.
//!
//! Entries are stored in row-major lexicographic order: the multi-index
//! `(i_0, …, i_{d-1})` lives at offset `Σ_k i_k n^{d-1-k}`. Modes are 0-based.

pub mod io;

use num_complex::Complex64;

use crate::scalar::Scalar;
use crate::{Error, Mat, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor<T> {
    order: usize,
    dim: usize,
    values: Vec<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymmetryKind {
    None,
    /// Invariant under every permutation of indices.
    FullySymmetric,
    /// Order `2d`: `B[I, J] = conj(B[J, I])` for index blocks `I`, `J` of length `d`.
    HermitianPaired,
}

/// Symmetry requirement with a tolerance relative to the Frobenius norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymmetryTag {
    pub kind: SymmetryKind,
    pub tolerance: f64,
}

impl SymmetryTag {
    pub const DEFAULT_TOLERANCE: f64 = 1e-10;

    pub fn new(kind: SymmetryKind) -> Self {
        Self {
            kind,
            tolerance: Self::DEFAULT_TOLERANCE,
        }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }
}

/// Outcome of [`DenseTensor::check_symmetry`]; `max_violation` is absolute.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymmetryReport {
    pub holds: bool,
    pub max_violation: f64,
}

fn checked_len(order: usize, dim: usize) -> Result<usize> {
    if order == 0 || dim == 0 {
        return Err(Error::InvalidTensor(format!(
            "order and dim must be positive (got order {order}, dim {dim})"
        )));
    }
    dim.checked_pow(order as u32)
        .ok_or_else(|| Error::InvalidTensor(format!("{dim}^{order} entries overflow")))
}

impl<T: Scalar> DenseTensor<T> {
    pub fn new(order: usize, dim: usize, values: Vec<T>) -> Result<Self> {
        let len = checked_len(order, dim)?;
        if values.len() != len {
            return Err(Error::InvalidTensor(format!(
                "expected {len} values for order {order} dim {dim}, got {}",
                values.len()
            )));
        }
        if let Some(pos) = values
            .iter()
            .position(|v| !(v.re().is_finite() && v.im().is_finite()))
        {
            return Err(Error::InvalidTensor(format!(
                "non-finite entry at offset {pos}"
            )));
        }
        Ok(Self { order, dim, values })
    }

    pub fn zeros(order: usize, dim: usize) -> Result<Self> {
        let len = checked_len(order, dim)?;
        Ok(Self {
            order,
            dim,
            values: vec![T::zero(); len],
        })
    }

    /// Builds a tensor entrywise from its multi-index.
    pub fn from_fn(order: usize, dim: usize, mut f: impl FnMut(&[usize]) -> T) -> Result<Self> {
        let len = checked_len(order, dim)?;
        let mut idx = vec![0; order];
        let mut values = Vec::with_capacity(len);
        for _ in 0..len {
            values.push(f(&idx));
            increment(&mut idx, dim);
        }
        Self::new(order, dim, values)
    }

    /// Order-2 tensor holding the entries of a square matrix.
    pub fn from_matrix(m: &Mat<T>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        Self::from_fn(2, m.nrows(), |ix| m[(ix[0], ix[1])])
    }

    pub fn to_matrix(&self) -> Result<Mat<T>> {
        if self.order != 2 {
            return Err(Error::InvalidTensor(format!(
                "expected an order-2 tensor, got order {}",
                self.order
            )));
        }
        Ok(Mat::from_row_slice(self.dim, self.dim, &self.values))
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    /// Offset of a multi-index in the value buffer.
    #[inline]
    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.order);
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    #[inline]
    pub fn get(&self, idx: &[usize]) -> T {
        self.values[self.offset(idx)]
    }

    #[inline]
    pub fn set(&mut self, idx: &[usize], v: T) {
        let off = self.offset(idx);
        self.values[off] = v;
    }

    /// Stride of `mode` in the value buffer.
    #[inline]
    pub fn stride(&self, mode: usize) -> usize {
        self.dim.pow((self.order - 1 - mode) as u32)
    }

    /// Offset of the diagonal entry `(p, …, p)`.
    #[inline]
    pub fn diagonal_offset(&self, p: usize) -> usize {
        // Σ_k p n^k = p (n^d - 1)/(n - 1), computed without division.
        (0..self.order).fold(0, |acc, _| acc * self.dim + p)
    }

    /// Entry with every index equal to `p` except `mode`, which is `a`.
    #[inline]
    pub fn near_diagonal(&self, p: usize, mode: usize, a: usize) -> T {
        let stride = self.stride(mode);
        self.values[self.diagonal_offset(p) - p * stride + a * stride]
    }

    /// Mode-`mode` product `(T •_mode M)`: the entry with `i` at position
    /// `mode` is `Σ_l M[i, l] T[…, l, …]`.
    pub fn contract_mode(&self, m: &Mat<T>, mode: usize) -> Result<Self> {
        if mode >= self.order {
            return Err(Error::ModeOutOfRange {
                mode,
                order: self.order,
            });
        }
        if m.nrows() != self.dim || m.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: if m.nrows() != self.dim {
                    m.nrows()
                } else {
                    m.ncols()
                },
            });
        }
        let n = self.dim;
        let inner = self.stride(mode);
        let block = inner * n;
        let outer = self.values.len() / block;
        let mut out = vec![T::zero(); self.values.len()];
        // Mode-`mode` unfolding: each (outer, inner) pair indexes one fiber.
        let mut fiber = vec![T::zero(); n];
        for o in 0..outer {
            let base = o * block;
            for r in 0..inner {
                for (l, f) in fiber.iter_mut().enumerate() {
                    *f = self.values[base + l * inner + r];
                }
                for i in 0..n {
                    let mut acc = T::zero();
                    for (l, &f) in fiber.iter().enumerate() {
                        acc += m[(i, l)] * f;
                    }
                    out[base + i * inner + r] = acc;
                }
            }
        }
        Ok(Self {
            order: self.order,
            dim: self.dim,
            values: out,
        })
    }

    /// Applies, in place, a mode product whose matrix equals the identity
    /// outside rows and columns `i`, `j`; `block` holds
    /// `[[M_ii, M_ij], [M_ji, M_jj]]`. Only fibers entries at `i` and `j` move.
    pub fn rotate_plane_mode(&mut self, mode: usize, i: usize, j: usize, block: [[T; 2]; 2]) {
        let n = self.dim;
        let inner = self.stride(mode);
        let blk = inner * n;
        let outer = self.values.len() / blk;
        for o in 0..outer {
            let base = o * blk;
            for r in 0..inner {
                let pi = base + i * inner + r;
                let pj = base + j * inner + r;
                let (vi, vj) = (self.values[pi], self.values[pj]);
                self.values[pi] = block[0][0] * vi + block[0][1] * vj;
                self.values[pj] = block[1][0] * vi + block[1][1] * vj;
            }
        }
    }

    /// The `2×…×2` subtensor with every index in `{i, j}` (bit 0 selects `i`,
    /// bit 1 selects `j`), in lexicographic order.
    pub fn plane_subtensor(&self, i: usize, j: usize) -> Vec<T> {
        let d = self.order;
        (0..1usize << d)
            .map(|bits| {
                let off = (0..d).fold(0, |acc, k| {
                    let pick = if (bits >> (d - 1 - k)) & 1 == 0 { i } else { j };
                    acc * self.dim + pick
                });
                self.values[off]
            })
            .collect()
    }

    /// `T •_1 M_1 ⋯ •_d M_d` with `M_p = Uᴴ` on `conj_modes` and `Uᵀ` on `plain_modes`.
    pub fn multi_transform(
        &self,
        u: &Mat<T>,
        conj_modes: &[usize],
        plain_modes: &[usize],
    ) -> Result<Self> {
        let mut seen = vec![false; self.order];
        for &m in conj_modes.iter().chain(plain_modes) {
            if m >= self.order {
                return Err(Error::ModeOutOfRange {
                    mode: m,
                    order: self.order,
                });
            }
            if std::mem::replace(&mut seen[m], true) {
                return Err(Error::InvalidModeSets(format!("mode {m} listed twice")));
            }
        }
        if let Some(m) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidModeSets(format!("mode {m} not covered")));
        }
        let uh = u.adjoint();
        let ut = u.transpose();
        let mut out = self.clone();
        for &m in conj_modes {
            out = out.contract_mode(&uh, m)?;
        }
        for &m in plain_modes {
            out = out.contract_mode(&ut, m)?;
        }
        Ok(out)
    }

    /// Diagonal entries `T[p, …, p]`.
    pub fn diagonal(&self) -> Vec<T> {
        (0..self.dim)
            .map(|p| self.values[self.diagonal_offset(p)])
            .collect()
    }

    /// Sum of the all-indices-equal entries.
    pub fn trace(&self) -> T {
        self.diagonal()
            .into_iter()
            .fold(T::zero(), |acc, v| acc + v)
    }

    pub fn frob_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs2()).sum::<f64>().sqrt()
    }

    pub fn check_symmetry(&self, tag: SymmetryTag) -> Result<SymmetryReport> {
        let max_violation = match tag.kind {
            SymmetryKind::None => 0.0,
            SymmetryKind::FullySymmetric => {
                let mut idx = vec![0; self.order];
                let mut sorted = vec![0; self.order];
                let mut worst = 0.0f64;
                for &v in &self.values {
                    sorted.copy_from_slice(&idx);
                    sorted.sort_unstable();
                    worst = worst.max((v - self.get(&sorted)).abs2().sqrt());
                    increment(&mut idx, self.dim);
                }
                worst
            }
            SymmetryKind::HermitianPaired => {
                if !self.order.is_multiple_of(2) {
                    return Err(Error::InvalidArgument(format!(
                        "hermitian pairing needs an even order, got {}",
                        self.order
                    )));
                }
                let half = self.order / 2;
                let mut idx = vec![0; self.order];
                let mut swapped = vec![0; self.order];
                let mut worst = 0.0f64;
                for &v in &self.values {
                    swapped[..half].copy_from_slice(&idx[half..]);
                    swapped[half..].copy_from_slice(&idx[..half]);
                    worst = worst.max((v - self.get(&swapped).conj()).abs2().sqrt());
                    increment(&mut idx, self.dim);
                }
                worst
            }
        };
        Ok(SymmetryReport {
            holds: max_violation <= tag.tolerance * self.frob_norm(),
            max_violation,
        })
    }

    /// Average over all index permutations.
    pub fn symmetrize(&self) -> Self {
        let perms = permutations(self.order);
        let scale = 1.0 / perms.len() as f64;
        let mut idx = vec![0; self.order];
        let mut permuted = vec![0; self.order];
        let mut values = Vec::with_capacity(self.values.len());
        for _ in 0..self.values.len() {
            let mut acc = T::zero();
            for p in &perms {
                for (k, &pk) in p.iter().enumerate() {
                    permuted[k] = idx[pk];
                }
                acc += self.get(&permuted);
            }
            values.push(acc * T::from_real(scale));
            increment(&mut idx, self.dim);
        }
        Self {
            order: self.order,
            dim: self.dim,
            values,
        }
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            order: self.order,
            dim: self.dim,
            values: self.values.iter().map(|&v| v * s).collect(),
        }
    }
}

impl DenseTensor<f64> {
    pub fn to_complex(&self) -> DenseTensor<Complex64> {
        DenseTensor {
            order: self.order,
            dim: self.dim,
            values: self
                .values
                .iter()
                .map(|&v| Complex64::new(v, 0.0))
                .collect(),
        }
    }
}

/// Advances a multi-index in lexicographic order (last index fastest).
pub(crate) fn increment(idx: &mut [usize], dim: usize) {
    for k in (0..idx.len()).rev() {
        idx[k] += 1;
        if idx[k] < dim {
            return;
        }
        idx[k] = 0;
    }
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for m in 0..used.len() {
            if !used[m] {
                used[m] = true;
                cur.push(m);
                rec(cur, used, out);
                cur.pop();
                used[m] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(k), &mut vec![false; k], &mut out);
    out
}

/// Lifts a real matrix to the complex field.
pub fn complexify(m: &Mat<f64>) -> Mat<Complex64> {
    m.map(|v| Complex64::new(v, 0.0))
}
