//! Jacobi-type algorithms for joint approximate diagonalization of tensors.
//!
//! Real symmetric tensor families are diagonalized on the orthogonal group
//! `O(n)` by sweeps of Givens rotations; complex families (including the JADE
//! matrix cost and Hermitian trace forms) are diagonalized on the unitary
//! group `U(n)` by elementary plane transformations. Pairs are selected
//! cyclically or by a gradient rule, every elementary subproblem is solved
//! exactly, and the [`diagnostics`] module analyses finished runs.
//!
//! The scalar type of a matrix decides the group: `f64` matrices live on
//! `O(n)`, [`Complex64`] matrices on `U(n)`.

pub mod cost;
pub mod diagnostics;
pub mod driver;
mod error;
pub mod gradient;
pub mod kernels;
pub mod rotation;
pub mod scalar;
pub mod tensor;
#[cfg(test)]
mod testutil;

pub use cost::{ComplexTerm, CostSpec, NamedCost, Objective, TransformedState};
pub use driver::{run, PairRule, RecordLevel, RunStatus, RunTrace, SolverConfig};
pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use scalar::{Field, Group, GroupScalar, Scalar};
pub use tensor::{DenseTensor, SymmetryKind, SymmetryTag};

/// Dense matrix over the scalar `T`.
pub type Mat<T> = nalgebra::DMatrix<T>;
