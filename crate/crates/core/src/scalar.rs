//! Scalar fields and the groups they select.

use std::fmt;

use nalgebra::ComplexField;
use num_complex::Complex64;

use crate::cost::{CostSpec, Objective, TransformedState};
use crate::rotation::ElementaryStep;
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Real,
    Complex,
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Field::Real => "real",
            Field::Complex => "complex",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Orthogonal,
    Unitary,
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Group::Orthogonal => "orthogonal",
            Group::Unitary => "unitary",
        })
    }
}

/// Entry type of tensors and matrices: `f64` or [`Complex64`].
pub trait Scalar:
    ComplexField<RealField = f64> + Copy + fmt::Debug + Send + Sync + 'static
{
    const FIELD: Field;

    /// Builds a scalar from real and imaginary parts. Returns `None` for a
    /// real scalar with a non-zero imaginary part.
    fn from_parts(re: f64, im: f64) -> Option<Self>;

    #[inline]
    fn re(self) -> f64 {
        self.real()
    }

    #[inline]
    fn im(self) -> f64 {
        self.imaginary()
    }

    #[inline]
    fn conj(self) -> Self {
        self.conjugate()
    }

    #[inline]
    fn abs2(self) -> f64 {
        self.modulus_squared()
    }
}

impl Scalar for f64 {
    const FIELD: Field = Field::Real;

    fn from_parts(re: f64, im: f64) -> Option<Self> {
        (im == 0.0).then_some(re)
    }
}

impl Scalar for Complex64 {
    const FIELD: Field = Field::Complex;

    fn from_parts(re: f64, im: f64) -> Option<Self> {
        Some(Complex64::new(re, im))
    }
}

/// A scalar type together with the matrix group it parametrizes and the
/// exact elementary subproblem solver for that group.
pub trait GroupScalar: Scalar {
    const GROUP: Group;
    /// Trace parameters of the identity transform.
    const IDENTITY_PARAMS: [f64; 3];

    /// Lowers a cost specification to the internal term list, failing when
    /// the specification lives on the other group.
    fn objective(spec: &CostSpec) -> Result<Objective<Self>>;

    /// Exclusive upper bound on the Jacobi-G constant `delta` for dimension `n`.
    fn delta_bound(n: usize) -> f64;

    /// Maximizes the restricted cost over the elementary transforms acting on
    /// the `(i, j)` plane (0-based, `i < j`).
    fn solve_pair(
        state: &TransformedState<'_, Self>,
        i: usize,
        j: usize,
        seed: u64,
    ) -> Result<ElementaryStep<Self>>;
}
