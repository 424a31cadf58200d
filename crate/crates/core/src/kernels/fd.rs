//! Central finite differences along curves on `O(n)` / `U(n)`.

use super::orth::reorthonormalize;
use crate::scalar::Scalar;
use crate::{Error, Mat, Result};

/// Default step; the central-difference error is `O(step²)`.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// `(f(R(X + tΔ)) − f(R(X − tΔ))) / 2t` with the Gram–Schmidt retraction `R`.
///
/// For a tangent direction `Δ = XΩ` (`Ω` skew) this approximates the
/// directional derivative of `f` on the group with `O(t²)` error.
pub fn fd_directional<T: Scalar>(
    mut fun: impl FnMut(&Mat<T>) -> Result<f64>,
    x: &Mat<T>,
    delta: &Mat<T>,
    step: f64,
) -> Result<f64> {
    if !(step > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "step must be positive, got {step}"
        )));
    }
    if x.shape() != delta.shape() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            got: delta.nrows(),
        });
    }
    let t = T::from_real(step);
    let plus = reorthonormalize(&(x + delta * t))?;
    let minus = reorthonormalize(&(x - delta * t))?;
    Ok((fun(&plus)? - fun(&minus)?) / (2.0 * step))
}
