//! Keeping iterates on `O(n)` / `U(n)`.

use crate::scalar::Scalar;
use crate::{Error, Mat, Result};

/// Largest drift accepted by [`reorthonormalize`].
pub const MAX_DRIFT: f64 = 1e-2;

/// `‖XᴴX − I‖_F`.
pub fn drift<T: Scalar>(x: &Mat<T>) -> f64 {
    let mut g = x.adjoint() * x;
    for k in 0..g.nrows() {
        g[(k, k)] -= T::one();
    }
    g.norm()
}

/// Modified Gram–Schmidt on the columns, giving the Q factor of a QR
/// decomposition with positive real diagonal in R.
pub fn gram_schmidt<T: Scalar>(x: &Mat<T>) -> Result<Mat<T>> {
    if x.nrows() != x.ncols() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            got: x.ncols(),
        });
    }
    let n = x.ncols();
    let scale = x.norm().max(f64::MIN_POSITIVE);
    let mut q = x.clone();
    for k in 0..n {
        for p in 0..k {
            let proj = q.column(p).dotc(&q.column(k));
            let col = q.column(p) * proj;
            let mut ck = q.column_mut(k);
            ck -= col;
        }
        let norm = q.column(k).norm();
        if norm <= 1e-8 * scale {
            return Err(Error::Singular);
        }
        q.column_mut(k).unscale_mut(norm);
    }
    Ok(q)
}

/// Projects a slightly drifted iterate back onto the group. Two passes of
/// Gram–Schmidt bring `‖XᴴX − I‖` to rounding level.
pub fn reorthonormalize<T: Scalar>(x: &Mat<T>) -> Result<Mat<T>> {
    let dr = drift(x);
    if !(dr <= MAX_DRIFT) {
        return Err(Error::Drift {
            drift: dr,
            limit: MAX_DRIFT,
        });
    }
    gram_schmidt(&gram_schmidt(x)?)
}
